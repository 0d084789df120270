#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace magthermo {

using cplx = std::complex<double>;

/// Truncated Taylor series in the field variable ω around a base point ω₀.
/// Coefficient k holds (1/k!) ∂^k/∂ω^k of the represented quantity, so the
/// N-th derivative is N! * coeff(N). Arithmetic truncates at the smaller
/// order of the two operands.
class TaylorJet {
public:
    static constexpr std::size_t max_order = 12;

    TaylorJet() : TaylorJet(0) {}
    /// Zero jet of the given order. Throws OrderError above max_order.
    explicit TaylorJet(std::size_t order, double base = 0.0);
    TaylorJet(std::vector<cplx> coefficients, double base);

    /// The independent variable itself: (ω₀, 1, 0, ...).
    static TaylorJet variable(double base, std::size_t order);
    static TaylorJet constant(cplx value, std::size_t order, double base = 0.0);

    std::size_t order() const { return coeffs_.size() - 1; }
    double base() const { return base_; }
    const std::vector<cplx>& coefficients() const { return coeffs_; }
    cplx operator[](std::size_t k) const { return coeffs_[k]; }
    cplx& operator[](std::size_t k) { return coeffs_[k]; }
    cplx value() const { return coeffs_.front(); }

    /// ∂^n/∂ω^n at the base point.
    cplx derivative(std::size_t n) const;

    TaylorJet& operator+=(const TaylorJet& rhs);
    TaylorJet& operator-=(const TaylorJet& rhs);
    TaylorJet& operator*=(const TaylorJet& rhs);
    TaylorJet& operator*=(cplx s);
    TaylorJet& operator+=(cplx s);

    friend TaylorJet operator+(TaylorJet a, const TaylorJet& b) { return a += b; }
    friend TaylorJet operator-(TaylorJet a, const TaylorJet& b) { return a -= b; }
    friend TaylorJet operator*(TaylorJet a, const TaylorJet& b) { return a *= b; }
    friend TaylorJet operator*(TaylorJet a, cplx s) { return a *= s; }
    friend TaylorJet operator*(cplx s, TaylorJet a) { return a *= s; }
    friend TaylorJet operator+(TaylorJet a, cplx s) { return a += s; }

private:
    std::vector<cplx> coeffs_;
    double base_ = 0.0;
};

TaylorJet exp(const TaylorJet& x);
/// Principal log; the zeroth coefficient must be nonzero.
TaylorJet log(const TaylorJet& x);

} // namespace magthermo
