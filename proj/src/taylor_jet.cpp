#include "magthermo/taylor_jet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "magthermo/errors.hpp"

namespace magthermo {

namespace {

void check_order(std::size_t order) {
    if (order > TaylorJet::max_order)
        throw OrderError("jet order " + std::to_string(order) + " exceeds cap " +
                         std::to_string(TaylorJet::max_order));
}

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
    return f;
}

} // namespace

TaylorJet::TaylorJet(std::size_t order, double base) : coeffs_(order + 1), base_(base) {
    check_order(order);
}

TaylorJet::TaylorJet(std::vector<cplx> coefficients, double base)
    : coeffs_(std::move(coefficients)), base_(base) {
    if (coeffs_.empty()) throw OrderError("jet needs at least one coefficient");
    check_order(coeffs_.size() - 1);
}

TaylorJet TaylorJet::variable(double base, std::size_t order) {
    TaylorJet j(order, base);
    j[0] = base;
    if (order >= 1) j[1] = 1.0;
    return j;
}

TaylorJet TaylorJet::constant(cplx value, std::size_t order, double base) {
    TaylorJet j(order, base);
    j[0] = value;
    return j;
}

cplx TaylorJet::derivative(std::size_t n) const {
    if (n > order()) throw OrderError("derivative order above jet order");
    return factorial(n) * coeffs_[n];
}

TaylorJet& TaylorJet::operator+=(const TaylorJet& rhs) {
    coeffs_.resize(std::min(coeffs_.size(), rhs.coeffs_.size()));
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += rhs.coeffs_[k];
    return *this;
}

TaylorJet& TaylorJet::operator-=(const TaylorJet& rhs) {
    coeffs_.resize(std::min(coeffs_.size(), rhs.coeffs_.size()));
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= rhs.coeffs_[k];
    return *this;
}

TaylorJet& TaylorJet::operator*=(const TaylorJet& rhs) {
    const std::size_t n = std::min(coeffs_.size(), rhs.coeffs_.size());
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i <= k; ++i) out[k] += coeffs_[i] * rhs.coeffs_[k - i];
    coeffs_ = std::move(out);
    return *this;
}

TaylorJet& TaylorJet::operator*=(cplx s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
}

TaylorJet& TaylorJet::operator+=(cplx s) {
    coeffs_[0] += s;
    return *this;
}

// y = exp(x): y' = x' y  =>  k y_k = sum_{i=1}^{k} i x_i y_{k-i}
TaylorJet exp(const TaylorJet& x) {
    TaylorJet y(x.order(), x.base());
    y[0] = std::exp(x[0]);
    for (std::size_t k = 1; k <= x.order(); ++k) {
        cplx s = 0.0;
        for (std::size_t i = 1; i <= k; ++i) s += static_cast<double>(i) * x[i] * y[k - i];
        y[k] = s / static_cast<double>(k);
    }
    return y;
}

// y = log(x): x y' = x'  =>  k x_0 y_k = k x_k - sum_{i=1}^{k-1} i y_i x_{k-i}
TaylorJet log(const TaylorJet& x) {
    if (x[0] == cplx(0.0)) throw DomainError("log of a jet with zero constant term");
    TaylorJet y(x.order(), x.base());
    y[0] = std::log(x[0]);
    for (std::size_t k = 1; k <= x.order(); ++k) {
        cplx s = static_cast<double>(k) * x[k];
        for (std::size_t i = 1; i < k; ++i) s -= static_cast<double>(i) * y[i] * x[k - i];
        y[k] = s / (static_cast<double>(k) * x[0]);
    }
    return y;
}

} // namespace magthermo
