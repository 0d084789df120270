#include "magthermo/bulk.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "magthermo/errors.hpp"
#include "magthermo/mehler.hpp"

namespace magthermo {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr int max_susceptibility_order = 8;

// Taylor coefficients of s / sinh(s) = Σ_j c_j s^{2j}, c_j = (2 - 2^{2j}) B_{2j} / (2j)!.
constexpr std::array<double, 7> bernoulli_even{1.0,          1.0 / 6.0,  -1.0 / 30.0, 1.0 / 42.0,
                                               -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0};

double s_over_sinh_coeff(int j) {
    double fact = 1.0;
    for (int k = 2; k <= 2 * j; ++k) fact *= k;
    return (2.0 - std::pow(2.0, 2 * j)) * bernoulli_even[static_cast<std::size_t>(j)] / fact;
}

// Σ_k f_{ν}(z e^{-(k+½)βω}) as a jet in ω, ν = 3/2 - shift.
TaylorJet landau_sum_jet(const ThermoPoint& tp, std::size_t order, double nu,
                         const LandauSumPolicy& policy) {
    const double beta = tp.beta();
    const double omega = tp.omega();
    const TaylorJet w = TaylorJet::variable(omega, order);
    TaylorJet acc(order, omega);
    const double z_abs = std::abs(tp.z());
    const double step = std::exp(-omega * beta);
    for (int k = 0; k < policy.level_cap; ++k) {
        const double c = (k + 0.5) * beta;
        const TaylorJet arg = exp(w * cplx(-c)) * tp.z();
        acc += fermi_f_jet(nu, arg);

        // Tail over levels > k: |f(w)| ≤ |w|/(1-|w|) summed geometrically, with
        // (1 + c)^order covering the derivative factors.
        const double next_abs = z_abs * std::exp(-(k + 1.5) * omega * beta);
        if (next_abs < 0.5) {
            const double c_next = c + beta;
            const double tail = next_abs / ((1.0 - next_abs) * (1.0 - step)) *
                                std::pow(1.0 + c_next, static_cast<double>(order));
            const bool decreasing = c_next * omega >= static_cast<double>(order);
            if (decreasing && tail <= policy.tail_tol * std::abs(acc[0])) return acc;
        }
    }
    throw TruncationError("Landau sum reached level_cap " + std::to_string(policy.level_cap) +
                          " before the tail tolerance");
}

// Σ_j c_j (β/2)^{2j} f_{ν-2j}(z) ω^{2j} as a jet, exact in ω up to the
// truncation degree 2J.
TaylorJet small_field_jet(const ThermoPoint& tp, std::size_t order, double nu) {
    const double beta = tp.beta();
    const int terms = std::max(2, static_cast<int>((order + 5) / 2));
    const int J = std::min(terms, static_cast<int>(bernoulli_even.size()) - 1);
    const TaylorJet w = TaylorJet::variable(tp.omega(), order);
    const TaylorJet w2 = w * w;
    TaylorJet power = TaylorJet::constant(1.0, order, tp.omega());
    TaylorJet acc(order, tp.omega());
    for (int j = 0; j <= J; ++j) {
        if (j > 0) power *= w2;
        const cplx coeff = s_over_sinh_coeff(j) * std::pow(0.5 * beta, 2 * j) *
                           fermi_any_order(nu - 2.0 * j, tp.z());
        acc += power * coeff;
    }
    return acc;
}

bool use_small_field(const ThermoPoint& tp, const LandauSumPolicy& policy) {
    if (tp.omega() * tp.beta() > policy.small_omega_threshold) return false;
    // The zero-field Fermi functions have their own cut at -1; between -1 and
    // -e^{βω/2} only the Landau sum is defined.
    return CutPlaneFugacity::distance_to_cut(tp.z(), 1.0) >= CutPlaneFugacity::min_cut_distance;
}

// Shared driver: shift = 0 gives the pressure, shift = 1 gives the density.
TaylorJet bulk_jet(const ThermoPoint& tp, std::size_t order, int shift,
                   const LandauSumPolicy& policy) {
    policy.validate();
    if (order > TaylorJet::max_order) throw OrderError("jet order above cap");
    const double beta = tp.beta();
    const double thermal = std::pow(two_pi * beta, -1.5);
    if (tp.z() == cplx(0.0)) return TaylorJet(order, tp.omega());

    if (use_small_field(tp, policy)) {
        // P = β^{-1}(2πβ)^{-3/2} Σ ..., ρ = (2πβ)^{-3/2} Σ ...
        const double pref = shift == 0 ? thermal / beta : thermal;
        return small_field_jet(tp, order, 2.5 - shift) * cplx(pref);
    }
    const double pref = shift == 0 ? thermal : beta * thermal;
    const TaylorJet w = TaylorJet::variable(tp.omega(), order);
    return w * landau_sum_jet(tp, order, 1.5 - shift, policy) * cplx(pref);
}

} // namespace

ThermoPoint::ThermoPoint(double beta, cplx z, double omega) : beta_(beta), z_(z), omega_(omega) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
    if (!(omega >= 0.0) || !std::isfinite(omega))
        throw DomainError("omega must be non-negative and finite");
    CutPlaneFugacity(z, cut_end()); // validates D-membership
}

double ThermoPoint::cut_end() const { return std::exp(0.5 * beta_ * omega_); }

void LandauSumPolicy::validate() const {
    if (level_cap < 16) throw ValidationError("level_cap must be at least 16");
    if (!(tail_tol > 0.0) || tail_tol > 1e-6) throw ValidationError("tail_tol must lie in (0, 1e-6]");
    if (!(small_omega_threshold > 0.0)) throw ValidationError("small_omega_threshold must be positive");
}

cplx pressure_bulk(const ThermoPoint& tp, const LandauSumPolicy& policy) {
    return bulk_jet(tp, 0, 0, policy).value();
}

cplx density_bulk(const ThermoPoint& tp, const LandauSumPolicy& policy) {
    return bulk_jet(tp, 0, 1, policy).value();
}

TaylorJet pressure_bulk_jet(const ThermoPoint& tp, std::size_t order,
                            const LandauSumPolicy& policy) {
    return bulk_jet(tp, order, 0, policy);
}

cplx susceptibility_bulk(const ThermoPoint& tp, int N, const LandauSumPolicy& policy) {
    if (N < 1 || N > max_susceptibility_order)
        throw OrderError("susceptibility order must lie in [1, 8], got " + std::to_string(N));
    return pressure_bulk_jet(tp, static_cast<std::size_t>(N), policy).derivative(N);
}

cplx pressure_series_smallz(const ThermoPoint& tp, int n_max) {
    if (std::abs(tp.z()) >= 1.0) throw DomainError("small-z series needs |z| < 1");
    if (n_max < 1) throw ValidationError("n_max must be at least 1");
    cplx sum = 0.0;
    cplx zn = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        zn *= tp.z();
        const double sign = (n % 2 == 1) ? 1.0 : -1.0;
        sum += sign * zn / static_cast<double>(n) * heat_diagonal(n * tp.beta(), tp.omega());
    }
    return sum / tp.beta();
}

double pressure_series_smallz_bound(const ThermoPoint& tp, int n_max) {
    const double r = std::abs(tp.z());
    return std::pow(r, n_max + 1) / (1.0 - r) * heat_diagonal((n_max + 1) * tp.beta(), tp.omega()) /
           tp.beta();
}

} // namespace magthermo
