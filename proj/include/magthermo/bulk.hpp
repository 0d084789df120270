#pragma once

#include <complex>

#include "magthermo/fermi.hpp"
#include "magthermo/taylor_jet.hpp"

namespace magthermo {

/// Evaluation point (β, z, ω) in units ħ = m = k_B = 1 with ω the Larmor
/// frequency. Construction validates β > 0, ω ≥ 0 and z ∈ C \ (-∞, -e^{βω/2}].
class ThermoPoint {
public:
    ThermoPoint(double beta, cplx z, double omega);

    double beta() const { return beta_; }
    cplx z() const { return z_; }
    double omega() const { return omega_; }
    double cut_end() const;

    ThermoPoint with_omega(double omega) const { return {beta_, z_, omega}; }
    ThermoPoint with_z(cplx z) const { return {beta_, z, omega_}; }

private:
    double beta_;
    cplx z_;
    double omega_;
};

/// Truncation policy for the Landau-level sum.
struct LandauSumPolicy {
    int level_cap = 2'000'000;
    /// Relative bound on the discarded Landau tail.
    double tail_tol = 1e-14;
    /// Below ωβ = small_omega_threshold (i.e. ω ≤ threshold/β) the ω-even
    /// small-field expansion replaces the Landau sum.
    double small_omega_threshold = 1e-3;

    void validate() const;
};

/// P_∞(β, z, ω): Landau sum ω(2πβ)^{-3/2} Σ_k f_{3/2}(z e^{-(k+½)ωβ}) for
/// ωβ above the threshold, zero-field formula plus the analytic ω² and ω⁴
/// corrections below it.
cplx pressure_bulk(const ThermoPoint& tp, const LandauSumPolicy& policy = {});

/// ρ_∞ = β z ∂_z P_∞, termwise through z ∂_z f_α = f_{α-1}.
cplx density_bulk(const ThermoPoint& tp, const LandauSumPolicy& policy = {});

/// Taylor jet of P_∞ in ω around tp.omega() up to `order` (≤ TaylorJet::max_order).
TaylorJet pressure_bulk_jet(const ThermoPoint& tp, std::size_t order,
                            const LandauSumPolicy& policy = {});

/// χ_∞^N = ∂^N P_∞ / ∂ω^N at tp.omega(), 1 ≤ N ≤ 8 (OrderError otherwise).
cplx susceptibility_bulk(const ThermoPoint& tp, int N, const LandauSumPolicy& policy = {});

/// (1/β) Σ_{n=1}^{n_max} ((-1)^{n+1} z^n / n) G_diag(nβ, ω); requires |z| < 1.
cplx pressure_series_smallz(const ThermoPoint& tp, int n_max);

/// Truncation bound of pressure_series_smallz:
/// |z|^{n_max+1}/(1-|z|) · G_diag((n_max+1)β, ω)/β.
double pressure_series_smallz_bound(const ThermoPoint& tp, int n_max);

} // namespace magthermo
