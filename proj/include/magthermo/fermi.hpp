#pragma once

#include <complex>

#include "magthermo/taylor_jet.hpp"

namespace magthermo {

/// Fugacity restricted to the cut plane C \ (-inf, -cut_end].
///
/// Construction rejects points on the excluded ray and points closer to it
/// than `min_cut_distance`; near-cut evaluations are treated as errors rather
/// than assigned to one side of the branch.
class CutPlaneFugacity {
public:
    static constexpr double min_cut_distance = 1e-6;

    explicit CutPlaneFugacity(cplx value, double cut_end = 1.0);

    cplx value() const { return value_; }
    double cut_end() const { return cut_end_; }

    /// Euclidean distance from `z` to the ray (-inf, -cut_end].
    static double distance_to_cut(cplx z, double cut_end);

private:
    cplx value_;
    double cut_end_;
};

/// Fermi function f_α(z) = Σ_{n≥1} (-1)^{n+1} z^n / n^α, continued to the cut
/// plane through its integral representation. Requires α > 0 and a fugacity
/// built with cut_end = 1.
cplx fermi_f(double alpha, const CutPlaneFugacity& z);

/// f_ν(z) for any real order ν, including ν ≤ 0 (z ∂_z f_ν = f_{ν-1}). Non-positive integer orders are rational in z.
/// Only rejects points exactly on the cut; callers validate proximity.
cplx fermi_any_order(double nu, cplx z);

/// Individual evaluation routes, exposed for the overlap consistency checks.
namespace fermi_detail {
/// Alternating power series; requires |z| < 1.
cplx series(double nu, cplx z);
/// (1/Γ(a)) ∫_0^∞ t^{a-1} f_{-m}(z e^{-t}) dt with a ∈ (0, ∞), m ≥ 0, which
/// equals f_{a-m}(z). Throws ConvergenceError if the adaptive quadrature
/// misses its error target.
cplx integral(double a, int m, cplx z);
/// f_{-m}(z) in closed form (polynomial in z/(1+z)).
cplx negative_integer(int m, cplx z);
} // namespace fermi_detail

/// Taylor expansion of f_α(arg(ω)) for a jet-valued argument, by the chain
/// rule through z ∂_z f_α = f_{α-1}.
TaylorJet fermi_f_jet(double alpha, const TaylorJet& arg);

} // namespace magthermo
