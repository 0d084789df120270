#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magthermo/bulk.hpp"

namespace magthermo {

/// Cube of side L discretized with n_perp interior points per transverse
/// direction (spacing h = L/(n_perp+1)); the longitudinal direction is kept
/// exact through its Dirichlet levels π²k²/(2L²), k ≤ longitudinal_mode_cap.
struct BoxSpec {
    double side_L = 6.0;
    int n_perp = 59;
    double e_max = 40.0;
    int longitudinal_mode_cap = 1000;

    double h() const { return side_L / (n_perp + 1); }

    /// Throws ResolutionError if h > 0.25, ValidationError for other fields.
    void validate() const;

    /// Spec with n_perp chosen so that h equals `spacing` up to rounding.
    static BoxSpec with_spacing(double side_L, double spacing, double e_max,
                                int longitudinal_mode_cap = 1000);
};

/// e_max = ω/2 + (ln(|z|/ε_tail) + 1)/β, never below the ω/2 + 10/β guard.
double tail_guard_emax(const ThermoPoint& tp, double eps_tail = 1e-12);

enum class Gauge { symmetric, landau };

/// ½(-i∇⊥ - ω a⊥)² on the n_perp × n_perp interior grid with Dirichlet walls,
/// as a 5-point stencil with Peierls link phases. Site (i, j) has index
/// s = j n + i and position (-L/2 + (i+1)h, -L/2 + (j+1)h). Immutable.
class DiscreteHamiltonian2D {
public:
    DiscreteHamiltonian2D(const BoxSpec& spec, double omega, Gauge gauge);

    int n() const { return n_; }
    int dimension() const { return n_ * n_; }
    double h() const { return h_; }
    double omega() const { return omega_; }
    Gauge gauge() const { return gauge_; }
    double diagonal() const { return diag_; }
    double coordinate(int i) const { return -0.5 * side_ + (i + 1) * h_; }

    /// H(s, s+1) and H(s, s+n); zero where the neighbour lies outside.
    cplx hop_x(int s) const { return hop_x_[s]; }
    cplx hop_y(int s) const { return hop_y_[s]; }

    /// y = H x.
    void apply(const cplx* x, cplx* y) const;
    /// y = (∂H/∂ω) x, the exact derivative of the link phases.
    void apply_domega(const cplx* x, cplx* y) const;

    Eigen::MatrixXcd dense() const;
    /// max |H_ij - conj(H_ji)|.
    double hermiticity_defect() const;

private:
    int n_;
    double side_, h_, omega_;
    Gauge gauge_;
    double diag_;
    std::vector<cplx> hop_x_, hop_y_;
    std::vector<double> flux_x_, flux_y_; // link line integrals of a
};

DiscreteHamiltonian2D build_h2d(const BoxSpec& spec, double omega, Gauge gauge = Gauge::symmetric);

enum class SolverKind { automatic, dense, band, lanczos };
std::string to_string(SolverKind kind);

/// Transverse eigenpairs below an energy cut. Vectors (if requested) are
/// columns normalized to Σ|v|² = 1 on the grid.
struct TransverseEigensystem {
    std::vector<double> values;
    Eigen::MatrixXcd vectors;
    std::vector<double> residuals;
    SolverKind solver = SolverKind::dense;
};

/// automatic: band (values only) or dense (with vectors) for n_perp ≤ 100,
/// shift-invert Lanczos with full reorthogonalization above.
/// `seed` fixes the Lanczos start vectors.
TransverseEigensystem solve_transverse(const DiscreteHamiltonian2D& h2d, double e_cut,
                                       bool want_vectors, SolverKind kind = SolverKind::automatic,
                                       std::uint64_t seed = 0x5eed);

/// Sorted 3-D eigenvalues below spec.e_max plus provenance.
struct SpectralResult {
    std::vector<double> eigenvalues;
    std::vector<double> transverse;
    std::vector<double> residuals;
    BoxSpec spec;
    double omega = 0.0;
    std::string solver;
};

/// Optional Weyl tail check: TruncationError if the estimated weight of the
/// discarded levels at (beta_min, z_abs_max) exceeds `rel_limit` of the
/// retained log-sum.
struct TailCheck {
    double beta_min;
    double z_abs_max;
    double rel_limit = 1e-10;
};

struct SpectrumOptions {
    SolverKind solver = SolverKind::automatic;
    std::optional<TailCheck> tail_check;
    std::optional<std::filesystem::path> cache_dir;
    std::uint64_t seed = 0x5eed;
};

/// Combines the transverse levels with the exact longitudinal ones:
/// E = E⊥_j + π²k²/(2L²) < e_max. Negative ω uses the spectrum at |ω|
/// (H(-ω) is the complex conjugate of H(ω)).
SpectralResult spectrum_3d(const BoxSpec& spec, double omega, const SpectrumOptions& opts = {});

/// Weyl estimate of |z| Σ_{E > e_max} e^{-βE} for the free box.
double weyl_tail_weight(const BoxSpec& spec, double beta, double z_abs);

/// P_L = (1/(βL³)) Σ_j ln(1 + z e^{-βE_j}) over retained levels.
cplx pressure_box(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp);

/// ρ_L = β z ∂_z P_L = (1/L³) Σ_j z e^{-βE_j} / (1 + z e^{-βE_j}).
cplx density_box(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp);

/// (1/(βL³)) Σ_{n=1}^{n_max} ((-1)^{n+1} z^n / n) Tr W_L(nβ); requires |z| < 1.
cplx pressure_box_series(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp,
                         int n_max);

/// Tr W_L(β) = Σ_j e^{-βE_j} over retained levels.
double trace_heat(const SpectralResult& sr, double beta);

/// Central-difference policy for ω-derivatives of P_L.
struct StencilPolicy {
    double step = 0.0;   // 0: max(1e-2, (1e-13)^{1/(N+2)})
    double rel_tol = 1e-3;
    double abs_tol = 1e-9;
};

struct SusceptibilityResult {
    cplx value;
    double error_estimate = 0.0;
    double step = 0.0;
    std::vector<double> nodes; // ω values evaluated
};

/// Supplies the spectrum at a (possibly negative) ω.
using SpectrumProvider = std::function<SpectralResult(double omega)>;

SpectrumProvider default_spectrum_provider(const BoxSpec& spec, SpectrumOptions opts = {});

/// ω offsets (multiples of the step) at which P_L is sampled for order N.
std::vector<double> stencil_offsets(int N);

/// χ_L^N = ∂^N P_L/∂ω^N by Richardson-extrapolated central differences at two
/// scales h_ω and h_ω/2. 1 ≤ N ≤ 4. Throws StencilError if the two-scale error
/// estimate exceeds the policy tolerance.
SusceptibilityResult susceptibility_box(const BoxSpec& spec, const ThermoPoint& tp, int N,
                                        const StencilPolicy& policy,
                                        const SpectrumProvider& provider);
SusceptibilityResult susceptibility_box(const BoxSpec& spec, const ThermoPoint& tp, int N,
                                        const StencilPolicy& policy = {});

/// Magnetization by the Hellmann–Feynman sum
/// -(1/L³) Σ_j ⟨ψ_j|∂H/∂ω|ψ_j⟩ z e^{-βE_j} / (1 + z e^{-βE_j}).
cplx magnetization_hellmann_feynman(const BoxSpec& spec, const ThermoPoint& tp,
                                    SolverKind kind = SolverKind::automatic);

/// G_L(x, x', β) = Σ e^{-βE} ψ(x) conj ψ(x') from transverse eigenpairs and
/// exact longitudinal modes; (i, j) are grid indices, x3 in [-L/2, L/2].
cplx reconstruct_kernel(const BoxSpec& spec, const TransverseEigensystem& es, int i, int j,
                        double x3, int ip, int jp, double x3p, double beta);

/// Flat binary spectrum record: "MGSPEC1", L f64, n_perp u32, ω f64,
/// e_max f64, count u64 (little-endian), then count f64 eigenvalues.
void save_spectrum(const SpectralResult& sr, const std::filesystem::path& path);
SpectralResult load_spectrum(const std::filesystem::path& path);

} // namespace magthermo
