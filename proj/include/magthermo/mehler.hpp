#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace magthermo {

using cplx = std::complex<double>;

/// Point (or displacement) in R^3.
struct Point3 {
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;

    friend Point3 operator+(Point3 a, Point3 b) { return {a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3}; }
    friend Point3 operator-(Point3 a, Point3 b) { return {a.x1 - b.x1, a.x2 - b.x2, a.x3 - b.x3}; }
    friend Point3 operator*(double s, Point3 a) { return {s * a.x1, s * a.x2, s * a.x3}; }
    friend bool operator==(const Point3&, const Point3&) = default;
};

double dot(Point3 a, Point3 b);
double norm(Point3 a);

/// Symmetric-gauge vector potential a(x) = (1/2) e3 ∧ x = (-x2/2, x1/2, 0).
Point3 vector_potential(Point3 x);

/// Magnetic phase φ(x, y) = (1/2) e3 · (y ∧ x); antisymmetric in (x, y).
double phase_phi(Point3 x, Point3 y);

/// Triangle flux fl(x, y, z) = φ(x,y) + φ(y,z) + φ(z,x).
double flux_fl(Point3 x, Point3 y, Point3 z);

/// Polyline flux Fl_n(x, y_1..y_n) = Σ_{k<n} fl(x, y_k, y_{k+1}); zero for n = 1.
/// Throws ArityError if ys.size() != n.
double flux_Fl(Point3 x, std::span<const Point3> ys, int n);

/// 1 iff the entries of `tuple` (each 1 or 2) sum to N.
int composition_coeff(int N, std::span<const int> tuple);

/// Σ_{n=1}^{N} #{(i_1..i_n) ∈ {1,2}^n : composition_coeff(N, ·) = 1}, by
/// exhaustive enumeration.
std::uint64_t count_accepted_tuples(int N);

/// Heat-kernel value together with its free Gaussian envelope.
struct KernelSample {
    cplx value;
    double envelope = 0.0; // (2πβ)^{-3/2} exp(-|x-x'|²/(2β))
};

/// Free heat kernel (2πβ)^{-3/2} exp(-|x-x'|²/(2β)).
double free_kernel(Point3 x, Point3 xp, double beta);

/// Diagonal of the magnetic heat kernel, (2πβ)^{-3/2} (ωβ/2)/sinh(ωβ/2).
double heat_diagonal(double beta, double omega);

/// ∂_ω of heat_diagonal, (2πβ)^{-3/2} (β/2)(sinh s - s cosh s)/sinh² s, s = ωβ/2.
double heat_diagonal_domega(double beta, double omega);

/// Infinite-volume magnetic heat kernel (Mehler kernel) in the symmetric
/// gauge:
///
///   G(x,x',β,ω) = (2πβ)^{-1/2} e^{-(x3-x3')²/(2β)}
///               · ω/(4π sinh(ωβ/2)) · e^{-(ω/4) coth(ωβ/2) |x⊥-x⊥'|²}
///               · e^{iωφ(x,x')}
///
/// The phase e^{+iωφ(x,x')} is the straight-line integral of a from x' to x;
/// it makes the kernel Hermitian, solves ∂_β G = -½(-i∇_x - ωa(x))² G, and
/// composes under the semigroup law.
KernelSample mehler(Point3 x, Point3 xp, double beta, double omega);

/// |value| ≤ envelope (1 + rel_tol).
bool diamagnetic_check(const KernelSample& s, double rel_tol = 1e-12);

/// R_1(y,x,τ,ω) = a(y-x)·(i∇_y + ω a(y)) G(y,x,τ,ω) and
/// R_2(y,x,τ,ω) = ½ a(y-x)² G(y,x,τ,ω), gradient in closed form.
struct GradKernels {
    cplx r1;
    cplx r2;
};
GradKernels mehler_grad_kernels(Point3 y, Point3 x, double tau, double omega);

/// Closed-form (i∇_y + ω a(y)) G(y,x,τ,ω) as a complex 3-vector.
std::array<cplx, 3> covariant_gradient(Point3 y, Point3 x, double tau, double omega);

struct FirstOrderPolicy {
    int tau_nodes = 48;      // Gauss–Legendre in u, τ = β u²
    int space_nodes = 20;    // Gauss–Hermite per dimension
    double tol = 1e-3;       // accepted relative quadrature error estimate
    bool monte_carlo_fallback = true;
    std::uint64_t mc_samples = 400000;
    std::uint64_t seed = 12345;
};

struct FirstOrderReport {
    double analytic = 0.0;
    double quadrature = 0.0;
    double rel_error = 0.0;
    double error_estimate = 0.0;
    std::uint64_t nodes = 0;
    bool monte_carlo = false;
};

/// Evaluates -∫_0^β dτ ∫_{R³} dy G(0,y,β-τ,ω₀) R_1(y,0,τ,ω₀), the one-vertex
/// Duhamel term of ∂_ω G(0,0,β,ω₀), and compares it with heat_diagonal_domega.
/// Requires 0 < β ≤ 4 and 0 ≤ ω₀ ≤ 4. Throws QuadratureError if neither the
/// tensor rule nor the Monte Carlo fallback meets `policy.tol`.
FirstOrderReport first_order_term_verify(double omega0, double beta,
                                         const FirstOrderPolicy& policy = {});

/// Relative residual |∫ G(x,y,s) G(y,z,t) dy - G(x,z,s+t)| / |G(x,z,s+t)| using
/// a tensor Gauss–Hermite rule with `nodes` points per dimension.
double semigroup_residual(Point3 x, Point3 z, double s, double t, double omega, int nodes = 40);

} // namespace magthermo
