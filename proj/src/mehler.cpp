#include "magthermo/mehler.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "magthermo/errors.hpp"
#include "magthermo/quadrature.hpp"

namespace magthermo {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// s / sinh(s) and s coth(s), accurate near 0 and without overflow for large s.
double s_over_sinh(double s) {
    const double a = std::abs(s);
    if (a < 1e-4) return 1.0 - s * s / 6.0 + 7.0 * s * s * s * s / 360.0;
    if (a > 700.0) return 2.0 * a * std::exp(-a);
    return s / std::sinh(s);
}

double s_coth(double s) {
    if (std::abs(s) < 1e-4) return 1.0 + s * s / 3.0;
    return s / std::tanh(s);
}

// (ω/4) coth(ωβ/2), the transverse Gaussian rate; 1/(2β) at ω = 0.
double transverse_rate(double beta, double omega) {
    return s_coth(0.5 * omega * beta) / (2.0 * beta);
}

} // namespace

double dot(Point3 a, Point3 b) { return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3; }
double norm(Point3 a) { return std::sqrt(dot(a, a)); }

Point3 vector_potential(Point3 x) { return {-0.5 * x.x2, 0.5 * x.x1, 0.0}; }

double phase_phi(Point3 x, Point3 y) {
    // e3 · (y ∧ x) = y1 x2 - y2 x1
    return 0.5 * (y.x1 * x.x2 - y.x2 * x.x1);
}

double flux_fl(Point3 x, Point3 y, Point3 z) {
    return phase_phi(x, y) + phase_phi(y, z) + phase_phi(z, x);
}

double flux_Fl(Point3 x, std::span<const Point3> ys, int n) {
    if (n < 1 || ys.size() != static_cast<std::size_t>(n))
        throw ArityError("Fl_n expects exactly n = " + std::to_string(n) + " points, got " +
                         std::to_string(ys.size()));
    double total = 0.0;
    for (int k = 0; k + 1 < n; ++k) total += flux_fl(x, ys[k], ys[k + 1]);
    return total;
}

int composition_coeff(int N, std::span<const int> tuple) {
    int sum = 0;
    for (int i : tuple) sum += i;
    return sum == N ? 1 : 0;
}

std::uint64_t count_accepted_tuples(int N) {
    std::uint64_t count = 0;
    std::vector<int> tuple;
    for (int n = 1; n <= N; ++n) {
        tuple.assign(n, 1);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            for (int k = 0; k < n; ++k) tuple[k] = ((mask >> k) & 1u) ? 2 : 1;
            count += static_cast<std::uint64_t>(composition_coeff(N, tuple));
        }
    }
    return count;
}

double free_kernel(Point3 x, Point3 xp, double beta) {
    const Point3 d = x - xp;
    return std::pow(two_pi * beta, -1.5) * std::exp(-dot(d, d) / (2.0 * beta));
}

double heat_diagonal(double beta, double omega) {
    return std::pow(two_pi * beta, -1.5) * s_over_sinh(0.5 * omega * beta);
}

double heat_diagonal_domega(double beta, double omega) {
    const double s = 0.5 * omega * beta;
    double ds; // d/ds (s / sinh s)
    if (std::abs(s) < 1e-3) {
        ds = -s / 3.0 + 7.0 * s * s * s / 90.0;
    } else if (s > 350.0) {
        ds = 2.0 * (1.0 - s) * std::exp(-s);
    } else {
        const double sh = std::sinh(s);
        ds = (sh - s * std::cosh(s)) / (sh * sh);
    }
    return std::pow(two_pi * beta, -1.5) * 0.5 * beta * ds;
}

KernelSample mehler(Point3 x, Point3 xp, double beta, double omega) {
    const Point3 d = x - xp;
    const double perp2 = d.x1 * d.x1 + d.x2 * d.x2;
    const double longitudinal = std::exp(-d.x3 * d.x3 / (2.0 * beta)) / std::sqrt(two_pi * beta);
    const double transverse = s_over_sinh(0.5 * omega * beta) / (two_pi * beta) *
                              std::exp(-transverse_rate(beta, omega) * perp2);
    const double phase = omega * phase_phi(x, xp);
    return {std::polar(longitudinal * transverse, phase), free_kernel(x, xp, beta)};
}

bool diamagnetic_check(const KernelSample& s, double rel_tol) {
    return std::abs(s.value) <= s.envelope * (1.0 + rel_tol);
}

std::array<cplx, 3> covariant_gradient(Point3 y, Point3 x, double tau, double omega) {
    const cplx g = mehler(y, x, tau, omega).value;
    const Point3 d = y - x;
    const double kappa = transverse_rate(tau, omega);
    const Point3 ax = vector_potential(x);
    const Point3 ay = vector_potential(y);
    const cplx i(0.0, 1.0);
    // i∇_y G = G [-2iκ d⊥, -i d3/τ] - ω a(x) G; then add ω a(y) G.
    return {g * (-2.0 * i * kappa * d.x1 + omega * (ay.x1 - ax.x1)),
            g * (-2.0 * i * kappa * d.x2 + omega * (ay.x2 - ax.x2)),
            g * (-i * d.x3 / tau)};
}

GradKernels mehler_grad_kernels(Point3 y, Point3 x, double tau, double omega) {
    const Point3 ad = vector_potential(y - x);
    const auto v = covariant_gradient(y, x, tau, omega);
    const cplx r1 = ad.x1 * v[0] + ad.x2 * v[1] + ad.x3 * v[2];
    const cplx r2 = 0.5 * dot(ad, ad) * mehler(y, x, tau, omega).value;
    return {r1, r2};
}

namespace {

// Tensor rule: Gauss–Legendre in u with τ = β u², Gauss–Hermite in y scaled
// to the Gaussian product of the two kernels at each τ.
double first_order_tensor(double omega, double beta, int n_tau, int n_space) {
    const auto gl = gauss_legendre(static_cast<std::size_t>(n_tau));
    const auto gh = gauss_hermite(static_cast<std::size_t>(n_space));
    const Point3 origin{};
    std::vector<double> tau_terms;
    tau_terms.reserve(gl.nodes.size());
    for (std::size_t a = 0; a < gl.nodes.size(); ++a) {
        const double u = 0.5 * (gl.nodes[a] + 1.0);
        const double tau = beta * u * u;
        const double dtau = beta * 2.0 * u * 0.5 * gl.weights[a];
        const double t1 = beta - tau;
        const double rate_perp = transverse_rate(t1, omega) + transverse_rate(tau, omega);
        const double rate_long = 0.5 / t1 + 0.5 / tau;
        const double s_perp = 1.0 / std::sqrt(rate_perp); // y = s ξ, weight e^{-ξ²}
        const double s_long = 1.0 / std::sqrt(rate_long);
        std::vector<double> inner;
        inner.reserve(gh.nodes.size() * gh.nodes.size() * gh.nodes.size());
        for (std::size_t i = 0; i < gh.nodes.size(); ++i)
            for (std::size_t j = 0; j < gh.nodes.size(); ++j)
                for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
                    const double xi = gh.nodes[i], xj = gh.nodes[j], xk = gh.nodes[k];
                    const Point3 y{s_perp * xi, s_perp * xj, s_long * xk};
                    const double w = gh.weights[i] * gh.weights[j] * gh.weights[k] *
                                     std::exp(xi * xi + xj * xj + xk * xk);
                    const cplx f = mehler(origin, y, t1, omega).value *
                                   mehler_grad_kernels(y, origin, tau, omega).r1;
                    inner.push_back(w * f.real());
                }
        tau_terms.push_back(dtau * s_perp * s_perp * s_long * pairwise_sum(inner));
    }
    return -pairwise_sum(tau_terms);
}

struct McEstimate {
    double mean;
    double stderr_;
};

// Importance sampling: τ uniform on (0, β), y from the free Gaussian envelope
// of the product kernel at that τ.
McEstimate first_order_monte_carlo(double omega, double beta, std::uint64_t samples,
                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Point3 origin{};
    double sum = 0.0, sum2 = 0.0;
    for (std::uint64_t n = 0; n < samples; ++n) {
        const double tau = beta * unif(rng);
        const double t1 = beta - tau;
        if (tau <= 0.0 || t1 <= 0.0) continue;
        const double var = tau * t1 / beta;
        const double sd = std::sqrt(var);
        const Point3 y{sd * normal(rng), sd * normal(rng), sd * normal(rng)};
        const double density = std::pow(two_pi * var, -1.5) * std::exp(-dot(y, y) / (2.0 * var));
        const cplx f = mehler(origin, y, t1, omega).value *
                       mehler_grad_kernels(y, origin, tau, omega).r1;
        const double v = -beta * f.real() / density;
        sum += v;
        sum2 += v * v;
    }
    const double nn = static_cast<double>(samples);
    const double mean = sum / nn;
    const double var = std::max(sum2 / nn - mean * mean, 0.0);
    return {mean, std::sqrt(var / nn)};
}

} // namespace

FirstOrderReport first_order_term_verify(double omega0, double beta, const FirstOrderPolicy& policy) {
    if (!(beta > 0.0) || beta > 4.0) throw DomainError("first-order verifier needs 0 < beta <= 4");
    if (!(omega0 >= 0.0) || omega0 > 4.0)
        throw DomainError("first-order verifier needs 0 <= omega0 <= 4");
    if (policy.tau_nodes < 2 || policy.space_nodes < 2)
        throw ValidationError("quadrature policy needs at least two nodes per axis");

    FirstOrderReport rep;
    rep.analytic = heat_diagonal_domega(beta, omega0);

    const double coarse = first_order_tensor(omega0, beta, policy.tau_nodes, policy.space_nodes);
    const int fine_tau = policy.tau_nodes + 16;
    const int fine_space = policy.space_nodes + 6;
    const double fine = first_order_tensor(omega0, beta, fine_tau, fine_space);
    rep.quadrature = fine;
    rep.error_estimate = std::abs(fine - coarse);
    rep.nodes = static_cast<std::uint64_t>(fine_tau) * fine_space * fine_space * fine_space;

    auto accepted = [&](double value, double err) {
        return err <= policy.tol * std::abs(value) || (value == 0.0 && err == 0.0);
    };
    if (!accepted(rep.quadrature, rep.error_estimate)) {
        if (!policy.monte_carlo_fallback)
            throw QuadratureError("tensor quadrature error estimate " +
                                  std::to_string(rep.error_estimate) + " above tolerance");
        const auto mc = first_order_monte_carlo(omega0, beta, policy.mc_samples, policy.seed);
        if (!accepted(mc.mean, mc.stderr_))
            throw QuadratureError("tensor and Monte Carlo quadrature both missed tolerance");
        rep.quadrature = mc.mean;
        rep.error_estimate = mc.stderr_;
        rep.nodes = policy.mc_samples;
        rep.monte_carlo = true;
    }
    const double denom = std::abs(rep.analytic);
    rep.rel_error = denom > 0.0 ? std::abs(rep.quadrature - rep.analytic) / denom
                                : std::abs(rep.quadrature - rep.analytic);
    return rep;
}

double semigroup_residual(Point3 x, Point3 z, double s, double t, double omega, int nodes) {
    if (!(s > 0.0) || !(t > 0.0)) throw DomainError("semigroup times must be positive");
    const auto gh = gauss_hermite(static_cast<std::size_t>(nodes));
    const Point3 center = (1.0 / (s + t)) * (t * x + s * z);
    const double scale = std::sqrt(2.0 * s * t / (s + t));
    std::vector<cplx> terms;
    terms.reserve(gh.nodes.size() * gh.nodes.size() * gh.nodes.size());
    for (std::size_t i = 0; i < gh.nodes.size(); ++i)
        for (std::size_t j = 0; j < gh.nodes.size(); ++j)
            for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
                const double xi = gh.nodes[i], xj = gh.nodes[j], xk = gh.nodes[k];
                const Point3 y = center + scale * Point3{xi, xj, xk};
                const double w = gh.weights[i] * gh.weights[j] * gh.weights[k] *
                                 std::exp(xi * xi + xj * xj + xk * xk);
                terms.push_back(w * mehler(x, y, s, omega).value * mehler(y, z, t, omega).value);
            }
    const cplx integral = scale * scale * scale * pairwise_sum(terms);
    const cplx exact = mehler(x, z, s + t, omega).value;
    return std::abs(integral - exact) / std::abs(exact);
}

} // namespace magthermo
