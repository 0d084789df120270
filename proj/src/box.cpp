#include "magthermo/box.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <utility>
#include <limits>
#include <memory>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "magthermo/errors.hpp"
#include "magthermo/parallel.hpp"

namespace magthermo {

namespace {

constexpr double pi = std::numbers::pi;

// ln(1 + w) without cancellation for small |w|.
cplx log1p_complex(cplx w) {
    const double re = w.real(), im = w.imag();
    const double mod2m1 = 2.0 * re + re * re + im * im; // |1+w|² - 1
    return {0.5 * std::log1p(mod2m1), std::atan2(im, 1.0 + re)};
}

double longitudinal_level(const BoxSpec& spec, int k) {
    return pi * pi * k * k / (2.0 * spec.side_L * spec.side_L);
}

} // namespace

// ---------------------------------------------------------------- BoxSpec

void BoxSpec::validate() const {
    if (!(side_L >= 1.0)) throw ValidationError("box side L must be at least 1");
    if (n_perp < 16) throw ValidationError("n_perp must be at least 16");
    if (!(e_max > 0.0)) throw ValidationError("e_max must be positive");
    if (longitudinal_mode_cap < 1) throw ValidationError("longitudinal_mode_cap must be >= 1");
    if (h() > 0.25)
        throw ResolutionError("grid spacing h = " + std::to_string(h()) + " exceeds 0.25");
}

BoxSpec BoxSpec::with_spacing(double side_L, double spacing, double e_max, int cap) {
    BoxSpec s;
    s.side_L = side_L;
    s.n_perp = static_cast<int>(std::lround(side_L / spacing)) - 1;
    s.e_max = e_max;
    s.longitudinal_mode_cap = cap;
    return s;
}

double tail_guard_emax(const ThermoPoint& tp, double eps_tail) {
    const double z_abs = std::max(std::abs(tp.z()), eps_tail);
    const double from_tail = 0.5 * tp.omega() + (std::log(z_abs / eps_tail) + 1.0) / tp.beta();
    return std::max(from_tail, 0.5 * tp.omega() + 10.0 / tp.beta());
}

// ---------------------------------------------------------------- Hamiltonian

DiscreteHamiltonian2D::DiscreteHamiltonian2D(const BoxSpec& spec, double omega, Gauge gauge)
    : n_(spec.n_perp), side_(spec.side_L), h_(spec.h()), omega_(omega), gauge_(gauge) {
    spec.validate();
    const double t = 0.5 / (h_ * h_);
    diag_ = 4.0 * t;
    const int dim = n_ * n_;
    hop_x_.assign(dim, 0.0);
    hop_y_.assign(dim, 0.0);
    flux_x_.assign(dim, 0.0);
    flux_y_.assign(dim, 0.0);
    // Straight-line integral of a along the bond from q (column site) to p
    // (row site); H(p, q) = -t exp(iω ∫_q^p a·dl).
    auto line_integral = [&](double px, double py, double qx, double qy) {
        if (gauge_ == Gauge::symmetric) return 0.5 * (qx * py - qy * px);
        return 0.5 * (px + qx) * (py - qy); // a = (0, x, 0)
    };
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i) {
            const int s = j * n_ + i;
            const double px = coordinate(i), py = coordinate(j);
            if (i + 1 < n_) {
                flux_x_[s] = line_integral(px, py, coordinate(i + 1), py);
                hop_x_[s] = -t * std::polar(1.0, omega_ * flux_x_[s]);
            }
            if (j + 1 < n_) {
                flux_y_[s] = line_integral(px, py, px, coordinate(j + 1));
                hop_y_[s] = -t * std::polar(1.0, omega_ * flux_y_[s]);
            }
        }
}

void DiscreteHamiltonian2D::apply(const cplx* x, cplx* y) const {
    const int dim = dimension();
    for (int s = 0; s < dim; ++s) y[s] = diag_ * x[s];
    for (int s = 0; s < dim; ++s) {
        if (hop_x_[s] != cplx(0.0)) {
            y[s] += hop_x_[s] * x[s + 1];
            y[s + 1] += std::conj(hop_x_[s]) * x[s];
        }
        if (hop_y_[s] != cplx(0.0)) {
            y[s] += hop_y_[s] * x[s + n_];
            y[s + n_] += std::conj(hop_y_[s]) * x[s];
        }
    }
}

void DiscreteHamiltonian2D::apply_domega(const cplx* x, cplx* y) const {
    const int dim = dimension();
    const cplx i(0.0, 1.0);
    std::fill(y, y + dim, cplx(0.0));
    for (int s = 0; s < dim; ++s) {
        if (hop_x_[s] != cplx(0.0)) {
            const cplx d = i * flux_x_[s] * hop_x_[s];
            y[s] += d * x[s + 1];
            y[s + 1] += std::conj(d) * x[s];
        }
        if (hop_y_[s] != cplx(0.0)) {
            const cplx d = i * flux_y_[s] * hop_y_[s];
            y[s] += d * x[s + n_];
            y[s + n_] += std::conj(d) * x[s];
        }
    }
}

Eigen::MatrixXcd DiscreteHamiltonian2D::dense() const {
    const int dim = dimension();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) {
        m(s, s) = diag_;
        if (hop_x_[s] != cplx(0.0)) {
            m(s, s + 1) = hop_x_[s];
            m(s + 1, s) = std::conj(hop_x_[s]);
        }
        if (hop_y_[s] != cplx(0.0)) {
            m(s, s + n_) = hop_y_[s];
            m(s + n_, s) = std::conj(hop_y_[s]);
        }
    }
    return m;
}

double DiscreteHamiltonian2D::hermiticity_defect() const {
    const Eigen::MatrixXcd m = dense();
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

DiscreteHamiltonian2D build_h2d(const BoxSpec& spec, double omega, Gauge gauge) {
    return DiscreteHamiltonian2D(spec, omega, gauge);
}

// ---------------------------------------------------------------- solvers

std::string to_string(SolverKind kind) {
    switch (kind) {
    case SolverKind::automatic: return "automatic";
    case SolverKind::dense: return "dense";
    case SolverKind::band: return "band";
    case SolverKind::lanczos: return "lanczos";
    }
    return "unknown";
}

namespace {

std::vector<double> residual_norms(const DiscreteHamiltonian2D& h2d, const std::vector<double>& values,
                                   const Eigen::MatrixXcd& vectors) {
    std::vector<double> res(values.size());
    Eigen::VectorXcd hv(h2d.dimension());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const Eigen::VectorXcd v = vectors.col(static_cast<Eigen::Index>(k));
        h2d.apply(v.data(), hv.data());
        res[k] = (hv - values[k] * v).norm();
    }
    return res;
}

TransverseEigensystem solve_dense(const DiscreteHamiltonian2D& h2d, double e_cut, bool want_vectors) {
    const int dim = h2d.dimension();
    Eigen::MatrixXcd a = h2d.dense(); // column-major
    std::vector<double> w(dim);
    Eigen::MatrixXcd z;
    if (want_vectors) z.resize(dim, dim);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(dim));
    lapack_int m = 0;
    const lapack_int info = LAPACKE_zheevr(
        LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'V', 'U', dim,
        reinterpret_cast<lapack_complex_double*>(a.data()), dim, -1.0, e_cut, 0, 0,
        2.0 * LAPACKE_dlamch('S'), &m, w.data(),
        want_vectors ? reinterpret_cast<lapack_complex_double*>(z.data()) : nullptr, dim,
        isuppz.data());
    if (info != 0) throw SolverError("zheevr failed with info " + std::to_string(info));
    TransverseEigensystem es;
    es.solver = SolverKind::dense;
    es.values.assign(w.begin(), w.begin() + m);
    if (want_vectors) {
        es.vectors = z.leftCols(m);
        es.residuals = residual_norms(h2d, es.values, es.vectors);
    }
    return es;
}

TransverseEigensystem solve_band(const DiscreteHamiltonian2D& h2d, double e_cut) {
    const int dim = h2d.dimension();
    const int kd = h2d.n();
    const int ldab = kd + 1;
    // Upper band storage: AB(kd + i - j, j) = A(i, j) for i ≤ j.
    std::vector<cplx> ab(static_cast<std::size_t>(ldab) * dim, 0.0);
    auto at = [&](int i, int j) -> cplx& { return ab[static_cast<std::size_t>(kd + i - j) + static_cast<std::size_t>(j) * ldab]; };
    for (int s = 0; s < dim; ++s) {
        at(s, s) = h2d.diagonal();
        if (h2d.hop_x(s) != cplx(0.0)) at(s, s + 1) = h2d.hop_x(s);
        if (h2d.hop_y(s) != cplx(0.0)) at(s, s + kd) = h2d.hop_y(s);
    }
    std::vector<double> w(dim);
    std::vector<lapack_int> ifail(dim);
    lapack_int m = 0;
    const lapack_int info = LAPACKE_zhbevx(
        LAPACK_COL_MAJOR, 'N', 'V', 'U', dim, kd, reinterpret_cast<lapack_complex_double*>(ab.data()),
        ldab, nullptr, dim, -1.0, e_cut, 0, 0, 2.0 * LAPACKE_dlamch('S'), &m, w.data(), nullptr, dim,
        ifail.data());
    if (info != 0) throw SolverError("zhbevx failed with info " + std::to_string(info));
    TransverseEigensystem es;
    es.solver = SolverKind::band;
    es.values.assign(w.begin(), w.begin() + m);
    return es;
}

// Shift-invert Lanczos on H^{-1} (H is positive definite under Dirichlet
// walls) with full reorthogonalization. Converged pairs are locked and the
// iteration restarts in their orthogonal complement until a restart finds no
// new eigenvalue below the cut.
using SparseH = Eigen::SparseMatrix<cplx>;

SparseH sparse_hamiltonian(const DiscreteHamiltonian2D& h2d) {
    const int dim = h2d.dimension();
    const int n = h2d.n();
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(5 * static_cast<std::size_t>(dim));
    for (int s = 0; s < dim; ++s) {
        trip.emplace_back(s, s, h2d.diagonal());
        if (h2d.hop_x(s) != cplx(0.0)) {
            trip.emplace_back(s, s + 1, h2d.hop_x(s));
            trip.emplace_back(s + 1, s, std::conj(h2d.hop_x(s)));
        }
        if (h2d.hop_y(s) != cplx(0.0)) {
            trip.emplace_back(s, s + n, h2d.hop_y(s));
            trip.emplace_back(s + n, s, std::conj(h2d.hop_y(s)));
        }
    }
    SparseH hs(dim, dim);
    hs.setFromTriplets(trip.begin(), trip.end());
    return hs;
}

/// LDL^T factorization of H - σ; by Sylvester's law the number of negative
/// pivots is the number of eigenvalues below σ.
struct ShiftedFactor {
    Eigen::SimplicialLDLT<SparseH> ldlt;
    int below = 0;
    double min_pivot = 0.0;
};

std::unique_ptr<ShiftedFactor> factor_shifted(const SparseH& hs, double sigma) {
    SparseH shifted = hs;
    for (int s = 0; s < shifted.rows(); ++s) shifted.coeffRef(s, s) -= sigma;
    auto f = std::make_unique<ShiftedFactor>();
    f->ldlt.compute(shifted);
    if (f->ldlt.info() != Eigen::Success) throw SolverError("sparse factorization failed");
    const auto d = f->ldlt.vectorD();
    f->min_pivot = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (d(k).real() < 0.0) ++f->below;
        f->min_pivot = std::min(f->min_pivot, std::abs(d(k).real()));
    }
    return f;
}

/// Slice boundary near `target` whose factorization is well conditioned.
std::pair<double, std::unique_ptr<ShiftedFactor>> boundary_near(const SparseH& hs, double target,
                                                                double spacing) {
    double sigma = target;
    for (int attempt = 0; attempt < 8; ++attempt) {
        auto f = factor_shifted(hs, sigma);
        if (f->min_pivot > 1e-10) return {sigma, std::move(f)};
        sigma = target + spacing * 1e-3 * (attempt + 1) * ((attempt % 2) ? -1.0 : 1.0);
    }
    throw SolverError("no well-conditioned slice boundary near " + std::to_string(target));
}

struct Slice {
    double lo, hi;
    int count;
};

/// Eigenpairs of H in [lo, hi) by shift-invert Lanczos at the slice midpoint
/// with full reorthogonalization, locking and restarts until `count` pairs
/// are found.
void lanczos_slice(const SparseH& hs, const Slice& slice, std::uint64_t seed,
                   std::vector<double>& values, std::vector<Eigen::VectorXcd>& vectors) {
    const Eigen::Index dim = hs.rows();
    const double sigma = 0.5 * (slice.lo + slice.hi);
    const double half_width = 0.5 * (slice.hi - slice.lo);
    const auto factor = factor_shifted(hs, sigma);
    const double theta_min = 1.0 / half_width;
    const double h_norm = 2.0 * std::abs(hs.coeff(0, 0)) + std::abs(sigma);

    std::vector<Eigen::VectorXcd> locked;
    auto orthogonalize = [](Eigen::VectorXcd& v, const std::vector<Eigen::VectorXcd>& basis) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) v -= q * q.dot(v);
    };

    for (int restart = 0; static_cast<int>(locked.size()) < slice.count; ++restart) {
        if (restart >= 4 * slice.count + 8)
            throw SolverError("Lanczos found " + std::to_string(locked.size()) + " of " +
                              std::to_string(slice.count) + " eigenvalues in [" +
                              std::to_string(slice.lo) + ", " + std::to_string(slice.hi) + ")");
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(restart + 1)));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXcd q(dim);
        for (Eigen::Index s = 0; s < dim; ++s) q(s) = cplx(normal(rng), normal(rng));
        orthogonalize(q, locked);
        q.normalize();

        const int missing = slice.count - static_cast<int>(locked.size());
        const int max_steps = static_cast<int>(std::min<Eigen::Index>(dim - locked.size(), 6 * missing + 60));
        std::vector<Eigen::VectorXcd> basis{q};
        std::vector<double> alpha, beta;
        Eigen::VectorXd ritz;
        Eigen::MatrixXd ritz_vec;
        std::vector<int> accepted;
        for (int step = 0; step < max_steps; ++step) {
            Eigen::VectorXcd w = factor->ldlt.solve(basis.back());
            orthogonalize(w, locked);
            const double a = basis.back().dot(w).real();
            alpha.push_back(a);
            orthogonalize(w, basis);
            const double b = w.norm();
            const bool exhausted = b < 1e-13 * std::max(1.0, std::abs(a)) || step + 1 == max_steps;
            if (exhausted || (step + 1) % 10 == 0) {
                const int m = static_cast<int>(alpha.size());
                Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
                Eigen::VectorXd sub(std::max(m - 1, 0));
                for (int k = 0; k + 1 < m; ++k) sub(k) = beta[k];
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
                tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
                ritz = tri.eigenvalues();
                ritz_vec = tri.eigenvectors();
                accepted.clear();
                for (int k = 0; k < m; ++k) {
                    if (std::abs(ritz(k)) < theta_min) continue;
                    // residual of (H - σ)v - v/θ is at most ‖H - σ‖ |b s_mk| / |θ|
                    const double resid = b * std::abs(ritz_vec(m - 1, k)) * h_norm / std::abs(ritz(k));
                    if (exhausted || resid <= 1e-10 * std::max(1.0, std::abs(sigma))) accepted.push_back(k);
                }
                if (static_cast<int>(accepted.size()) >= missing) break;
            }
            if (exhausted) break;
            beta.push_back(b);
            basis.push_back(w / b);
        }
        const int m = static_cast<int>(alpha.size());
        for (int k : accepted) {
            if (static_cast<int>(locked.size()) == slice.count) break;
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
            for (int r = 0; r < m; ++r) v += basis[static_cast<std::size_t>(r)] * ritz_vec(r, k);
            const double before = v.norm();
            orthogonalize(v, locked);
            if (v.norm() < 0.5 * before) continue; // copy of a locked vector
            v.normalize();
            locked.push_back(std::move(v));
        }
    }
    Eigen::VectorXcd hv(dim);
    for (auto& v : locked) {
        hv = hs * v;
        values.push_back(v.dot(hv).real());
        vectors.push_back(std::move(v));
    }
}

TransverseEigensystem solve_lanczos(const DiscreteHamiltonian2D& h2d, double e_cut,
                                    std::uint64_t seed) {
    const SparseH hs = sparse_hamiltonian(h2d);
    constexpr int max_per_slice = 60;

    // Bisect [0, e_cut) until every slice holds at most max_per_slice levels.
    auto [top, top_factor] = boundary_near(hs, e_cut, 1e-3 * e_cut);
    std::vector<Slice> pending{{0.0, top, top_factor->below}};
    std::vector<Slice> slices;
    while (!pending.empty()) {
        const Slice sl = pending.back();
        pending.pop_back();
        if (sl.count == 0) continue;
        if (sl.count <= max_per_slice) {
            slices.push_back(sl);
            continue;
        }
        auto [mid, f] = boundary_near(hs, 0.5 * (sl.lo + sl.hi), sl.hi - sl.lo);
        const int below_lo = sl.lo == 0.0 ? 0 : factor_shifted(hs, sl.lo)->below;
        pending.push_back({sl.lo, mid, f->below - below_lo});
        pending.push_back({mid, sl.hi, sl.count - (f->below - below_lo)});
    }
    std::sort(slices.begin(), slices.end(), [](const Slice& a, const Slice& b) { return a.lo < b.lo; });

    std::vector<double> values;
    std::vector<Eigen::VectorXcd> vectors;
    for (std::size_t k = 0; k < slices.size(); ++k)
        lanczos_slice(hs, slices[k], seed + k, values, vectors);

    std::vector<std::size_t> order(values.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    TransverseEigensystem es;
    es.solver = SolverKind::lanczos;
    es.vectors.resize(hs.rows(), static_cast<Eigen::Index>(order.size()));
    for (std::size_t c = 0; c < order.size(); ++c) {
        es.values.push_back(values[order[c]]);
        es.vectors.col(static_cast<Eigen::Index>(c)) = vectors[order[c]];
    }
    es.residuals = residual_norms(h2d, es.values, es.vectors);
    const double scale = std::max(1.0, h2d.diagonal());
    for (double r : es.residuals)
        if (r > 1e-8 * scale) throw SolverError("Lanczos eigenpair residual " + std::to_string(r));
    return es;
}

} // namespace

TransverseEigensystem solve_transverse(const DiscreteHamiltonian2D& h2d, double e_cut,
                                       bool want_vectors, SolverKind kind, std::uint64_t seed) {
    if (kind == SolverKind::automatic) {
        if (h2d.n() > 100) kind = SolverKind::lanczos;
        else kind = want_vectors ? SolverKind::dense : SolverKind::band;
    }
    switch (kind) {
    case SolverKind::dense: return solve_dense(h2d, e_cut, want_vectors);
    case SolverKind::band: {
        if (want_vectors) throw ValidationError("band solver computes eigenvalues only");
        return solve_band(h2d, e_cut);
    }
    case SolverKind::lanczos: {
        auto es = solve_lanczos(h2d, e_cut, seed);
        if (!want_vectors) es.vectors.resize(0, 0);
        return es;
    }
    default: break;
    }
    throw ValidationError("unknown solver kind");
}

// ---------------------------------------------------------------- spectra

double weyl_tail_weight(const BoxSpec& spec, double beta, double z_abs) {
    // density of states L³ sqrt(2E)/(2π²); ∫_{E0}^∞ sqrt(2E) e^{-βE} dE = sqrt(2) β^{-3/2} Γ(3/2, βE0)
    const double l3 = spec.side_L * spec.side_L * spec.side_L;
    const double integral =
        std::sqrt(2.0) * std::pow(beta, -1.5) * boost::math::tgamma(1.5, beta * spec.e_max);
    return z_abs * l3 / (2.0 * pi * pi) * integral;
}

namespace {

std::string cache_name(const BoxSpec& spec, double omega) {
    std::ostringstream os;
    os.precision(17);
    os << "spec_L" << spec.side_L << "_n" << spec.n_perp << "_w" << omega << "_e" << spec.e_max << "_k"
       << spec.longitudinal_mode_cap << ".mgspec";
    return os.str();
}

SpectralResult assemble_3d(const BoxSpec& spec, double omega, const TransverseEigensystem& es) {
    SpectralResult sr;
    sr.spec = spec;
    sr.omega = omega;
    sr.solver = to_string(es.solver);
    sr.residuals = es.residuals;
    for (double e : es.values) {
        if (e >= spec.e_max) continue;
        sr.transverse.push_back(e);
        for (int k = 1; k <= spec.longitudinal_mode_cap; ++k) {
            const double total = e + longitudinal_level(spec, k);
            if (total >= spec.e_max) break;
            sr.eigenvalues.push_back(total);
        }
    }
    std::sort(sr.eigenvalues.begin(), sr.eigenvalues.end());
    return sr;
}

} // namespace

SpectralResult spectrum_3d(const BoxSpec& spec, double omega, const SpectrumOptions& opts) {
    spec.validate();
    const double w = std::abs(omega);
    SpectralResult sr;
    bool loaded = false;
    std::filesystem::path cache_path;
    if (opts.cache_dir) {
        cache_path = *opts.cache_dir / cache_name(spec, w);
        if (std::filesystem::exists(cache_path)) {
            sr = load_spectrum(cache_path);
            if (sr.spec.side_L != spec.side_L || sr.spec.n_perp != spec.n_perp ||
                sr.spec.e_max != spec.e_max || sr.omega != w)
                throw SchemaError("cached spectrum " + cache_path.string() + " does not match its spec");
            sr.spec = spec;
            sr.solver = "cache";
            loaded = true;
        }
    }
    if (!loaded) {
        const auto h2d = build_h2d(spec, w);
        const double e_cut = spec.e_max - longitudinal_level(spec, 1);
        sr = assemble_3d(spec, w, solve_transverse(h2d, e_cut, false, opts.solver, opts.seed));
        if (opts.cache_dir) {
            std::filesystem::create_directories(*opts.cache_dir);
            save_spectrum(sr, cache_path);
        }
    }
    if (opts.tail_check) {
        const auto& tc = *opts.tail_check;
        double log_sum = 0.0;
        for (double e : sr.eigenvalues) log_sum += std::log1p(tc.z_abs_max * std::exp(-tc.beta_min * e));
        const double tail = weyl_tail_weight(spec, tc.beta_min, tc.z_abs_max);
        if (tail > tc.rel_limit * log_sum)
            throw TruncationError("Weyl tail weight " + std::to_string(tail) +
                                  " exceeds the allowed fraction of the log-sum");
    }
    return sr;
}

// ---------------------------------------------------------------- observables

namespace {

void check_observable_inputs(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp) {
    if (std::abs(std::abs(sr.omega) - tp.omega()) > 1e-12 * std::max(1.0, tp.omega()))
        throw ValidationError("spectrum was computed at a different omega");
    if (spec.e_max < 0.5 * tp.omega() + 10.0 / tp.beta())
        throw TruncationError("e_max below the tail guard omega/2 + 10/beta");
}

double volume(const BoxSpec& spec) { return spec.side_L * spec.side_L * spec.side_L; }

} // namespace

cplx pressure_box(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp) {
    check_observable_inputs(spec, sr, tp);
    const cplx z = tp.z();
    cplx sum = 0.0;
    for (double e : sr.eigenvalues) {
        const double boltz = std::exp(-tp.beta() * e);
        // pole of ln(1 + z e^{-βE}) at z = -e^{βE}
        if (std::abs(z + 1.0 / boltz) < 1e-6)
            throw DomainError("fugacity within 1e-6 of a finite-volume pole");
        sum += log1p_complex(z * boltz);
    }
    return sum / (tp.beta() * volume(spec));
}

cplx density_box(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp) {
    check_observable_inputs(spec, sr, tp);
    const cplx z = tp.z();
    cplx sum = 0.0;
    for (double e : sr.eigenvalues) {
        const cplx w = z * std::exp(-tp.beta() * e);
        if (std::abs(1.0 + w) < 1e-12) throw DomainError("fugacity at a finite-volume pole");
        sum += w / (1.0 + w);
    }
    return sum / volume(spec);
}

cplx pressure_box_series(const BoxSpec& spec, const SpectralResult& sr, const ThermoPoint& tp,
                         int n_max) {
    if (std::abs(tp.z()) >= 1.0) throw DomainError("box series needs |z| < 1");
    if (n_max < 1) throw ValidationError("n_max must be at least 1");
    check_observable_inputs(spec, sr, tp);
    cplx sum = 0.0;
    cplx zn = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        zn *= tp.z();
        const double sign = (n % 2 == 1) ? 1.0 : -1.0;
        sum += sign * zn / static_cast<double>(n) * trace_heat(sr, n * tp.beta());
    }
    return sum / (tp.beta() * volume(spec));
}

double trace_heat(const SpectralResult& sr, double beta) {
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    double sum = 0.0;
    for (double e : sr.eigenvalues) sum += std::exp(-beta * e);
    return sum;
}

// ---------------------------------------------------------------- ω-derivatives

SpectrumProvider default_spectrum_provider(const BoxSpec& spec, SpectrumOptions opts) {
    return [spec, opts](double omega) { return spectrum_3d(spec, omega, opts); };
}

std::vector<double> stencil_offsets(int N) {
    // two scales: h uses offsets m, h/2 uses m/2
    const int reach = N <= 2 ? 1 : 2;
    std::vector<double> out;
    for (int m = -reach; m <= reach; ++m) {
        out.push_back(m);
        if (m != 0) out.push_back(0.5 * m);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

// Second-order central difference weights for d^N/dω^N on offsets -2..2 (in units of h).
std::array<double, 5> central_weights(int N) {
    switch (N) {
    case 1: return {0.0, -0.5, 0.0, 0.5, 0.0};
    case 2: return {0.0, 1.0, -2.0, 1.0, 0.0};
    case 3: return {-0.5, 1.0, 0.0, -1.0, 0.5};
    case 4: return {1.0, -4.0, 6.0, -4.0, 1.0};
    default: break;
    }
    throw OrderError("finite-difference order must lie in [1, 4]");
}

} // namespace

SusceptibilityResult susceptibility_box(const BoxSpec& spec, const ThermoPoint& tp, int N,
                                        const StencilPolicy& policy,
                                        const SpectrumProvider& provider) {
    if (N < 1 || N > 4) throw OrderError("box susceptibility order must lie in [1, 4]");
    const double step = policy.step > 0.0
                            ? policy.step
                            : std::max(1e-2, std::pow(1e-13, 1.0 / (N + 2)));
    const auto offsets = stencil_offsets(N);
    std::vector<double> nodes(offsets.size());
    for (std::size_t k = 0; k < offsets.size(); ++k) nodes[k] = tp.omega() + offsets[k] * step;

    std::vector<cplx> values(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t k) {
        const SpectralResult sr = provider(nodes[k]);
        values[k] = pressure_box(spec, sr, tp.with_omega(std::abs(nodes[k])));
    });
    auto value_at = [&](double offset) {
        const auto it = std::find(offsets.begin(), offsets.end(), offset);
        return values[static_cast<std::size_t>(it - offsets.begin())];
    };

    const auto wts = central_weights(N);
    auto difference = [&](double scale) {
        cplx acc = 0.0;
        for (int m = -2; m <= 2; ++m) {
            const double w = wts[static_cast<std::size_t>(m + 2)];
            if (w != 0.0) acc += w * value_at(m * scale);
        }
        return acc / std::pow(scale * step, N);
    };
    const cplx coarse = difference(1.0);
    const cplx fine = difference(0.5);
    SusceptibilityResult out;
    out.value = fine + (fine - coarse) / 3.0;
    out.error_estimate = std::abs(fine - coarse) / 3.0;
    out.step = step;
    out.nodes = nodes;
    if (out.error_estimate > std::max(policy.rel_tol * std::abs(out.value), policy.abs_tol))
        throw StencilError("two-scale error estimate " + std::to_string(out.error_estimate) +
                           " exceeds tolerance");
    return out;
}

SusceptibilityResult susceptibility_box(const BoxSpec& spec, const ThermoPoint& tp, int N,
                                        const StencilPolicy& policy) {
    return susceptibility_box(spec, tp, N, policy, default_spectrum_provider(spec));
}

cplx magnetization_hellmann_feynman(const BoxSpec& spec, const ThermoPoint& tp, SolverKind kind) {
    spec.validate();
    const auto h2d = build_h2d(spec, tp.omega());
    const double e_cut = spec.e_max - longitudinal_level(spec, 1);
    const auto es = solve_transverse(h2d, e_cut, true, kind);
    const cplx z = tp.z();
    Eigen::VectorXcd dv(h2d.dimension());
    cplx sum = 0.0;
    for (std::size_t j = 0; j < es.values.size(); ++j) {
        const Eigen::VectorXcd v = es.vectors.col(static_cast<Eigen::Index>(j));
        h2d.apply_domega(v.data(), dv.data());
        const double dE = v.dot(dv).real();
        for (int k = 1; k <= spec.longitudinal_mode_cap; ++k) {
            const double e = es.values[j] + longitudinal_level(spec, k);
            if (e >= spec.e_max) break;
            const cplx w = z * std::exp(-tp.beta() * e);
            sum += dE * w / (1.0 + w);
        }
    }
    return -sum / volume(spec);
}

cplx reconstruct_kernel(const BoxSpec& spec, const TransverseEigensystem& es, int i, int j,
                        double x3, int ip, int jp, double x3p, double beta) {
    const int n = spec.n_perp;
    const double h = spec.h();
    const double L = spec.side_L;
    const int s = j * n + i, sp = jp * n + ip;
    cplx sum = 0.0;
    for (std::size_t c = 0; c < es.values.size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        // grid-normalized vectors -> continuum amplitude v / h
        const cplx perp = es.vectors(s, col) * std::conj(es.vectors(sp, col)) / (h * h);
        double longitudinal = 0.0;
        for (int k = 1; k <= spec.longitudinal_mode_cap; ++k) {
            const double e = es.values[c] + longitudinal_level(spec, k);
            const double boltz = std::exp(-beta * e);
            if (boltz < 1e-300) break;
            longitudinal += boltz * (2.0 / L) * std::sin(k * pi * (x3 + 0.5 * L) / L) *
                            std::sin(k * pi * (x3p + 0.5 * L) / L);
        }
        sum += perp * longitudinal;
    }
    return sum;
}

// ---------------------------------------------------------------- cache I/O

namespace {

constexpr char spectrum_magic[7] = {'M', 'G', 'S', 'P', 'E', 'C', '1'};

template <class T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        throw SchemaError("spectrum record truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void save_spectrum(const SpectralResult& sr, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IOError("cannot open " + path.string() + " for writing");
    os.write(spectrum_magic, sizeof(spectrum_magic));
    put_le<double>(os, sr.spec.side_L);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(sr.spec.n_perp));
    put_le<double>(os, sr.omega);
    put_le<double>(os, sr.spec.e_max);
    put_le<std::uint64_t>(os, sr.eigenvalues.size());
    for (double e : sr.eigenvalues) put_le<double>(os, e);
    if (!os) throw IOError("write to " + path.string() + " failed");
}

SpectralResult load_spectrum(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IOError("cannot open " + path.string());
    char magic[sizeof(spectrum_magic)];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, spectrum_magic, sizeof(magic)) != 0)
        throw SchemaError("not a spectrum record (bad magic)");
    SpectralResult sr;
    sr.spec.side_L = get_le<double>(is);
    sr.spec.n_perp = static_cast<int>(get_le<std::uint32_t>(is));
    sr.omega = get_le<double>(is);
    sr.spec.e_max = get_le<double>(is);
    const auto count = get_le<std::uint64_t>(is);
    const auto header = static_cast<std::uintmax_t>(is.tellg());
    if (count > (std::filesystem::file_size(path) - header) / sizeof(double))
        throw SchemaError("spectrum record truncated: header promises " + std::to_string(count) +
                          " eigenvalues");
    sr.eigenvalues.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) sr.eigenvalues.push_back(get_le<double>(is));
    sr.solver = "cache";
    return sr;
}

} // namespace magthermo
