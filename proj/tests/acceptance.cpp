#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "magthermo/box.hpp"
#include "magthermo/bulk.hpp"
#include "magthermo/errors.hpp"
#include "magthermo/fermi.hpp"
#include "magthermo/harness.hpp"
#include "magthermo/mehler.hpp"

using namespace magthermo;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failures and the worst observed deviation for one criterion.
class Tally {
public:
    void require(bool ok, const std::string& what) {
        if (!ok && failures_++ < 5) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    void within(double got, double want, double tol, const std::string& what) {
        const double dev = std::abs(got - want);
        worst_ = std::max(worst_, dev);
        std::ostringstream os;
        os.precision(17);
        os << what << ": got " << got << " want " << want;
        require(dev <= tol, os.str());
    }
    void rel_within(cplx got, cplx want, double tol, const std::string& what) {
        const double rel = std::abs(got - want) / std::max(std::abs(want), 1e-300);
        worst_ = std::max(worst_, rel);
        std::ostringstream os;
        os.precision(17);
        os << what << ": got " << got << " want " << want << " rel " << rel;
        require(rel <= tol, os.str());
    }
    void note(const std::string& s) { extra_ += (extra_.empty() ? "" : ", ") + s; }

    Outcome outcome() const {
        std::ostringstream os;
        os.precision(3);
        os << "worst deviation " << worst_;
        if (!extra_.empty()) os << ", " << extra_;
        if (failures_ > 0) os << " | " << failures_ << " failures: " << notes_;
        return {failures_ == 0, os.str()};
    }

private:
    int failures_ = 0;
    double worst_ = 0.0;
    std::string notes_, extra_;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

double closed_form_diagonal(double beta, double omega) {
    const double x = 0.5 * omega * beta;
    const double ratio = x == 0.0 ? 1.0 : x / std::sinh(x);
    return std::pow(2 * pi * beta, -1.5) * ratio;
}

// ------------------------------------------------------------ criteria

Outcome special_functions() {
    Tally t;
    for (double alpha : {0.5, 1.5, 2.5})
        for (double r : {0.3, 0.4, 0.5, 0.6, 0.7})
            for (int k = 0; k < 16; ++k) {
                const cplx z = std::polar(r, 2 * pi * (k + 0.5) / 16);
                t.rel_within(fermi_detail::integral(alpha, 0, z), fermi_detail::series(alpha, z), 1e-10,
                             "alpha " + fmt(alpha) + " z " + fmt(z.real()) + "," + fmt(z.imag()));
            }
    t.within(fermi_f(1.0, CutPlaneFugacity(1.0)).real(), std::numbers::ln2, 1e-12, "f_1(1)");
    return t.outcome();
}

Outcome bulk_zero_field() {
    Tally t;
    for (double beta : {0.5, 1.0, 2.0})
        for (double z : {0.3, 0.9}) t.within(std::abs(susceptibility_bulk(ThermoPoint(beta, z, 0.0), 1)), 0.0, 1e-10, "chi1");
    // second difference of the Landau sum, one Richardson step
    auto P = [](double w) { return pressure_bulk(ThermoPoint(1.0, 1.0, w)).real(); };
    auto second = [&](double s) { return 2.0 * (P(s) - P(0.0)) / (s * s); };
    const double coarse = second(0.04), fine = second(0.02);
    const double oracle = fine + (fine - coarse) / 3.0;
    const double chi2 = susceptibility_bulk(ThermoPoint(1.0, 1.0, 0.0), 2).real();
    t.within(chi2, oracle, 1e-6, "chi2 vs finite difference");
    t.within(chi2, -std::pow(2 * pi, -1.5) * 0.604898643421630370 / 12.0, 1e-6, "chi2 closed form");
    t.within(chi2, -0.0032007, 1e-6, "chi2 quoted value");
    return t.outcome();
}

Outcome mehler_diagonal() {
    Tally t;
    const double betas[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    const double omegas[] = {0.1, 0.5, 1.0, 2.0, 5.0};
    for (double b : betas)
        for (double w : omegas) {
            const double want = closed_form_diagonal(b, w);
            t.rel_within(heat_diagonal(b, w), want, 1e-12, "diagonal");
            t.rel_within(mehler({0.3, -0.2, 0.1}, {0.3, -0.2, 0.1}, b, w).value, want, 1e-12, "kernel at x = x'");
        }
    for (double b : betas) {
        const Point3 x{0.4, -0.3, 0.2}, xp{-0.1, 0.5, 0.0};
        t.rel_within(mehler(x, xp, b, 1e-12).value, free_kernel(x, xp, b), 1e-10, "small-field limit");
        t.rel_within(heat_diagonal(b, 0.0), std::pow(2 * pi * b, -1.5), 1e-10, "zero-field diagonal");
    }
    return t.outcome();
}

Outcome diamagnetic() {
    Tally t;
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> coord(-3.0, 3.0), beta_d(0.1, 4.0), omega_d(0.0, 5.0);
    int violations = 0;
    for (int k = 0; k < 10000; ++k) {
        const Point3 x{coord(rng), coord(rng), coord(rng)}, xp{coord(rng), coord(rng), coord(rng)};
        const double b = beta_d(rng), w = omega_d(rng);
        const cplx g = mehler(x, xp, b, w).value;
        if (std::abs(g) > free_kernel(x, xp, b) * (1 + 1e-12)) ++violations;
    }
    t.require(violations == 0, std::to_string(violations) + " analytic violations");

    const BoxSpec spec{3.0, 40, 40.0, 1000};
    const double beta = 0.5, h = spec.h();
    const double slack = 0.1 * h * std::pow(2 * pi * beta, -1.5);
    const auto es = solve_transverse(build_h2d(spec, 1.0), 1e9, true, SolverKind::dense);
    int box_violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int ip : {20, 10, 30})
        for (int i = 0; i < 40; i += 3)
            for (int j = 0; j < 40; j += 3)
                for (double x3 : {-1.0, 0.0, 0.7}) {
                    const cplx g = reconstruct_kernel(spec, es, i, j, x3, ip, 20, 0.0, beta);
                    const double env = free_kernel({h * (i - ip), h * (j - 20), x3}, {0, 0, 0}, beta);
                    worst = std::max(worst, std::abs(g) - env);
                    if (std::abs(g) > env + slack) ++box_violations;
                }
    t.require(box_violations == 0, std::to_string(box_violations) + " box violations");
    t.note("largest |G_L| - envelope " + fmt(worst) + " vs slack " + fmt(slack));
    return t.outcome();
}

Outcome flux_bound() {
    Tally t;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> c(-5.0, 5.0);
    int violations = 0;
    for (int k = 0; k < 100000; ++k) {
        const Point3 x{c(rng), c(rng), c(rng)}, y{c(rng), c(rng), c(rng)}, z{c(rng), c(rng), c(rng)};
        if (!(std::abs(flux_fl(x, y, z)) <= norm(x - y) * norm(y - z))) ++violations;
    }
    t.require(violations == 0, std::to_string(violations) + " flux violations");
    std::vector<std::uint64_t> fib{0, 1};
    while (fib.size() < 20) fib.push_back(fib[fib.size() - 1] + fib[fib.size() - 2]);
    for (int N = 1; N <= 12; ++N)
        t.require(count_accepted_tuples(N) == fib[N + 1], "count at N = " + std::to_string(N));
    return t.outcome();
}

Outcome semigroup() {
    Tally t;
    for (double w : {0.0, 1.0}) {
        const double r = semigroup_residual({0.3, -0.2, 0.1}, {-0.4, 0.5, -0.3}, 0.5, 0.5, w);
        t.within(r, 0.0, 1e-6, "residual at omega " + fmt(w));
    }
    return t.outcome();
}

Outcome first_order() {
    Tally t;
    for (double beta : {1.0, 0.5}) {
        const auto r = first_order_term_verify(1.0, beta);
        const double oracle = (closed_form_diagonal(beta, 1.0 + 1e-4) - closed_form_diagonal(beta, 1.0 - 1e-4)) / 2e-4;
        t.rel_within(r.quadrature, oracle, 1e-2, "quadrature at beta " + fmt(beta));
        t.rel_within(r.analytic, oracle, 1e-6, "analytic at beta " + fmt(beta));
    }
    t.rel_within(heat_diagonal_domega(1.0, 1.0), -0.0049943, 1e-4, "quoted value");
    return t.outcome();
}

Outcome trace_bound() {
    Tally t;
    double worst_ratio = 0.0;
    for (double L : {3.0, 6.0})
        for (double w : {0.0, 1.0}) {
            const auto spec = BoxSpec::with_spacing(L, 0.1, 60.0);
            const auto sr = spectrum_3d(spec, w);
            for (double beta : {0.5, 1.0}) {
                const double bound = L * L * L * std::pow(2 * pi * beta, -1.5);
                const double tr = trace_heat(sr, beta);
                worst_ratio = std::max(worst_ratio, tr / bound);
                t.require(tr <= bound * (1 + 5e-2), "L " + fmt(L) + " omega " + fmt(w) + " beta " + fmt(beta) +
                                                        ": trace " + fmt(tr) + " bound " + fmt(bound));
            }
        }
    t.note("largest trace/bound " + fmt(worst_ratio));
    return t.outcome();
}

Outcome series_identity() {
    Tally t;
    for (double w : {0.0, 1.0}) {
        const auto spec = BoxSpec::with_spacing(6.0, 0.1, 60.0);
        const auto sr = spectrum_3d(spec, w);
        const ThermoPoint tp(1.0, 0.5, w);
        t.rel_within(pressure_box_series(spec, sr, tp, 60), pressure_box(spec, sr, tp), 1e-8, "omega " + fmt(w));
    }
    return t.outcome();
}

ConvergenceStudy desk_study(Observable obs, int order) {
    ConvergenceStudy s;
    s.observable = obs;
    s.chi_order = order;
    s.beta = 1.0;
    s.omega = 1.0;
    s.fugacity_grid = disk_grid(cplx(0.3, 0.0), 0.6, 12);
    s.box_sides = {4.0, 6.0, 8.0};
    s.grid_spacing = 0.1;
    s.seed = 1;
    return s;
}

struct DeskRun {
    std::string label;
    ConvergenceStudy study;
    std::string bytes;
};

std::vector<DeskRun> desk_runs;

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("magthermo_acceptance_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string run_and_persist(const ConvergenceStudy& study, const std::filesystem::path& cache, const std::filesystem::path& out) {
    HarnessOptions opts;
    opts.cache_dir = cache;
    persist_report(run_convergence(study, opts), out);
    std::ifstream is(out, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome thermodynamic_limit() {
    Tally t;
    const auto cache = scratch("cache");
    const auto out = scratch("reports");
    const std::vector<std::pair<std::string, ConvergenceStudy>> studies{
        {"pressure", desk_study(Observable::pressure, 1)},
        {"chi1", desk_study(Observable::chi, 1)},
        {"chi2", desk_study(Observable::chi, 2)}};
    for (const auto& [label, study] : studies) {
        const auto path = out / (label + ".json");
        const std::string bytes = run_and_persist(study, cache, path);
        desk_runs.push_back({label, study, bytes});
        const auto report = load_report(path);
        std::string sups;
        bool decreasing = true;
        for (std::size_t l = 0; l < report.per_L.size(); ++l) {
            const auto& lr = report.per_L[l];
            sups += (l ? "/" : "") + fmt(lr.sup_diff);
            for (const auto& p : lr.points) t.require(p.ok(), label + " point failed: " + p.error_message);
            if (l > 0 && !(lr.sup_diff < report.per_L[l - 1].sup_diff)) decreasing = false;
        }
        t.require(decreasing, label + " sup differences " + sups + " not strictly decreasing");
        t.require(report.fitted_rate >= 0.5 && report.fitted_rate <= 1.5,
                  label + " rate " + fmt(report.fitted_rate) + " outside [0.5, 1.5]");
        t.note(label + " p=" + fmt(report.fitted_rate) + " sup " + sups);
    }
    std::filesystem::remove_all(cache);
    std::filesystem::remove_all(out);
    return t.outcome();
}

Outcome cross_derivative() {
    Tally t;
    const ThermoPoint tp(1.0, 0.5, 1.0);
    const auto spec = BoxSpec::with_spacing(6.0, 0.1, std::ceil(tail_guard_emax(tp.with_omega(1.05))));
    const auto fd = susceptibility_box(spec, tp, 1);
    const cplx hf = magnetization_hellmann_feynman(spec, tp);
    t.rel_within(fd.value, hf, 1e-4, "finite difference vs Hellmann-Feynman");
    return t.outcome();
}

Outcome determinism() {
    Tally t;
    t.require(!desk_runs.empty(), "no reference runs");
    const auto cache = scratch("cache_repeat");
    const auto out = scratch("reports_repeat");
    for (const auto& run : desk_runs) {
        const std::string again = run_and_persist(run.study, cache, out / (run.label + ".json"));
        t.require(again == run.bytes, run.label + " report differs between runs");
    }
    t.note(std::to_string(desk_runs.size()) + " reports compared byte for byte");
    std::filesystem::remove_all(cache);
    std::filesystem::remove_all(out);
    return t.outcome();
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"special-function consistency", special_functions},
        {"bulk zero-field magnetization and susceptibility", bulk_zero_field},
        {"heat kernel diagonal and zero-field limit", mehler_diagonal},
        {"diamagnetic inequality", diamagnetic},
        {"flux bound and composition counts", flux_bound},
        {"semigroup composition", semigroup},
        {"first-order field derivative", first_order},
        {"trace bound", trace_bound},
        {"log-series identity", series_identity},
        {"finite-size convergence", thermodynamic_limit},
        {"finite difference vs Hellmann-Feynman", cross_derivative},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const Error& e) {
            o = {false, e.kind() + " error: " + e.what()};
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu %s [%.1f s] %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), seconds,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
