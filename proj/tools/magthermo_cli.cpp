#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "magthermo/box.hpp"
#include "magthermo/bulk.hpp"
#include "magthermo/errors.hpp"
#include "magthermo/fermi.hpp"
#include "magthermo/harness.hpp"
#include "magthermo/json_format.hpp"
#include "magthermo/mehler.hpp"
#include "magthermo/parallel.hpp"

using namespace magthermo;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_numerical = 2;

void emit_error(const std::string& kind, const std::string& message) {
    json rec{{"error", {{"kind", kind}, {"message", message}}}};
    std::cerr << rec.dump() << '\n';
}

cplx parse_complex(const std::string& text) {
    double re = 0.0, im = 0.0;
    std::istringstream is(text);
    char comma = 0;
    if (!(is >> re)) throw ValidationError("cannot parse complex number '" + text + "'");
    if (is >> comma) {
        if (comma != ',' || !(is >> im)) throw ValidationError("complex numbers are written RE,IM, got '" + text + "'");
    }
    std::string rest;
    if (is >> rest) throw ValidationError("trailing characters in '" + text + "'");
    return {re, im};
}

SolverKind parse_solver(const std::string& name) {
    static const std::map<std::string, SolverKind> kinds{{"auto", SolverKind::automatic},
                                                         {"dense", SolverKind::dense},
                                                         {"band", SolverKind::band},
                                                         {"lanczos", SolverKind::lanczos}};
    const auto it = kinds.find(name);
    if (it == kinds.end()) throw ValidationError("unknown solver '" + name + "'");
    return it->second;
}

struct Globals {
    int threads = 1;
    std::string cache_dir;
    std::string log_level = "warn";
};

struct SpecialArgs {
    double alpha = 0.0;
    std::string z;
};

struct BulkArgs {
    double beta = 1.0;
    std::string z;
    double omega = 0.0;
    int n = 1;
};

struct BoxArgs {
    double L = 0.0;
    int n_perp = 0;
    double beta = 1.0;
    std::string z;
    double omega = 0.0;
    int chi_order = 1;
    double e_max = 0.0;
    std::string solver = "auto";
};

struct KernelArgs {
    double omega = 1.0;
    double beta = 1.0;
    double tol = 1e-3;
};

struct ConvergeArgs {
    std::string config;
    std::string out;
};

json run_special(const SpecialArgs& a) {
    const cplx z = parse_complex(a.z);
    const cplx value = fermi_f(a.alpha, CutPlaneFugacity(z));
    return {{"alpha", a.alpha}, {"z", to_json(z)}, {"value", to_json(value)}};
}

json run_bulk(const BulkArgs& a) {
    const ThermoPoint tp(a.beta, parse_complex(a.z), a.omega);
    return {{"beta", a.beta},
            {"z", to_json(tp.z())},
            {"omega", a.omega},
            {"N", a.n},
            {"pressure", to_json(pressure_bulk(tp))},
            {"density", to_json(density_bulk(tp))},
            {"chi", to_json(susceptibility_bulk(tp, a.n))}};
}

json run_box(const BoxArgs& a, const Globals& g) {
    const ThermoPoint tp(a.beta, parse_complex(a.z), a.omega);
    const double e_max = a.e_max > 0.0 ? a.e_max : std::ceil(tail_guard_emax(tp.with_omega(a.omega + 0.05)));
    const BoxSpec spec{a.L, a.n_perp, e_max, BoxSpec{}.longitudinal_mode_cap};
    spec.validate();
    SpectrumOptions opts;
    opts.solver = parse_solver(a.solver);
    if (!g.cache_dir.empty()) opts.cache_dir = std::filesystem::path(g.cache_dir);
    spdlog::info("box L={} n_perp={} h={} e_max={}", spec.side_L, spec.n_perp, spec.h(), spec.e_max);
    const auto sr = spectrum_3d(spec, a.omega, opts);
    spdlog::info("{} eigenvalues from {}", sr.eigenvalues.size(), sr.solver);
    const cplx pressure = pressure_box(spec, sr, tp);
    const cplx density = density_box(spec, sr, tp);
    const auto chi = susceptibility_box(spec, tp, a.chi_order, {}, default_spectrum_provider(spec, opts));
    return {{"L", spec.side_L},
            {"h", spec.h()},
            {"n_perp", spec.n_perp},
            {"e_max", spec.e_max},
            {"n_eigs", sr.eigenvalues.size()},
            {"chi_order", a.chi_order},
            {"pressure", to_json(pressure)},
            {"density", to_json(density)},
            {"chi", to_json(chi.value)},
            {"error_estimate", chi.error_estimate}};
}

json run_kernel_verify(const KernelArgs& a) {
    FirstOrderPolicy policy;
    policy.tol = a.tol;
    const auto r = first_order_term_verify(a.omega, a.beta, policy);
    return {{"omega", a.omega},
            {"beta", a.beta},
            {"analytic", r.analytic},
            {"quadrature", r.quadrature},
            {"rel_error", r.rel_error},
            {"error_estimate", r.error_estimate},
            {"nodes", r.nodes},
            {"monte_carlo", r.monte_carlo}};
}

std::string sup_table(const ConvergenceReport& r) {
    std::ostringstream os;
    os << "L,h,n_perp,n_eigs,sup_diff\n";
    for (const auto& lr : r.per_L) {
        os << dump17(json(lr.L)) << ',' << dump17(json(lr.h)) << ',' << lr.n_perp << ',' << lr.n_eigs << ','
           << dump17(json(lr.sup_diff)) << '\n';
    }
    return os.str();
}

json run_converge(const ConvergeArgs& a, const Globals& g) {
    const auto study = load_study(a.config);
    HarnessOptions opts;
    if (!g.cache_dir.empty()) opts.cache_dir = std::filesystem::path(g.cache_dir);
    spdlog::info("study: {} box sides, {} fugacities", study.box_sides.size(), study.fugacity_grid.size());
    const auto report = run_convergence(study, opts);
    const std::filesystem::path out(a.out);
    persist_report(report, out);
    auto sup_path = out;
    sup_path.replace_extension(".sup.csv");
    std::ofstream os(sup_path);
    if (!os) throw IOError("cannot open " + sup_path.string() + " for writing");
    os << sup_table(report);
    auto csv_path = out;
    csv_path.replace_extension(".csv");
    json sups = json::array();
    for (const auto& lr : report.per_L) sups.push_back({{"L", lr.L}, {"sup_diff", lr.sup_diff}});
    return {{"report", out.string()},
            {"csv", csv_path.string()},
            {"sup_table", sup_path.string()},
            {"per_L", sups},
            {"fitted_rate", report.fitted_rate},
            {"prefactor", report.prefactor}};
}

void configure_logging(const std::string& level) {
    auto logger = spdlog::stderr_color_mt("magthermo");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::from_str(level));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermodynamics of a Fermi gas in a constant magnetic field"};
    app.require_subcommand(1, 1);
    app.allow_extras(false);

    Globals g;
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--cache-dir", g.cache_dir, "Spectrum cache directory");
    app.add_option("--log-level", g.log_level, "Log level")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    SpecialArgs sa;
    auto* special = app.add_subcommand("special", "Fermi function f_alpha(z)");
    special->add_option("--alpha", sa.alpha, "Order alpha > 0")->required();
    special->add_option("--z", sa.z, "Fugacity RE,IM")->required();

    BulkArgs ba;
    auto* bulk = app.add_subcommand("bulk", "Infinite-volume pressure, density and susceptibility");
    bulk->add_option("--beta", ba.beta, "Inverse temperature")->required();
    bulk->add_option("--z", ba.z, "Fugacity RE,IM")->required();
    bulk->add_option("--omega", ba.omega, "Larmor frequency")->required();
    bulk->add_option("--n", ba.n, "Derivative order in omega")->default_val(1);

    BoxArgs xa;
    auto* box = app.add_subcommand("box", "Finite-box observables from the lattice spectrum");
    box->add_option("--L", xa.L, "Cube side")->required();
    box->add_option("--n-perp", xa.n_perp, "Transverse grid points per dimension")->required();
    box->add_option("--beta", xa.beta, "Inverse temperature")->required();
    box->add_option("--z", xa.z, "Fugacity RE,IM")->required();
    box->add_option("--omega", xa.omega, "Larmor frequency")->required();
    box->add_option("--chi-order", xa.chi_order, "Derivative order in omega")->default_val(1);
    box->add_option("--e-max", xa.e_max, "Spectral cutoff (default: from the tail guard)");
    box->add_option("--solver", xa.solver, "auto, dense, band or lanczos")->default_val("auto");

    KernelArgs ka;
    auto* kernel = app.add_subcommand("kernel-verify", "First-order Duhamel term against d/domega of the heat kernel");
    kernel->add_option("--omega", ka.omega, "Larmor frequency")->required();
    kernel->add_option("--beta", ka.beta, "Inverse temperature")->required();
    kernel->add_option("--tol", ka.tol, "Accepted relative quadrature error")->default_val(1e-3);

    ConvergeArgs ca;
    auto* converge = app.add_subcommand("converge", "Finite-size convergence study");
    converge->add_option("--config", ca.config, "Study JSON")->required();
    converge->add_option("--out", ca.out, "Report JSON path")->required();

    for (auto* sub : {special, bulk, box, kernel, converge}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return exit_input;
    }

    configure_logging(g.log_level);
    set_thread_count(g.threads);

    try {
        json result;
        if (*special) result = run_special(sa);
        else if (*bulk) result = run_bulk(ba);
        else if (*box) result = run_box(xa, g);
        else if (*kernel) result = run_kernel_verify(ka);
        else result = run_converge(ca, g);
        std::cout << dump17(result) << '\n';
        return exit_ok;
    } catch (const Error& e) {
        emit_error(e.kind(), e.what());
        return e.numerical() ? exit_numerical : exit_input;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return exit_numerical;
    }
}
