#include "magthermo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "magthermo/errors.hpp"
#include "magthermo/parallel.hpp"

namespace magthermo {

std::string to_string(Observable o) {
    switch (o) {
    case Observable::pressure: return "pressure";
    case Observable::density: return "density";
    case Observable::chi: return "chi";
    }
    return "unknown";
}

Observable observable_from_string(const std::string& s) {
    if (s == "pressure") return Observable::pressure;
    if (s == "density") return Observable::density;
    if (s == "chi") return Observable::chi;
    throw ValidationError("unknown observable '" + s + "'");
}

void ConvergenceStudy::validate() const {
    if (!(beta > 0.0)) throw ValidationError("beta must be positive");
    if (!(omega >= 0.0)) throw ValidationError("omega must be non-negative");
    if (observable == Observable::chi && (chi_order < 1 || chi_order > 4))
        throw OrderError("chi_order must lie in [1, 4] for box susceptibilities");
    if (fugacity_grid.empty()) throw ValidationError("fugacity_grid is empty");
    for (const auto z : fugacity_grid) ThermoPoint(beta, z, omega); // D-membership
    if (box_sides.size() < 3) throw ValidationError("box_sides needs at least 3 entries");
    for (std::size_t k = 1; k < box_sides.size(); ++k)
        if (box_sides[k] < box_sides[k - 1]) throw ValidationError("box_sides must be ascending");
    if (!(grid_spacing > 0.0)) throw ValidationError("grid_policy.h must be positive");
}

// ---------------------------------------------------------------- JSON

ConvergenceStudy study_from_json(const json& j) {
    static const std::set<std::string> keys{"observable", "chi_order",  "beta",        "omega",
                                            "fugacity_grid", "box_sides", "grid_policy", "seed"};
    if (!j.is_object()) throw SchemaError("study config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!keys.count(it.key())) throw SchemaError("unknown study field '" + it.key() + "'");
    for (const auto& k : keys)
        if (!j.contains(k)) throw SchemaError("study field '" + k + "' missing");
    try {
        ConvergenceStudy s;
        s.observable = observable_from_string(j.at("observable").get<std::string>());
        s.chi_order = j.at("chi_order").get<int>();
        s.beta = j.at("beta").get<double>();
        s.omega = j.at("omega").get<double>();
        for (const auto& z : j.at("fugacity_grid")) s.fugacity_grid.push_back(complex_from_json(z));
        s.box_sides = j.at("box_sides").get<std::vector<double>>();
        const auto& gp = j.at("grid_policy");
        if (!gp.is_object() || gp.size() != 1 || !gp.contains("h"))
            throw SchemaError("grid_policy must be {\"h\": spacing}");
        s.grid_spacing = gp.at("h").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed study: ") + e.what());
    }
}

json to_json(const ConvergenceStudy& s) {
    json grid = json::array();
    for (const auto z : s.fugacity_grid) grid.push_back(to_json(z));
    return {{"observable", to_string(s.observable)},
            {"chi_order", s.chi_order},
            {"beta", s.beta},
            {"omega", s.omega},
            {"fugacity_grid", grid},
            {"box_sides", s.box_sides},
            {"grid_policy", {{"h", s.grid_spacing}}},
            {"seed", s.seed}};
}

namespace {

json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IOError("cannot open " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw SchemaError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace

ConvergenceStudy load_study(const std::filesystem::path& path) {
    return study_from_json(read_json_file(path));
}

json to_json(const ConvergenceReport& r) {
    json per_l = json::array();
    for (const auto& l : r.per_L) {
        json pts = json::array();
        for (const auto& p : l.points) {
            json jp = {{"z", to_json(p.z)}};
            if (p.ok()) {
                jp["finite"] = to_json(*p.finite);
                jp["bulk"] = to_json(*p.bulk);
                jp["abs_diff"] = p.abs_diff;
                jp["error_estimate"] = p.error_estimate;
            } else {
                jp["error"] = {{"kind", p.error_kind}, {"message", p.error_message}};
            }
            pts.push_back(std::move(jp));
        }
        per_l.push_back({{"L", l.L},
                         {"h", l.h},
                         {"n_perp", l.n_perp},
                         {"n_eigs", l.n_eigs},
                         {"sup_diff", l.sup_diff},
                         {"argmax", l.argmax},
                         {"points", std::move(pts)}});
    }
    return {{"schema_version", report_schema_version},
            {"per_L", std::move(per_l)},
            {"fitted_rate", r.fitted_rate},
            {"prefactor", r.prefactor},
            {"fit_residual", r.fit_residual},
            {"provenance", {{"study", to_json(r.study)}, {"code_version", r.code_version}}}};
}

ConvergenceReport report_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("schema_version"))
            throw SchemaError("report lacks schema_version");
        if (j.at("schema_version").get<int>() != report_schema_version)
            throw SchemaError("report schema version mismatch");
        ConvergenceReport r;
        r.fitted_rate = j.at("fitted_rate").get<double>();
        r.prefactor = j.at("prefactor").get<double>();
        r.fit_residual = j.at("fit_residual").get<double>();
        r.study = study_from_json(j.at("provenance").at("study"));
        r.code_version = j.at("provenance").at("code_version").get<std::string>();
        for (const auto& jl : j.at("per_L")) {
            LResult l;
            l.L = jl.at("L").get<double>();
            l.h = jl.at("h").get<double>();
            l.n_perp = jl.at("n_perp").get<int>();
            l.n_eigs = jl.at("n_eigs").get<std::size_t>();
            l.sup_diff = jl.at("sup_diff").get<double>();
            l.argmax = jl.at("argmax").get<int>();
            for (const auto& jp : jl.at("points")) {
                PointResult p;
                p.z = complex_from_json(jp.at("z"));
                if (jp.contains("error")) {
                    p.error_kind = jp.at("error").at("kind").get<std::string>();
                    p.error_message = jp.at("error").at("message").get<std::string>();
                } else {
                    p.finite = complex_from_json(jp.at("finite"));
                    p.bulk = complex_from_json(jp.at("bulk"));
                    p.abs_diff = jp.at("abs_diff").get<double>();
                    p.error_estimate = jp.at("error_estimate").get<double>();
                }
                l.points.push_back(std::move(p));
            }
            r.per_L.push_back(std::move(l));
        }
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed report: ") + e.what());
    }
}

std::string report_csv(const ConvergenceReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "L,z_re,z_im,finite_value_re,finite_value_im,bulk_value_re,bulk_value_im,abs_diff\n";
    for (const auto& l : r.per_L)
        for (const auto& p : l.points) {
            os << l.L << ',' << p.z.real() << ',' << p.z.imag() << ',';
            if (p.ok())
                os << p.finite->real() << ',' << p.finite->imag() << ',' << p.bulk->real() << ','
                   << p.bulk->imag() << ',' << p.abs_diff << '\n';
            else
                os << "nan,nan,nan,nan,nan\n";
        }
    return os.str();
}

void persist_report(const ConvergenceReport& r, const std::filesystem::path& path) {
    {
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw IOError("cannot open " + path.string() + " for writing");
        os << dump17(to_json(r)) << '\n';
        if (!os) throw IOError("write to " + path.string() + " failed");
    }
    auto csv_path = path;
    csv_path.replace_extension(".csv");
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw IOError("cannot open " + csv_path.string() + " for writing");
    csv << report_csv(r);
}

ConvergenceReport load_report(const std::filesystem::path& path) {
    return report_from_json(read_json_file(path));
}

// ---------------------------------------------------------------- fitting

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw FitError("rate fit needs at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [L, d] : points) {
        if (!(L > 0.0) || !(d > 0.0) || !std::isfinite(d))
            throw FitError("rate fit needs positive L and positive finite differences");
        const double x = std::log(L), y = std::log(d);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double var = sxx - sx * sx / n;
    if (!(var > 1e-12 * std::max(1.0, sxx))) throw FitError("box sides have no spread");
    const double slope = (sxy - sx * sy / n) / var;
    const double intercept = (sy - slope * sx) / n;
    RateFit fit{-slope, std::exp(intercept), 0.0};
    for (const auto& [L, d] : points)
        fit.residual = std::max(fit.residual, std::abs(fit.C * std::pow(L, slope) - d) / d);
    return fit;
}

// ---------------------------------------------------------------- grids

std::vector<cplx> disk_grid(cplx center, double radius, int count) {
    if (count < 1) throw ValidationError("grid needs at least one point");
    std::vector<cplx> pts{center};
    const int inner = std::min(3, count - 1);
    const int outer = count - 1 - inner;
    for (int k = 0; k < inner; ++k)
        pts.push_back(center + std::polar(0.5 * radius, 2.0 * std::numbers::pi * (k + 0.25) / inner));
    for (int k = 0; k < outer; ++k)
        pts.push_back(center + std::polar(radius, 2.0 * std::numbers::pi * k / outer));
    return pts;
}

std::vector<cplx> default_fugacity_grid(double omega) {
    auto pts = disk_grid(0.3, 0.9, 12);
    if (omega > 0.0)
        for (cplx z : {cplx(1.5, 0.0), cplx(2.0, 0.5), cplx(1.2, -0.8), cplx(-0.5, 1.2)})
            pts.push_back(z);
    return pts;
}

// ---------------------------------------------------------------- driver

ConvergenceReport run_convergence(const ConvergenceStudy& study, const HarnessOptions& opts) {
    study.validate();
    const std::set<double> distinct(study.box_sides.begin(), study.box_sides.end());
    if (distinct.size() < 3) throw FitError("box_sides need at least 3 distinct values");

    const bool is_chi = study.observable == Observable::chi;
    const int order = is_chi ? study.chi_order : 0;
    const double step = is_chi ? (opts.stencil.step > 0.0
                                      ? opts.stencil.step
                                      : std::max(1e-2, std::pow(1e-13, 1.0 / (order + 2))))
                               : 0.0;
    const std::vector<double> offsets = is_chi ? stencil_offsets(order) : std::vector<double>{0.0};
    const std::size_t tasks = study.fugacity_grid.size() * study.box_sides.size() * offsets.size();
    if (tasks > opts.task_budget)
        throw ValidationError("study needs " + std::to_string(tasks) + " tasks, budget is " +
                              std::to_string(opts.task_budget));

    // e_max: tail guard over the grid at ω + max(0.05, largest stencil offset), rounded up
    double e_max = 0.0;
    const double omega_top = study.omega + std::max(0.05, step * offsets.back());
    for (const auto z : study.fugacity_grid)
        e_max = std::max(e_max, tail_guard_emax(ThermoPoint(study.beta, z, omega_top)));
    e_max = std::ceil(e_max);

    std::vector<BoxSpec> specs;
    for (double L : study.box_sides) specs.push_back(BoxSpec::with_spacing(L, study.grid_spacing, e_max));

    // spectra for every (L, ω-node), solved as independent tasks
    struct SpectrumTask {
        std::size_t l;
        double omega;
    };
    std::vector<SpectrumTask> spectrum_tasks;
    for (std::size_t l = 0; l < specs.size(); ++l)
        for (double off : offsets) spectrum_tasks.push_back({l, study.omega + off * step});
    std::vector<std::optional<SpectralResult>> spectra(spectrum_tasks.size());
    std::vector<std::string> spectrum_errors(spectrum_tasks.size());
    SpectrumOptions sopts;
    sopts.solver = opts.solver;
    sopts.cache_dir = opts.cache_dir;
    sopts.seed = study.seed;
    parallel_for(spectrum_tasks.size(), [&](std::size_t k) {
        try {
            spectra[k] = spectrum_3d(specs[spectrum_tasks[k].l], spectrum_tasks[k].omega, sopts);
        } catch (const Error& e) {
            spectrum_errors[k] = e.kind() + ": " + e.what();
        }
    });
    auto lookup = [&](std::size_t l, double omega) -> const SpectralResult& {
        for (std::size_t k = 0; k < spectrum_tasks.size(); ++k)
            if (spectrum_tasks[k].l == l && spectrum_tasks[k].omega == omega) {
                if (!spectra[k]) throw SolverError(spectrum_errors[k]);
                return *spectra[k];
            }
        throw SolverError("spectrum for the requested omega was not scheduled");
    };

    // bulk references, one per grid point
    const std::size_t nz = study.fugacity_grid.size();
    std::vector<std::optional<cplx>> bulk(nz);
    std::vector<std::pair<std::string, std::string>> bulk_errors(nz);
    parallel_for(nz, [&](std::size_t i) {
        try {
            const ThermoPoint tp(study.beta, study.fugacity_grid[i], study.omega);
            switch (study.observable) {
            case Observable::pressure: bulk[i] = pressure_bulk(tp, opts.landau); break;
            case Observable::density: bulk[i] = density_bulk(tp, opts.landau); break;
            case Observable::chi: bulk[i] = susceptibility_bulk(tp, order, opts.landau); break;
            }
        } catch (const Error& e) {
            bulk_errors[i] = {e.kind(), e.what()};
        }
    });

    ConvergenceReport report;
    report.study = study;
    report.code_version = code_version;
    report.per_L.resize(specs.size());
    for (auto& lr : report.per_L) lr.points.assign(nz, PointResult{});

    parallel_for(specs.size() * nz, [&](std::size_t task) {
        const std::size_t l = task / nz, i = task % nz;
        PointResult& p = report.per_L[l].points[i];
        p.z = study.fugacity_grid[i];
        try {
            if (!bulk[i]) {
                p.error_kind = bulk_errors[i].first;
                p.error_message = bulk_errors[i].second;
                return;
            }
            const ThermoPoint tp(study.beta, p.z, study.omega);
            switch (study.observable) {
            case Observable::pressure: p.finite = pressure_box(specs[l], lookup(l, study.omega), tp); break;
            case Observable::density: p.finite = density_box(specs[l], lookup(l, study.omega), tp); break;
            case Observable::chi: {
                StencilPolicy sp = opts.stencil;
                sp.step = step;
                const auto res = susceptibility_box(specs[l], tp, order, sp,
                                                    [&](double w) { return lookup(l, w); });
                p.finite = res.value;
                p.error_estimate = res.error_estimate;
                break;
            }
            }
            p.bulk = bulk[i];
            p.abs_diff = std::abs(*p.finite - *p.bulk);
        } catch (const Error& e) {
            p.finite.reset();
            p.error_kind = e.kind();
            p.error_message = e.what();
        }
    });

    std::vector<std::pair<double, double>> fit_points;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        auto& lr = report.per_L[l];
        lr.L = specs[l].side_L;
        lr.h = specs[l].h();
        lr.n_perp = specs[l].n_perp;
        if (const auto it = std::find_if(spectrum_tasks.begin(), spectrum_tasks.end(),
                                         [&](const SpectrumTask& t) { return t.l == l && t.omega == study.omega; });
            it != spectrum_tasks.end() && spectra[static_cast<std::size_t>(it - spectrum_tasks.begin())])
            lr.n_eigs = spectra[static_cast<std::size_t>(it - spectrum_tasks.begin())]->eigenvalues.size();
        for (std::size_t i = 0; i < nz; ++i) {
            const auto& p = lr.points[i];
            if (p.ok() && (lr.argmax < 0 || p.abs_diff > lr.sup_diff)) {
                lr.sup_diff = p.abs_diff;
                lr.argmax = static_cast<int>(i);
            }
        }
        if (lr.argmax >= 0 && lr.sup_diff > 0.0) fit_points.emplace_back(lr.L, lr.sup_diff);
    }
    const RateFit fit = fit_rate(fit_points);
    report.fitted_rate = fit.p;
    report.prefactor = fit.C;
    report.fit_residual = fit.residual;
    return report;
}

} // namespace magthermo
