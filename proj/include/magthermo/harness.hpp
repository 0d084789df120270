#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magthermo/box.hpp"
#include "magthermo/bulk.hpp"
#include "magthermo/json_format.hpp"

namespace magthermo {

inline constexpr const char* code_version = "magthermo 0.1.0";
inline constexpr int report_schema_version = 1;

enum class Observable { pressure, density, chi };
std::string to_string(Observable o);
Observable observable_from_string(const std::string& s);

/// A finite-size study: the fugacity grid stands in for a compact set in the
/// cut plane, box_sides for the sequence L → ∞. The transverse grid spacing
/// is held fixed across L.
struct ConvergenceStudy {
    Observable observable = Observable::pressure;
    int chi_order = 1;
    double beta = 1.0;
    double omega = 0.0;
    std::vector<cplx> fugacity_grid;
    std::vector<double> box_sides;
    double grid_spacing = 0.1; // grid_policy.h
    std::uint64_t seed = 0;

    /// ValidationError / DomainError on bad fields.
    void validate() const;
};

/// Study config JSON: exactly the fields observable, chi_order, beta, omega,
/// fugacity_grid ([[re, im], ...]), box_sides, grid_policy ({"h": ...}), seed.
ConvergenceStudy study_from_json(const json& j);
json to_json(const ConvergenceStudy& s);
ConvergenceStudy load_study(const std::filesystem::path& path);

struct PointResult {
    cplx z;
    std::optional<cplx> finite;
    std::optional<cplx> bulk;
    double abs_diff = 0.0;
    double error_estimate = 0.0; // stencil estimate for chi, 0 otherwise
    std::string error_kind;      // empty on success
    std::string error_message;

    bool ok() const { return error_kind.empty(); }
};

struct LResult {
    double L = 0.0;
    double h = 0.0;
    int n_perp = 0;
    std::size_t n_eigs = 0;
    double sup_diff = 0.0; // over successful points
    int argmax = -1;
    std::vector<PointResult> points;
};

struct ConvergenceReport {
    std::vector<LResult> per_L;
    double fitted_rate = 0.0;
    double prefactor = 0.0;
    double fit_residual = 0.0;
    ConvergenceStudy study;
    std::string code_version;
};

struct RateFit {
    double p;        // sup_diff ≈ C L^{-p}
    double C;
    double residual; // max relative deviation of the data from the fit
};

/// Log-log least squares. FitError on fewer than 3 points, non-positive
/// values, or no spread in L.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct HarnessOptions {
    std::size_t task_budget = 20000; // |grid| × |box_sides| × stencil width
    LandauSumPolicy landau{};
    StencilPolicy stencil{};
    SolverKind solver = SolverKind::automatic;
    std::optional<std::filesystem::path> cache_dir;
};

/// Finite-volume observable at every (z, L), bulk value at every z, sup over
/// the grid per L, and the fitted decay rate. Per-point failures are recorded
/// in the report; FitError if fewer than 3 distinct L remain usable.
ConvergenceReport run_convergence(const ConvergenceStudy& study, const HarnessOptions& opts = {});

json to_json(const ConvergenceReport& r);
ConvergenceReport report_from_json(const json& j);

/// Writes the JSON report plus a CSV companion next to it (same stem, .csv)
/// with one row per (L, z).
void persist_report(const ConvergenceReport& r, const std::filesystem::path& path);
/// IOError if unreadable; SchemaError on malformed content or version mismatch.
ConvergenceReport load_report(const std::filesystem::path& path);

std::string report_csv(const ConvergenceReport& r);

/// `count` points on the closed disk |z - center| ≤ radius: the center, then
/// rings at radius/2 and radius (three and the remainder, respectively).
std::vector<cplx> disk_grid(cplx center, double radius, int count);

/// Default compact proxy: 12 points on the disk of radius 0.9 about 0.3, plus
/// four points with |z| > 1 away from the cut when omega > 0.
std::vector<cplx> default_fugacity_grid(double omega);

} // namespace magthermo
