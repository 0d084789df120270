#include "magthermo/fermi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "magthermo/errors.hpp"
#include "magthermo/quadrature.hpp"

namespace magthermo {

namespace {

constexpr double series_switch_radius = 0.5;
constexpr double quad_rel_tol = 1e-13;
constexpr double quad_accept_tol = 1e-9;
constexpr std::size_t quad_max_intervals = 400;

std::string to_string(cplx z) {
    return "(" + std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")";
}

void reject_on_cut(cplx z) {
    if (z.imag() == 0.0 && z.real() <= -1.0)
        throw DomainError("fugacity " + to_string(z) + " lies on the cut (-inf, -1]");
}

// Coefficients of P_m with f_{-m}(w) = P_m(w / (1 + w)):
// P_0(s) = s, P_{m+1}(s) = s (1 - s) P_m'(s).
std::vector<double> eulerian_poly(int m) {
    std::vector<double> p{0.0, 1.0};
    for (int k = 0; k < m; ++k) {
        std::vector<double> next(p.size() + 1, 0.0);
        for (std::size_t i = 1; i < p.size(); ++i) {
            const double d = static_cast<double>(i) * p[i]; // coefficient of s^{i-1} in P'
            next[i] += d;
            next[i + 1] -= d;
        }
        p = std::move(next);
    }
    return p;
}

cplx horner(const std::vector<double>& p, cplx s) {
    cplx acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * s + *it;
    return acc;
}

} // namespace

CutPlaneFugacity::CutPlaneFugacity(cplx value, double cut_end) : value_(value), cut_end_(cut_end) {
    if (!(cut_end > 0.0) || !std::isfinite(cut_end))
        throw DomainError("cut_end must be positive and finite");
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
        throw DomainError("fugacity must be finite");
    if (distance_to_cut(value, cut_end) < min_cut_distance)
        throw DomainError("fugacity " + to_string(value) + " is on or within " +
                          std::to_string(min_cut_distance) + " of the cut (-inf, -" +
                          std::to_string(cut_end) + "]");
}

double CutPlaneFugacity::distance_to_cut(cplx z, double cut_end) {
    if (z.real() <= -cut_end) return std::abs(z.imag());
    return std::abs(z - cplx(-cut_end, 0.0));
}

namespace fermi_detail {

cplx series(double nu, cplx z) {
    const double r = std::abs(z);
    if (r >= 1.0) throw DomainError("series route needs |z| < 1");
    if (r == 0.0) return 0.0;
    cplx sum = 0.0;
    cplx zn = 1.0;
    for (int n = 1; n < 100000; ++n) {
        zn *= z;
        const double sign = (n % 2 == 1) ? 1.0 : -1.0;
        const cplx term = sign * zn * std::pow(static_cast<double>(n), -nu);
        sum += term;
        // Terms grow like n^{-nu} |z|^n until past the peak; stop only once
        // the ratio of successive magnitudes is below one.
        const double ratio = r * std::pow(1.0 + 1.0 / n, -nu);
        if (ratio < 1.0 && std::abs(term) <= 1e-17 * std::abs(sum) * (1.0 - ratio))
            return sum;
    }
    throw ConvergenceError("Fermi series did not converge at z=" + to_string(z));
}

cplx negative_integer(int m, cplx z) {
    reject_on_cut(z);
    return horner(eulerian_poly(m), z / (1.0 + z));
}

cplx integral(double a, int m, cplx z) {
    if (!(a > 0.0)) throw DomainError("integral route needs a positive base order");
    reject_on_cut(z);
    if (z == cplx(0.0)) return 0.0;
    const auto poly = eulerian_poly(m);
    const double lnz = std::log(std::abs(z));
    const double center = std::max(lnz, 0.0);

    // integrand in t: t^{a-1} P_m(s), s = z / (e^t + z); tail ~ |z| e^{-t} t^{a-1} m!
    double t_max = center + 40.0;
    auto tail = [&](double t) {
        return std::abs(z) * std::exp(-t) * std::pow(t, a - 1.0) * std::tgamma(m + 2.0);
    };
    while (tail(t_max) > 1e-18 * std::max(1.0, std::abs(z))) t_max += 5.0;

    // s = z / (e^t + z) = -1 / expm1(t - t_pole) with e^{t_pole} = -z, which stays
    // accurate next to the pole.
    const cplx t_pole = std::log(-z);
    auto fermi_weight = [&](double t) -> cplx {
        const double x = t - t_pole.real(), y = -t_pole.imag();
        const double sh = std::sin(0.5 * y);
        const cplx em1(std::expm1(x) * std::cos(y) - 2.0 * sh * sh, std::exp(x) * std::sin(y));
        return horner(poly, -1.0 / em1);
    };

    std::vector<double> t_breaks{0.0};
    if (lnz > 0.0) {
        for (double t : {lnz - 6.0, lnz - 2.0, lnz, lnz + 2.0, lnz + 6.0})
            if (t > t_breaks.back()) t_breaks.push_back(t);
    } else {
        t_breaks.push_back(2.0);
    }
    // Cluster breakpoints geometrically around the pole, which approaches
    // the real t axis as z approaches the cut.
    const double pole_re = std::max(t_pole.real(), 0.0);
    const double pole_dist = std::abs(t_pole - pole_re);
    if (pole_dist < 1.0) {
        for (double w = pole_dist; w < 4.0; w *= 4.0) {
            t_breaks.push_back(pole_re - w);
            t_breaks.push_back(pole_re + w);
        }
        t_breaks.push_back(pole_re);
    }
    std::erase_if(t_breaks, [&](double t) { return t < 0.0 || t >= t_max; });
    t_breaks.push_back(0.0);
    std::sort(t_breaks.begin(), t_breaks.end());
    t_breaks.erase(std::unique(t_breaks.begin(), t_breaks.end()), t_breaks.end());
    t_breaks.push_back(t_max);

    // First segment: substitution removing the t^{a-1} endpoint behaviour,
    //   a >= 1/2: t = u^2,       t^{a-1} dt = 2 u^{2a-1} du
    //   a <  1/2: t = u^{1/a},   t^{a-1} dt = (1/a) du
    const bool square = a >= 0.5;
    auto near_origin = [&](double u) -> cplx {
        double t, jac;
        if (square) {
            t = u * u;
            jac = 2.0 * std::pow(u, 2.0 * a - 1.0);
        } else {
            t = std::pow(u, 1.0 / a);
            jac = 1.0 / a;
        }
        if (jac == 0.0) return 0.0;
        return jac * fermi_weight(t);
    };
    auto away_from_origin = [&](double t) -> cplx { return std::pow(t, a - 1.0) * fermi_weight(t); };

    cplx total = 0.0;
    double err_total = 0.0;
    double l1_total = 0.0;
    for (std::size_t i = 0; i + 1 < t_breaks.size(); ++i) {
        const double lo = t_breaks[i], hi = t_breaks[i + 1];
        if (!(hi > lo)) continue;
        const auto r = i == 0 ? adaptive_gauss_kronrod(near_origin, 0.0,
                                                       square ? std::sqrt(hi) : std::pow(hi, a),
                                                       quad_rel_tol, 0.0, quad_max_intervals)
                              : adaptive_gauss_kronrod(away_from_origin, lo, hi, quad_rel_tol, 0.0,
                                                       quad_max_intervals);
        total += r.value;
        err_total += r.error;
        l1_total += r.l1;
    }
    const double scale = std::max(std::abs(total), 1e-300);
    if (!(err_total <= quad_accept_tol * std::max(scale, 1e-3 * l1_total)))
        throw ConvergenceError("Fermi integral missed its error target at z=" + to_string(z) +
                               " (estimate " + std::to_string(err_total) + ")");
    return total / std::tgamma(a);
}

} // namespace fermi_detail

cplx fermi_any_order(double nu, cplx z) {
    reject_on_cut(z);
    if (z == cplx(0.0)) return 0.0;
    if (std::abs(z) <= series_switch_radius) return fermi_detail::series(nu, z);
    if (nu <= 0.0 && nu == std::floor(nu))
        return fermi_detail::negative_integer(static_cast<int>(-nu), z);
    if (nu > 0.0) return fermi_detail::integral(nu, 0, z);
    const int m = static_cast<int>(std::ceil(-nu));
    return fermi_detail::integral(nu + m, m, z);
}

cplx fermi_f(double alpha, const CutPlaneFugacity& z) {
    if (!(alpha > 0.0)) throw DomainError("Fermi order alpha must be positive");
    if (z.cut_end() != 1.0)
        throw DomainError("fermi_f expects a fugacity validated against the unit cut");
    const cplx value = fermi_any_order(alpha, z.value());
    if (z.value().imag() == 0.0) return {value.real(), 0.0};
    return value;
}

TaylorJet fermi_f_jet(double alpha, const TaylorJet& arg) {
    if (!(alpha > 0.0)) throw DomainError("Fermi order alpha must be positive");
    const CutPlaneFugacity z0(arg[0]);
    const std::size_t order = arg.order();
    TaylorJet out(order, arg.base());

    if (z0.value() == cplx(0.0)) {
        // arg = O(ε): the power series terminates at the jet order.
        TaylorJet power = TaylorJet::constant(1.0, order, arg.base());
        for (std::size_t n = 1; n <= order; ++n) {
            power *= arg;
            const double sign = (n % 2 == 1) ? 1.0 : -1.0;
            out += power * cplx(sign * std::pow(static_cast<double>(n), -alpha));
        }
        return out;
    }

    // f_α(z0 e^u) = Σ_j f_{α-j}(z0) u^j / j!, with u = log(arg / z0) = O(ε).
    TaylorJet u = log(arg);
    u[0] = 0.0;
    TaylorJet power = TaylorJet::constant(1.0, order, arg.base());
    double inv_fact = 1.0;
    for (std::size_t j = 0; j <= order; ++j) {
        if (j > 0) {
            power *= u;
            inv_fact /= static_cast<double>(j);
        }
        out += power * (fermi_any_order(alpha - static_cast<double>(j), z0.value()) * inv_fact);
    }
    return out;
}

} // namespace magthermo
