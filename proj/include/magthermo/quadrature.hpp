#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace magthermo {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [-1, 1] (Golub–Welsch).
QuadratureRule gauss_legendre(std::size_t n);

/// n-point Gauss–Hermite rule for the weight e^{-x^2} on the real line.
QuadratureRule gauss_hermite(std::size_t n);

/// Sum over [lo, hi) in a fixed pairwise tree.
template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        T s{};
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
    return v.empty() ? T{} : pairwise_sum(v, 0, v.size());
}

template <class T>
struct AdaptiveResult {
    T value{};
    double error = 0.0;
    double l1 = 0.0;
    std::size_t intervals = 0;
};

/// Globally adaptive 15-point Gauss–Kronrod: repeatedly bisects the interval
/// with the largest |K15 - G7| estimate until the summed estimate is below
/// max(abs_tol, rel_tol |value|) or `max_intervals` is reached.
template <class F>
auto adaptive_gauss_kronrod(F f, double a, double b, double rel_tol, double abs_tol,
                            std::size_t max_intervals = 2000) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    using T = decltype(f(a));
    struct Piece {
        double lo, hi;
        T value;
        double error, l1;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    auto rule = [&](double lo, double hi) {
        double err = 0.0, l1 = 0.0;
        const T v = GK::integrate(f, lo, hi, 0, 0.0, &err, &l1);
        return Piece{lo, hi, v, err * 0.5 * (hi - lo), l1};
    };
    std::priority_queue<Piece> heap;
    heap.push(rule(a, b));
    T total = heap.top().value;
    double err = heap.top().error;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && heap.size() < max_intervals) {
        const Piece worst = heap.top();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) break;
        heap.pop();
        const Piece left = rule(worst.lo, mid), right = rule(mid, worst.hi);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    std::vector<T> values;
    std::vector<double> errors, l1s;
    for (; !heap.empty(); heap.pop()) {
        values.push_back(heap.top().value);
        errors.push_back(heap.top().error);
        l1s.push_back(heap.top().l1);
    }
    return AdaptiveResult<T>{pairwise_sum(values), pairwise_sum(errors), pairwise_sum(l1s),
                             values.size()};
}

} // namespace magthermo
