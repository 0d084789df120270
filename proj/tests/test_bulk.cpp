#include <doctest.h>

#include <cmath>
#include <numbers>

#include "magthermo/bulk.hpp"
#include "magthermo/errors.hpp"
#include "magthermo/mehler.hpp"
#include "test_support.hpp"

using namespace magthermo;

namespace {

// N-th central difference of P_∞ in ω with one Richardson step.
cplx fd_derivative(double beta, cplx z, double omega, int N, double h) {
    auto stencil = [&](double s) {
        auto P = [&](double w) { return pressure_bulk(ThermoPoint(beta, z, std::abs(w))); };
        switch (N) {
        case 1: return (P(omega + s) - P(omega - s)) / (2.0 * s);
        case 2: return (P(omega + s) - 2.0 * P(omega) + P(omega - s)) / (s * s);
        default:
            return (P(omega + 2 * s) - 2.0 * P(omega + s) + 2.0 * P(omega - s) - P(omega - 2 * s)) /
                   (2.0 * s * s * s);
        }
    };
    const cplx coarse = stencil(h), fine = stencil(h / 2);
    return fine + (fine - coarse) / 3.0;
}

} // namespace

TEST_CASE("reference values") {
    CHECK_REL(pressure_bulk(ThermoPoint(1, 1, 0)), 0.055061674035153796, 1e-12);
    CHECK_REL(density_bulk(ThermoPoint(1, 1, 0)), 0.048581966617733362, 1e-12);
    CHECK_REL(pressure_bulk(ThermoPoint(1, 0.5, 1)), 0.028376138022663776, 1e-12);
    CHECK_REL(pressure_bulk(ThermoPoint(1, 0.5, 2)), 0.025602964300126472, 1e-12);
    CHECK_REL(pressure_bulk(ThermoPoint(0.5, 0.3, 1)), 0.10165533952918835, 1e-12);
    CHECK(pressure_bulk(ThermoPoint(1, 0, 1.3)) == cplx(0.0));
    CHECK(density_bulk(ThermoPoint(1, 0, 0)) == cplx(0.0));
}

TEST_CASE("zero-field response is quadratic") {
    for (double beta : {0.5, 1.0, 2.0})
        for (double z : {0.3, 0.9, 1.0}) {
            const ThermoPoint tp(beta, z, 0.0);
            CHECK(std::abs(susceptibility_bulk(tp, 1)) <= 1e-10);
            CHECK(std::abs(susceptibility_bulk(tp, 3)) <= 1e-10);
        }
    CHECK_ABS(susceptibility_bulk(ThermoPoint(1, 1, 0), 2), -0.0032006011868774371, 1e-12);
    CHECK_ABS(fd_derivative(1, 1, 0, 2, 0.02), -0.0032006011868774371, 1e-6);
}

TEST_CASE("jet at zero field is even") {
    for (double z : {0.2, 0.6, 1.0}) {
        const auto j = pressure_bulk_jet(ThermoPoint(1, z, 0), 8);
        for (std::size_t k = 1; k <= 8; k += 2) CHECK(std::abs(j[k]) < 1e-12);
    }
}

TEST_CASE("weak field correction scales as omega squared") {
    const ThermoPoint base(1, 0.5, 0);
    const cplx p0 = pressure_bulk(base);
    CHECK(std::abs(pressure_bulk(base.with_omega(0.01)) - p0) <= 1e-4 * std::abs(p0));
    const double d2 = std::abs(pressure_bulk(base.with_omega(0.02)) - p0);
    const double d1 = std::abs(pressure_bulk(base.with_omega(0.01)) - p0);
    CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("both sides of the small-field threshold agree") {
    LandauSumPolicy sum_only;
    sum_only.small_omega_threshold = 1e-9;
    sum_only.level_cap = 20'000'000;
    for (double w : {2e-3, 5e-3}) {
        const ThermoPoint tp(1, cplx(0.6, 0.2), w);
        LandauSumPolicy expansion;
        expansion.small_omega_threshold = 1e-2;
        CHECK_REL(pressure_bulk(tp, expansion), pressure_bulk(tp, sum_only), 1e-10);
    }
}

TEST_CASE("density is beta z dP/dz") {
    const double h = 1e-5;
    const ThermoPoint tp(1, 0.5, 1);
    const cplx dP = (pressure_bulk(tp.with_z(0.5 + h)) - pressure_bulk(tp.with_z(0.5 - h))) / (2 * h);
    CHECK_REL(density_bulk(tp), 0.5 * dP, 1e-7);
}

TEST_CASE("jet derivatives agree with Richardson differences") {
    for (double w : {0.0, 0.5, 1.0})
        for (double z : {0.3, 0.9})
            for (int N : {1, 2, 3}) {
                CAPTURE(w);
                CAPTURE(z);
                CAPTURE(N);
                const cplx chi = susceptibility_bulk(ThermoPoint(1, z, w), N);
                const cplx fd = fd_derivative(1, z, w, N, N == 3 ? 0.05 : 0.02);
                if (std::abs(chi) < 1e-9)
                    CHECK(std::abs(fd) < 1e-7);
                else
                    CHECK_REL(chi, fd, 1e-5);
            }
}

TEST_CASE("heat-kernel series reproduces the Landau sum") {
    for (double w : {0.0, 1.0, 2.0})
        for (cplx z : {cplx(0.5), cplx(0.8), cplx(-0.7, 0.3), cplx(0.1, 0.75)}) {
            const ThermoPoint tp(1, z, w);
            CHECK_REL(pressure_series_smallz(tp, 200), pressure_bulk(tp), 1e-9);
        }
    const ThermoPoint tp(1, 0.5, 0);
    CHECK_REL(pressure_series_smallz(tp, 60), pressure_bulk(tp), 1e-10);
    CHECK(std::abs(pressure_series_smallz(tp, 60) - pressure_bulk(tp)) <=
          pressure_series_smallz_bound(tp, 60) + 1e-14 * std::abs(pressure_bulk(tp)));
    CHECK(pressure_series_smallz_bound(tp, 5) > 0.0);
    CHECK(std::abs(pressure_series_smallz(tp, 5) - pressure_bulk(tp)) <= pressure_series_smallz_bound(tp, 5));
    CHECK_REL(pressure_series_smallz(ThermoPoint(1, 0.5, 2), 1), 0.5 * 0.054027885844273252, 1e-12);
    CHECK_THROWS_AS(pressure_series_smallz(ThermoPoint(1, 1.2, 1), 10), DomainError);
}

TEST_CASE("susceptibilities are holomorphic in z") {
    const cplx c = 0.5;
    const double r = 0.1;
    const int M = 32;
    for (int N : {1, 2}) {
        cplx sum = 0.0;
        for (int k = 0; k < M; ++k) {
            const cplx z = c + std::polar(r, 2.0 * std::numbers::pi * k / M);
            sum += susceptibility_bulk(ThermoPoint(1, z, 1.0), N);
        }
        CHECK_REL(sum / double(M), susceptibility_bulk(ThermoPoint(1, c, 1.0), N), 1e-6);
    }
}

TEST_CASE("domain and policy validation") {
    CHECK_THROWS_AS(ThermoPoint(0.0, 0.5, 1), DomainError);
    CHECK_THROWS_AS(ThermoPoint(1, 0.5, -1), DomainError);
    CHECK_THROWS_AS(ThermoPoint(1, -2.0, 1), DomainError);  // e^{1/2} < 2
    CHECK_NOTHROW(ThermoPoint(1, -1.5, 1));                 // cut starts at -e^{1/2}
    CHECK_THROWS_AS(susceptibility_bulk(ThermoPoint(1, 0.5, 1), 9), OrderError);
    CHECK_THROWS_AS(susceptibility_bulk(ThermoPoint(1, 0.5, 1), 0), OrderError);
    LandauSumPolicy tiny;
    tiny.level_cap = 16;
    CHECK_THROWS_AS(pressure_bulk(ThermoPoint(1, 0.5, 0.01), tiny), TruncationError);
}

TEST_CASE("fugacities beyond the unit cut inside the field-shifted domain") {
    const ThermoPoint tp(1, -1.5, 1);
    const cplx p = pressure_bulk(tp);
    CHECK(std::isfinite(p.real()));
    CHECK(std::abs(p.imag()) < 1e-14);
    CHECK_REL(pressure_series_smallz(ThermoPoint(1, -0.9, 1), 400), pressure_bulk(ThermoPoint(1, -0.9, 1)), 1e-9);
}
