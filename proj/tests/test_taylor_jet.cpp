#include <doctest.h>

#include "magthermo/errors.hpp"
#include "magthermo/taylor_jet.hpp"
#include "test_support.hpp"

using namespace magthermo;

TEST_CASE("jet of exp(x) at x = 0.3 has coefficients e^0.3 / k!") {
    const auto j = exp(TaylorJet::variable(0.3, 8));
    double fact = 1.0;
    for (std::size_t k = 0; k <= 8; ++k) {
        if (k > 0) fact *= static_cast<double>(k);
        CHECK_REL(j[k], std::exp(0.3) / fact, 1e-14);
        CHECK_REL(j.derivative(k), std::exp(0.3), 1e-13);
    }
}

TEST_CASE("log inverts exp") {
    const auto x = TaylorJet::variable(0.7, 10) * cplx(0.5, 0.2) + cplx(1.0, -0.4);
    const auto y = log(exp(x));
    for (std::size_t k = 0; k <= 10; ++k) CHECK_ABS(y[k], x[k], 1e-13);
}

TEST_CASE("product follows the Leibniz rule") {
    const auto w = TaylorJet::variable(2.0, 6);
    const auto sq = w * w; // ω² around 2: 4 + 4t + t²
    CHECK_ABS(sq[0], 4.0, 0.0);
    CHECK_ABS(sq[1], 4.0, 0.0);
    CHECK_ABS(sq[2], 1.0, 0.0);
    CHECK_ABS(sq[3], 0.0, 0.0);
}

TEST_CASE("mixed orders truncate to the shorter jet") {
    const auto a = TaylorJet::variable(1.0, 6);
    const auto b = TaylorJet::variable(1.0, 3);
    CHECK((a * b).order() == 3);
    CHECK((a + b).order() == 3);
}

TEST_CASE("orders above the cap are rejected") {
    CHECK_THROWS_AS(TaylorJet(13), OrderError);
    CHECK_NOTHROW(TaylorJet(12));
}
