#include <doctest.h>

#include <stdexcept>
#include <cmath>

#include "kwr/quadrature.hpp"

using namespace kwr;
using doctest::Approx;

TEST_CASE("smooth integrands") {
    CHECK(integrate([](double x) { return x * x; }, 0, 1).value == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::sin(x); }, 0, M_PI).value == Approx(2.0).epsilon(1e-10));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0, 5).value == Approx(1 - std::exp(-5.0)).epsilon(1e-10));
}

TEST_CASE("step functions integrate exactly with breakpoints") {
    auto step = [](double x) { return x >= 0.3 ? 1.0 : 0.0; };
    auto r = integrate(step, 0, 1, {0.3});
    CHECK(std::fabs(r.value - 0.7) <= 1e-12);
    auto stairs = [](double x) { return std::floor(4 * x); };
    auto s = integrate(stairs, 0, 1, {0.25, 0.5, 0.75});
    CHECK(std::fabs(s.value - 1.5) <= 1e-12);
}

TEST_CASE("kinks and empty ranges") {
    CHECK(integrate([](double x) { return std::fabs(x - 0.4); }, 0, 1, {0.4}).value == Approx(0.08 + 0.18).epsilon(1e-12));
    CHECK(integrate([](double x) { return x; }, 1, 1).value == 0.0);
    CHECK(integrate([](double x) { return x; }, 2, 1).value == 0.0);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, 0, INFINITY), std::invalid_argument);
}

TEST_CASE("failure reports the achieved tolerance") {
    QuadratureOptions o;
    o.abs_tol = 1e-14;
    o.max_depth = 3;
    o.initial_panels = 1;
    try {
        integrate([](double x) { return std::sin(50 * x); }, 0, 1, {}, o);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(e.achieved_tolerance() > o.abs_tol);
    }
    CHECK_THROWS_AS(integrate([](double x) { return 1 / x; }, -1, 1), QuadratureError);
}
