#include "doctest.h"

#include "homloop/errors.hpp"
#include "homloop/system.hpp"

#include <cmath>

using namespace homloop;

TEST_CASE("built-in systems validate and expose their pieces") {
    for (const std::string& n : builtin::names()) {
        const PiecewiseSystem sys = builtin::by_name(n);
        CHECK(sys.G({0.0, 0.0}) == 0.0);
        CHECK(norm(sys.f(Side::Plus, {0.0, 0.0})) < 1e-14);
        CHECK(norm(sys.f(Side::Minus, {0.0, 0.0})) < 1e-14);
        CHECK(sys.has_analytic_homoclinic());
    }
    CHECK_THROWS_AS(builtin::by_name("nope"), Error);
}

TEST_CASE("analytic duffing homoclinic satisfies the ODE") {
    const PiecewiseSystem sys = builtin::duffing();
    for (double t = -12.0; t <= 12.0; t += 0.37) {
        const Point2 g = builtin::duffing_gamma(t);
        const Point2 gd = builtin::duffing_gamma_dot(t);
        CHECK(norm(gd - sys.f(sys.side_of(g), g)) < 1e-13);
        const double H = 0.5 * g.x2 * g.x2 - 0.5 * g.x1 * g.x1 + g.x1 * g.x1 * g.x1 / 3.0;
        CHECK(std::abs(H) < 1e-14);
    }
    CHECK(norm(builtin::duffing_gamma(0.0) - Point2{1.5, 0.0}) == 0.0);
}

TEST_CASE("rescaled duffing homoclinic is continuous and solves both pieces") {
    const PiecewiseSystem sys = builtin::duffing_rescaled();
    const auto& d = sys.definition();
    CHECK(norm(d.gamma(-1e-12) - d.gamma(1e-12)) < 1e-10);
    for (double t : {-5.0, -1.0, -0.2, 0.3, 2.0, 6.0}) {
        const Point2 g = d.gamma(t);
        const Side s = t < 0 ? Side::Minus : Side::Plus;
        CHECK(sys.side_of(g) == s);
        CHECK(norm(d.gamma_dot(t) - sys.f(s, g)) < 1e-12);
    }
}

TEST_CASE("finite-difference jacobians agree with analytic ones") {
    const PiecewiseSystem sys = builtin::duffing();
    const Point2 x{0.7, -0.3};
    const Mat2 J = sys.jac(Side::Plus, x);
    CHECK(J.a11 == doctest::Approx(0.0));
    CHECK(J.a12 == doctest::Approx(1.0));
    CHECK(J.a21 == doctest::Approx(1.0 - 1.4));
    CHECK(J.a22 == doctest::Approx(0.0));
    const VectorField f = [](const Point2& p) { return Point2{std::sin(p.x1) * p.x2, std::exp(p.x2) - p.x1 * p.x1}; };
    const Mat2 F = fd_jacobian(f, x);
    CHECK(F.a11 == doctest::Approx(std::cos(0.7) * -0.3).epsilon(1e-9));
    CHECK(F.a12 == doctest::Approx(std::sin(0.7)).epsilon(1e-9));
    CHECK(F.a21 == doctest::Approx(-1.4).epsilon(1e-9));
    CHECK(F.a22 == doctest::Approx(std::exp(-0.3)).epsilon(1e-9));
    const Point2 g = fd_gradient([](const Point2& p) { return p.x1 * p.x1 * p.x2; }, x);
    CHECK(g.x1 == doctest::Approx(2 * 0.7 * -0.3).epsilon(1e-9));
    CHECK(g.x2 == doctest::Approx(0.49).epsilon(1e-9));
}

TEST_CASE("invalid definitions are rejected") {
    SystemDefinition d;
    d.f_plus = [](const Point2& x) { return Point2{x.x2, x.x1}; };
    d.f_minus = d.f_plus;
    d.G = [](const Point2& x) { return 1.0 - x.x2; };
    CHECK_THROWS_AS(PiecewiseSystem{d}, Error);
    d.G = [](const Point2& x) { return -x.x2; };
    d.jac_plus = [](const Point2&) { return Mat2::identity(); };
    CHECK_THROWS_AS(PiecewiseSystem{d}, Error);
    d.jac_plus = nullptr;
    d.perturbation.g = [](double, const Point2&, double) { return Point2{1.0, 0.0}; };
    d.epsilon = 0.1;
    CHECK_THROWS_AS(PiecewiseSystem{d}, Error);
    CHECK_FALSE(validate(d).ok());
}

TEST_CASE("perturbations and epsilon") {
    const PiecewiseSystem sys = builtin::duffing(perturbations::x_cos(2.0), 0.1);
    CHECK_FALSE(sys.autonomous());
    REQUIRE(sys.period().has_value());
    CHECK(*sys.period() == doctest::Approx(kPi));
    const Point2 x{0.5, 0.2};
    CHECK(sys.field(Side::Plus, 0.0, x).x2 == doctest::Approx(0.5 - 0.25 + 0.05));
    CHECK(sys.with_epsilon(0.0).autonomous());
    const PiecewiseSystem damp = sys.with_perturbation(perturbations::damping(2.0), 0.5);
    CHECK(damp.autonomous());
    CHECK(damp.field(Side::Minus, 3.0, x).x2 == doctest::Approx(0.5 - 0.25 - 0.2));
    CHECK(damp.field_jac(Side::Minus, 0.0, x).a22 == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("reversed system runs orbits backwards") {
    const PiecewiseSystem sys = builtin::duffing_rescaled(perturbations::x_cos(), 0.2);
    const PiecewiseSystem rev = sys.reversed();
    const Point2 up{0.4, 0.3};   // G < 0: Ω⁻ of sys
    CHECK(sys.side_of(up) == Side::Minus);
    CHECK(rev.side_of(up) == Side::Plus);
    const double t = 0.7;
    CHECK(norm(rev.field(Side::Plus, -t, up) + sys.field(Side::Minus, t, up)) < 1e-15);
    const auto& rd = rev.definition();
    CHECK(norm(rd.gamma(1.3) - sys.definition().gamma(-1.3)) == 0.0);
    CHECK(norm(rev.reversed().field(Side::Minus, t, up) - sys.field(Side::Minus, t, up)) < 1e-15);
}

TEST_CASE("rotated system") {
    const PiecewiseSystem sys = builtin::duffing();
    const PiecewiseSystem r = rotated_system(sys, 0.1, -1);
    const Point2 x{0.6, -0.2};
    const Point2 f = sys.f(Side::Plus, x);
    CHECK(norm(r.f(Side::Plus, x) - (f - 0.1 * rot90(f))) < 1e-15);
    CHECK(r.epsilon() == 0.0);
}
