#include "doctest.h"

#include "homloop/errors.hpp"
#include "homloop/flow.hpp"
#include "homloop/system.hpp"

#include <cmath>
#include <random>

using namespace homloop;

namespace {

double duffing_energy(const Point2& x) { return 0.5 * x.x2 * x.x2 - 0.5 * x.x1 * x.x1 + x.x1 * x.x1 * x.x1 / 3.0; }

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
Mat2 expm(const Mat2& A) {
    int k = 0;
    double n = A.max_abs();
    while (n > 0.1) {
        n /= 2.0;
        ++k;
    }
    const Mat2 B = std::ldexp(1.0, -k) * A;
    Mat2 term = Mat2::identity();
    Mat2 sum = Mat2::identity();
    for (int i = 1; i < 25; ++i) {
        term = (1.0 / i) * (term * B);
        sum = sum + term;
    }
    for (int i = 0; i < k; ++i) sum = sum * sum;
    return sum;
}

PiecewiseSystem linear_system(const Mat2& A) {
    SystemDefinition d;
    d.name = "linear";
    d.f_plus = [A](const Point2& x) { return A * x; };
    d.f_minus = d.f_plus;
    d.jac_plus = [A](const Point2&) { return A; };
    d.jac_minus = d.jac_plus;
    d.G = [](const Point2& x) { return -x.x2; };
    return PiecewiseSystem(d);
}

}  // namespace

TEST_CASE("duffing orbit from gamma(0) tracks the analytic homoclinic") {
    const PiecewiseSystem sys = builtin::duffing();
    StopSet stops;
    // The loop is unstable in both directions, so rounding errors grow like
    // e^{|t|}: tracking to 1e-8 holds up to t ≈ 13, after which the orbit
    // still reaches the 1e-6 ball around the saddle.
    stops.t_end = 40.0;
    stops.balls.push_back({{0.0, 0.0}, 1e-6, true});
    const Trajectory tr = integrate(sys, 0.0, {1.5, 0.0}, Direction::Fwd, stops);
    CHECK(tr.termination == Termination::Converged);
    CHECK(std::abs(norm(tr.end) - 1e-6) < 1e-12);
    double worst = 0.0;
    for (const auto& [t, x] : tr.sample(500))
        if (t <= 12.0) worst = std::max(worst, norm(x - builtin::duffing_gamma(t)));
    CHECK(worst < 1e-8);
    REQUIRE(tr.crossings.size() == 1);
    CHECK(tr.crossings[0].initial);
    CHECK(tr.start_side == Side::Plus);
}

TEST_CASE("duffing orbit backwards from gamma(0) stays in the minus side") {
    const PiecewiseSystem sys = builtin::duffing();
    StopSet stops;
    stops.t_end = -12.0;
    const Trajectory tr = integrate(sys, 0.0, {1.5, 0.0}, Direction::Bwd, stops);
    CHECK(tr.start_side == Side::Minus);
    CHECK(tr.interior_crossings().empty());
    CHECK(norm(tr.end - builtin::duffing_gamma(-12.0)) < 1e-8);
}

TEST_CASE("fields pushing into the switching curve trigger sliding detection") {
    // Both fields vanish at the origin; for x1 > 0 they push towards Ω⁰
    // from either side, so an orbit reaching Ω⁰ there would slide.
    SystemDefinition s;
    s.name = "sliding-saddle";
    s.f_plus = [](const Point2& x) { return Point2{0.0, x.x1}; };   // on {y<0}: pushes up for x>0
    s.f_minus = [](const Point2& x) { return Point2{0.0, -x.x1}; }; // on {y>0}: pushes down for x>0
    s.G = [](const Point2& x) { return -x.x2; };
    const PiecewiseSystem sys{s};
    StopSet stops;
    stops.t_end = 5.0;
    CHECK_THROWS_WITH_AS(integrate(sys, 0.0, {1.0, 0.5}, Direction::Fwd, stops), doctest::Contains("SlidingDetected"),
                         Error);
    stops.throw_on_sliding = false;
    const Trajectory tr = integrate(sys, 0.0, {1.0, 0.5}, Direction::Fwd, stops);
    CHECK(tr.termination == Termination::SlidingDetected);
    CHECK(std::abs(tr.end.x2) < 1e-12);
    CHECK(std::abs(tr.t_end - 0.5) < 1e-10);
}

TEST_CASE("forward then backward integration returns to the start") {
    const PiecewiseSystem sys = builtin::duffing_rescaled();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.2, 1.4);
    for (int i = 0; i < 10; ++i) {
        const Point2 P{u(rng), 0.3 * (u(rng) - 0.8)};
        StopSet fwd;
        fwd.t_end = 7.5;
        const Trajectory a = integrate(sys, 0.0, P, Direction::Fwd, fwd);
        StopSet bwd;
        bwd.t_end = 0.0;
        const Trajectory b = integrate(sys, a.t_end, a.end, Direction::Bwd, bwd);
        CHECK(norm(b.end - P) < 1e-9 * (1.0 + norm(P)));
    }
}

TEST_CASE("periodic orbits inside the duffing loop conserve energy across crossings") {
    const PiecewiseSystem sys = builtin::duffing();
    const Point2 P{1.3, 0.0};
    StopSet stops;
    stops.t_end = 30.0;
    const Trajectory tr = integrate(sys, 0.0, P, Direction::Fwd, stops);
    CHECK(tr.interior_crossings().size() >= 4);
    const double H0 = duffing_energy(P);
    for (const auto& [t, x] : tr.sample(400)) CHECK(std::abs(duffing_energy(x) - H0) < 1e-10);
    // Crossing times are increasing and every crossing is transversal and on Ω⁰.
    double prev = -1.0;
    for (const CrossingEvent& c : tr.crossings) {
        CHECK(c.t > prev);
        prev = c.t;
        CHECK(std::abs(c.point.x2) < 1e-12);
        CHECK(std::abs(c.transversality) > 1e-9);
    }
    // No undetected sign change inside any step.
    for (const TrajectoryStep& s : tr.steps) {
        for (int k = 1; k < 32; ++k) {
            const auto y = s.dense.at_theta(k / 32.0);
            const double G = -y[1];
            CHECK(side_sign(s.side) * G > -1e-12);
        }
    }
    // flow_map agrees and conserves energy.
    const Point2 Q = flow_map(sys, 0.0, 3.0, P);
    CHECK(std::abs(duffing_energy(Q) - H0) < 1e-10);
    CHECK(norm(flow_map(sys, 3.0, 0.0, Q) - P) < 1e-10);
    CHECK(flow_map(sys, 2.0, 2.0, P) == P);
}

TEST_CASE("flow map of an autonomous system depends only on the elapsed time") {
    const PiecewiseSystem sys = builtin::duffing_rescaled();
    const Point2 P{0.9, 0.1};
    CHECK(norm(flow_map(sys, 0.0, 2.5, P) - flow_map(sys, 10.0, 12.5, P)) < 1e-11);
}

TEST_CASE("terminal sections and non-terminal hits") {
    const PiecewiseSystem sys = builtin::duffing();
    StopSet stops;
    stops.t_end = 50.0;
    SectionStop probe;
    probe.id = 7;
    probe.fn = [](const Point2& x) { return x.x1 - 1.0; };
    probe.terminal = false;
    stops.sections.push_back(probe);
    SwitchStop sw;
    sw.id = 3;
    sw.count = 2;
    stops.switch_stop = sw;
    const Trajectory tr = integrate(sys, 0.0, {1.4, 0.0}, Direction::Fwd, stops);
    CHECK(tr.termination == Termination::HitTarget);
    CHECK(tr.target_id == 3);
    CHECK(tr.interior_crossings().size() == 2);
    REQUIRE(tr.hits.size() == 2);
    for (const SectionHit& h : tr.hits) CHECK(std::abs(h.point.x1 - 1.0) < 1e-12);
    // A full revolution returns to (1.4, 0) by energy conservation.
    CHECK(norm(tr.end - Point2{1.4, 0.0}) < 1e-10);
}

TEST_CASE("variational flow: identity, matrix exponential and Liouville") {
    const Mat2 A{0.3, 1.2, -0.7, -0.9};
    const PiecewiseSystem lin = linear_system(A);
    StopSet stops;
    stops.t_end = 3.0;
    const Trajectory tr = integrate(lin, 0.0, {0.4, 0.2}, Direction::Fwd, stops);
    const FundamentalMatrix I = variational_flow(lin, tr, 1.0, 1.0);
    CHECK((I.X - Mat2::identity()).max_abs() == 0.0);
    const FundamentalMatrix F = variational_flow(lin, tr, 2.5, 0.5);
    CHECK((F.X - expm(2.0 * A)).max_abs() < 1e-9);
    CHECK_THROWS_AS(variational_flow(lin, tr, 3.5, 0.0), Error);

    const PiecewiseSystem duf = builtin::duffing();
    StopSet s2;
    s2.t_end = 12.0;
    const Trajectory g = integrate(duf, 0.0, {1.5, 0.0}, Direction::Fwd, s2);
    const FundamentalMatrix V = variational_flow(duf, g, 10.0, 0.0);
    CHECK(std::abs(V.X.det() - 1.0) < 1e-7);
    CHECK(std::abs(V.trace_integral) < 1e-12);

    // Discontinuous field with a crossing: Liouville holds for the continuous rule.
    const PiecewiseSystem resc = builtin::duffing_rescaled();
    StopSet s3;
    s3.t_end = 9.0;
    const Trajectory p = integrate(resc, 0.0, {1.2, 0.0}, Direction::Fwd, s3);
    REQUIRE(p.interior_crossings().size() >= 1);
    const FundamentalMatrix W = variational_flow(resc, p, 8.5, 0.2);
    CHECK(std::abs(W.X.det() / std::exp(W.trace_integral) - 1.0) < 1e-7);
    // Composition X(t,r)X(r,s) = X(t,s).
    const FundamentalMatrix W1 = variational_flow(resc, p, 4.0, 0.2);
    const FundamentalMatrix W2 = variational_flow(resc, p, 8.5, 4.0);
    CHECK(((W2.X * W1.X) - W.X).max_abs() < 1e-8 * W.X.max_abs());
}

TEST_CASE("saltation rule gives the derivative of the true flow map") {
    const PiecewiseSystem resc = builtin::duffing_rescaled();
    const Point2 P{1.2, -0.01};
    StopSet s;
    s.t_end = 2.0;
    const Trajectory p = integrate(resc, 0.0, P, Direction::Fwd, s);
    const FundamentalMatrix W = variational_flow(resc, p, 2.0, 0.0, CrossingRule::Saltation);
    const double h = 1e-6;
    for (const Point2& e : {Point2{1.0, 0.0}, Point2{0.0, 1.0}}) {
        const Point2 d = (flow_map(resc, 0.0, 2.0, P + h * e) - flow_map(resc, 0.0, 2.0, P - h * e)) / (2.0 * h);
        CHECK(norm(d - W.X * e) < 1e-5 * (1.0 + norm(d)));
    }
}

TEST_CASE("halving tolerances moves the endpoint by less than ten local tolerances") {
    const PiecewiseSystem sys = builtin::duffing_rescaled(perturbations::x_cos(), 0.01);
    Tolerances a;
    a.rtol = 1e-10;
    a.atol = 1e-12;
    Tolerances b = a;
    b.rtol /= 2.0;
    b.atol /= 2.0;
    const Point2 P{1.1, 0.05};
    const Point2 ya = flow_map(sys, 0.0, 6.0, P, a);
    const Point2 yb = flow_map(sys, 0.0, 6.0, P, b);
    CHECK(norm(ya - yb) < 10.0 * a.rtol * (1.0 + norm(ya)) * 10.0);
}
