#include "doctest.h"

#include "homloop/errors.hpp"
#include "homloop/loopmap.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <memory>

using namespace homloop;

namespace {

/// Energy of the unperturbed Duffing oscillator.
double energy(double x, double y) { return 0.5 * y * y - 0.5 * x * x + x * x * x / 3.0; }

/// Smaller positive turning point of the level set {energy = h} on y = 0, h < 0.
double inner_turning_point(double h) {
    auto f = [h](double x) { return -0.5 * x * x + x * x * x / 3.0 - h; };
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::bisect(f, 1e-12, 1.0, [](double a, double b) { return std::abs(a - b) < 1e-15; }, it);
    return 0.5 * (r.first + r.second);
}

/// Period of the closed level curve through (x0, 0), 0 < x0 < 1.5. With the
/// turning points lo < x0 and the third root c = 3/2 − x0 − lo of the cubic,
/// x = lo + (x0 − lo)(1 − cos φ)/2 removes the square-root endpoint
/// singularities: T = 2∫₀^π dφ / sqrt((2/3)(x(φ) − c)).
double period_through(double x0) {
    const double lo = inner_turning_point(energy(x0, 0.0));
    const double c = 1.5 - x0 - lo;
    auto integrand = [&](double phi) {
        const double x = lo + 0.5 * (x0 - lo) * (1.0 - std::cos(phi));
        return 1.0 / std::sqrt(2.0 / 3.0 * (x - c));
    };
    return 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, M_PI, 15, 1e-15);
}

struct Session {
    PiecewiseSystem sys;
    Homoclinic gamma;
    LeafAnchors anchors;
    explicit Session(PiecewiseSystem s) : sys(std::move(s)), gamma(homoclinic_orbit(sys)), anchors(sys, gamma, 40.0) {}
};

}  // namespace

TEST_CASE("loop start points on the section") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    const Point2 q = map.Q_s(0.01, 0.0);
    CHECK(q.x1 == doctest::Approx(1.49).epsilon(1e-9));
    CHECK(std::abs(q.x2) < 1e-12);
    CHECK(map.chart().directed_distance(q, s.anchors.P_s(0.0)) == doctest::Approx(0.01).epsilon(1e-10));
    CHECK_THROWS_AS((void)map.Q_s(0.02, 0.0), Error);
    CHECK_THROWS_AS((void)map.Q_u(0.0, 0.0), Error);
    CHECK_THROWS_AS((void)map.forward(-1e-3, 0.0), Error);
}

TEST_CASE("unperturbed forward loop matches the periodic orbit") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    for (double d : {1e-2, 1e-3, 1e-4}) {
        const LoopResult r = map.forward(d, 0.0);
        const double x0 = 1.5 - d;
        CHECK(r.T_one == doctest::Approx(period_through(x0)).epsilon(1e-8));
        CHECK(r.D_half == doctest::Approx(inner_turning_point(energy(x0, 0.0))).epsilon(1e-8));
        CHECK(r.D_one == doctest::Approx(d).epsilon(1e-7));
        CHECK(r.T_half == doctest::Approx(0.5 * r.T_one).epsilon(1e-8));
        CHECK(s.anchors.on_L0(r.P_one));
        for (double v : r.transversality) CHECK(std::abs(v) > 0.0);
        // Displacement bands with μ = 1/16.
        CHECK(r.D_one >= std::pow(d, 1.0 + 1.0 / 16.0));
        CHECK(r.D_one <= std::pow(d, 1.0 - 1.0 / 16.0));
        CHECK(r.D_half >= std::pow(d, 0.5 + 1.0 / 16.0));
        CHECK(r.D_half <= std::pow(d, 0.5 - 1.0 / 16.0));
        CHECK(r.sup_dev_first_half <= std::pow(d, 0.5 - 1.0 / 16.0));
        CHECK(r.sup_dev_second_half <= std::pow(d, 0.5 - 1.0 / 16.0));
    }
}

TEST_CASE("logarithmic time increment and monotone bracketing") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    const double t1 = map.forward(1e-3, 0.0).T_one;
    const double t2 = map.forward(5e-4, 0.0).T_one;
    CHECK(t2 > t1);
    CHECK(std::abs(t2 - t1 - std::log(2.0)) < std::log(2.0) / 16.0);
}

TEST_CASE("segment decomposition of a loop") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    const LoopResult r = map.forward(1e-4, 0.0);
    REQUIRE(r.segments_available);
    double sum = 0.0;
    for (double t : r.segment_times) sum += t;
    CHECK(std::abs(sum - r.T_one) <= 1e-8 * r.T_one);
    CHECK(r.segment_disps[1] == doctest::Approx(r.D_half));
    CHECK(r.segment_disps[3] == doctest::Approx(r.D_one));
    CHECK(r.segment_disps[0] > 0.0);
    // Large d misses the saddle transversal.
    CHECK_FALSE(map.forward(1e-2, 0.0).segments_available);
    CHECK(std::isnan(map.forward(1e-2, 0.0).segment_times[0]));
}

TEST_CASE("backward loop mirrors the forward loop on the reversible example") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    for (double d : {3e-3, 3e-4}) {
        const LoopResult f = map.forward(d, 0.0);
        const LoopResult b = map.backward(d, 0.0);
        CHECK(b.direction == Direction::Bwd);
        CHECK(std::abs(b.T_one - f.T_one) < 1e-6);
        CHECK(std::abs(b.T_half - f.T_half) < 1e-6);
        CHECK(b.D_one >= std::pow(d, 1.0 + 1.0 / 16.0));
        CHECK(b.D_one <= std::pow(d, 1.0 - 1.0 / 16.0));
        CHECK(b.D_half == doctest::Approx(f.D_half).epsilon(1e-6));
    }
}

TEST_CASE("round trip and autonomy") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    CHECK(map.roundtrip(1e-3, 0.0) < 1e-6 * 1e-3);
    const LoopResult a = map.forward(1e-3, 0.0);
    const LoopResult b = map.forward(1e-3, 5.0);
    CHECK(std::abs(a.T_one - b.T_one) < 1e-9);
    CHECK(std::abs(a.D_one - b.D_one) < 1e-9);
    CHECK(roundtrip_check(map, 1e-2, 0.0) < 1e-6 * 1e-2);
}

TEST_CASE("unperturbed barrier curves against energy oracles") {
    const Session s(builtin::duffing());
    const BarrierSet b = build_barriers(s.sys, 0.05, 1.0 / 32.0, s.anchors);
    CHECK(b.z_fwd_in.P.x1 == doctest::Approx(1.45).epsilon(1e-9));
    CHECK(b.z_fwd_out.P.x1 == doctest::Approx(1.55).epsilon(1e-9));
    // Inner curve: periodic orbit through (1.45, 0), meets L^in at its turning point.
    const double q_in = inner_turning_point(energy(1.45, 0.0));
    CHECK(norm(b.z_fwd_in.Q) == doctest::Approx(q_in).epsilon(1e-7));
    CHECK(norm(*b.z_fwd_in.R - b.z_fwd_in.P) < 1e-7);
    // Outer curve: level set through (1.55, 0) crosses the y-axis at ±sqrt(2h).
    const double y_out = std::sqrt(2.0 * energy(1.55, 0.0));
    CHECK(norm(*b.z_fwd_out.O) == doctest::Approx(y_out).epsilon(1e-7));
    CHECK(norm(b.z_fwd_out.Q) == doctest::Approx(y_out).epsilon(1e-7));
    // Both exceed β^{1/2−μ}: the band reports the violation instead of hiding it.
    bool q_in_band = true;
    for (const auto& c : b.bands)
        if (c.name == "Q_fwd_in") q_in_band = c.ok();
    CHECK_FALSE(q_in_band);
    CHECK_FALSE(b.bands_ok());
    CHECK_THROWS_AS((void)build_barriers(s.sys, 0.05, 1.0 / 32.0, s.anchors, 0.0, BarrierOptions{.strict = true}),
                    Error);

    CHECK(b.flow_ok());
    CHECK(b.simple);
    CHECK(b.disjoint);
    CHECK(b.geometry_ok());
    CHECK(b.max_distance_fwd < b.containment_radius);

    const Point2 g0 = s.gamma.gamma0();
    CHECK(b.in_K_fwd(g0));
    CHECK(b.in_K_bwd(g0));
    CHECK(b.in_K_fwd_A({1.48, 0.0}));
    CHECK_FALSE(b.in_K_fwd_B({1.48, 0.0}));
    CHECK(b.in_K_fwd_B({1.52, 0.0}));
    CHECK_FALSE(b.in_K_fwd({1.0, 0.0}));
    CHECK_FALSE(b.in_K_fwd({2.0, 0.0}));
    CHECK_THROWS_AS((void)build_barriers(s.sys, 10.0, 1.0 / 32.0, s.anchors), Error);
}

TEST_CASE("perturbed barriers: flow crosses each curve the right way") {
    const Session s(builtin::duffing(perturbations::x_cos(), 1e-4));
    const BarrierSet b = build_barriers(s.sys, 0.05, 1.0 / 32.0, s.anchors);
    CHECK(b.kappa > 0.0);
    REQUIRE(b.flow.size() == 4);
    for (const auto& f : b.flow) {
        CHECK(f.samples == 32);
        CHECK(f.violations == 0);
        CHECK(f.worst > 0.0);
    }
    CHECK(b.simple);
    CHECK(b.disjoint);
}

TEST_CASE("loops stay inside the forward trapping region") {
    const Session s(builtin::duffing());
    auto b = std::make_shared<const BarrierSet>(build_barriers(s.sys, 0.05, 1.0 / 32.0, s.anchors));
    const LoopMap map(s.anchors, 0.0125, b);
    for (double d : {1e-2, 1e-3, 1e-4}) CHECK(map.forward(d, 0.0).contained);
}
