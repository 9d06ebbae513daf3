#include "doctest.h"

#include "homloop/errors.hpp"
#include "homloop/scaling.hpp"

#include <cmath>

using namespace homloop;

namespace {

const std::vector<double> kGrid{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};

struct Session {
    PiecewiseSystem sys;
    Homoclinic gamma;
    LeafAnchors anchors;
    RateConstants rates;
    explicit Session(PiecewiseSystem s)
        : sys(std::move(s)), gamma(homoclinic_orbit(sys)), anchors(sys, gamma, 40.0),
          rates(rate_constants(gamma.spectrum())) {}
};

}  // namespace

TEST_CASE("least squares") {
    const SlopeFit f = least_squares({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.std_error < 1e-12);
    CHECK(f.n == 4);
    const SlopeFit g = least_squares({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
    CHECK(g.slope == doctest::Approx(0.0));
    CHECK(g.half_width == doctest::Approx(2.0 * g.std_error));
    CHECK(g.std_error > 0.0);
    CHECK_THROWS_AS((void)least_squares({1.0, 1.0}, {0.0, 1.0}), Error);
}

TEST_CASE("exponent fits on the smooth example") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    const auto batch = loop_batch(map, kGrid, {0.0}, true, true);
    REQUIRE(batch.size() == 10);
    const ScalingReport r = fit_exponents(batch, s.rates, 1.0 / 16.0);
    CHECK(r.pass());
    CHECK(r.fits.size() == 8);
    CHECK(r.find("sigma_fwd")->fit.slope == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(r.find("Sigma_fwd")->fit.slope - 1.0) < 1.0 / 16.0);
    CHECK(std::abs(r.find("sigma_fwd_plus")->fit.slope - 0.5) < 1.0 / 16.0);
    CHECK(std::abs(r.find("Sigma_fwd_plus")->fit.slope - 0.5) < 1.0 / 16.0);
    CHECK(r.find("sigma_bwd_minus") != nullptr);
    CHECK(r.find("nonsense") == nullptr);
    CHECK(r.d_grid.size() == 5);

    // Enlarging μ never turns a pass into a fail.
    const ScalingReport wide = fit_exponents(batch, s.rates, 0.2);
    for (std::size_t i = 0; i < r.fits.size(); ++i)
        if (r.fits[i].pass) CHECK(wide.fits[i].pass);

    const std::vector<LoopResult> short_batch(batch.begin(), batch.begin() + 3);
    CHECK_THROWS_AS((void)fit_exponents(short_batch, s.rates, 1.0 / 16.0), Error);

    const DeviationReport k = deviation_suite(batch, s.rates, 1.0 / 16.0);
    CHECK(k.pass());
    CHECK(k.entries.size() == 10);
    CHECK(k.worst_margin < 1.0);
}

TEST_CASE("rescaled discontinuous example has time slope 3/4") {
    const Session s(builtin::duffing_rescaled());
    CHECK(s.rates.Sigma_fwd == doctest::Approx(0.75));
    const LoopMap map(s.anchors, 0.0125);
    const ScalingReport r = fit_exponents(loop_batch(map, kGrid, {0.0}, true, true), s.rates, 1.0 / 16.0);
    CHECK(r.pass());
    CHECK(std::abs(r.find("Sigma_fwd")->fit.slope - 0.75) < 1.0 / 16.0);
    CHECK(std::abs(r.find("Sigma_bwd")->fit.slope - 0.75) < 1.0 / 16.0);
    CHECK(std::abs(r.find("Sigma_bwd_minus")->fit.slope - 0.25) < 1.0 / 16.0);
    CHECK(std::abs(r.find("sigma_fwd")->fit.slope - 1.0) < 1.0 / 16.0);
}

TEST_CASE("batches are independent of the thread count and uniform in tau") {
    const Session s(builtin::duffing(perturbations::x_cos(), 1e-4));
    const LoopMap map(s.anchors, 0.0125);
    const auto serial = loop_batch(map, kGrid, {0.0, 1.0, 2.0}, true, false, 1);
    const auto parallel = loop_batch(map, kGrid, {0.0, 1.0, 2.0}, true, false, 3);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].d == parallel[i].d);
        CHECK(serial[i].tau == parallel[i].tau);
        CHECK(serial[i].T_one == parallel[i].T_one);
        CHECK(serial[i].D_one == parallel[i].D_one);
    }
    const ScalingReport r = fit_exponents(serial, s.rates, 1.0 / 16.0);
    CHECK(r.pass());
    for (const auto& [name, spread] : r.tau_spread) CHECK(spread < 1.0 / 16.0);
    CHECK(r.tau_spread.size() == 4);
}

TEST_CASE("first-arc mismatch shrinks linearly with d") {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, 0.0125);
    const EllMismatchReport r = ell_mismatch_suite(map, {3e-4, 1e-4, 3e-5, 1e-5}, 0.0, 1.0 / 224.0);
    REQUIRE(r.entries.size() == 4);
    for (const auto& e : r.entries) {
        CHECK(e.measured);
        CHECK(e.mismatch > 0.0);
        CHECK(e.arc_deviation >= 0.0);
    }
    CHECK(r.slope > 0.9);
    CHECK(r.slope < 1.1);
}

TEST_CASE("stability probe on the neutral example") {
    const Session s(builtin::duffing());
    const StabilityProbe p = dulac_probe(s.sys, s.gamma, 4);
    CHECK(p.prediction == StabilityPrediction::Indeterminate);
    CHECK(std::abs(p.div_integral_along_gamma) < 1e-9);
    CHECK(p.div_at_origin_plus == 0.0);
    CHECK(p.loops_completed == 4);
    CHECK(std::abs(p.empirical_contraction - 1.0) < 0.05);
    CHECK(p.consistent);
    CHECK(std::string(to_string(p.prediction)) == "Indeterminate");
    CHECK_THROWS_AS((void)dulac_probe(builtin::duffing(perturbations::damping(), 1e-3), s.gamma, 2), Error);
}

TEST_CASE("stability probe on a contracting loop") {
    const double b = 0.05;
    const auto family = [b](double a) { return builtin::dulac_family(a, b); };
    const double a = find_connection_parameter(family, -0.06, -0.03);
    CHECK(a < 0.0);
    const PiecewiseSystem sys = family(a);
    const Homoclinic gamma = homoclinic_orbit(sys);
    const StabilityProbe p = dulac_probe(sys, gamma, 4);
    CHECK(p.div_at_origin_plus < 0.0);
    CHECK(p.div_at_origin_minus < 0.0);
    CHECK(p.prediction == StabilityPrediction::StableInside);
    CHECK(p.empirical_contraction > 0.0);
    CHECK(p.empirical_contraction < 1.0);
    CHECK_FALSE(p.escaped);
    CHECK(p.consistent);
    CHECK_THROWS_AS((void)find_connection_parameter(family, 0.01, 0.02), Error);
}
