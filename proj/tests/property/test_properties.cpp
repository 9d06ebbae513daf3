#include "doctest.h"

#include "homloop/chart.hpp"
#include "homloop/loopmap.hpp"
#include "homloop/scaling.hpp"
#include "homloop_cli/config.hpp"
#include "homloop_cli/output.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

using namespace homloop;

namespace {

struct Duffing {
    PiecewiseSystem sys = builtin::duffing();
    Homoclinic gamma = homoclinic_orbit(sys);
    LeafAnchors anchors{sys, gamma, 40.0};
};

const Duffing& duffing() {
    static const Duffing d;
    return d;
}

/// Log-uniform sample in [lo, hi].
double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

}  // namespace

TEST_CASE("directed distance is antisymmetric and inverts point_at_distance") {
    const DirectedChart chart(duffing().sys, duffing().gamma);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> s(0.05, 2.5);
    for (int k = 0; k < 200; ++k) {
        const Point2 q = chart.point(s(rng)), p = chart.point(s(rng));
        CHECK(chart.directed_distance(q, p) == doctest::Approx(-chart.directed_distance(p, q)).epsilon(1e-12));
        const double d = log_uniform(rng, 1e-6, 1e-2);
        CHECK(chart.directed_distance(chart.point_at_distance(p, d), p) == doctest::Approx(d).epsilon(1e-10));
    }
}

TEST_CASE("loop laws hold at random displacements") {
    const LoopMap map(duffing().anchors, 0.0125);
    std::mt19937_64 rng(12);
    for (int k = 0; k < 25; ++k) {
        const double d = log_uniform(rng, 1e-4, 1e-2);
        const double d2 = d * std::uniform_real_distribution<double>(0.2, 0.9)(rng);
        const LoopResult a = map.forward(d, 0.0);
        const LoopResult b = map.forward(d2, 0.0);
        // Monotone bracketing.
        CHECK(b.T_one > a.T_one);
        // Displacement bands with μ = 1/16.
        CHECK(a.D_one >= std::pow(d, 1.0 + 1.0 / 16.0));
        CHECK(a.D_one <= std::pow(d, 1.0 - 1.0 / 16.0));
        CHECK(a.D_half >= std::pow(d, 0.5 + 1.0 / 16.0));
        CHECK(a.D_half <= std::pow(d, 0.5 - 1.0 / 16.0));
        // Reversible example: backward mirrors forward.
        CHECK(std::abs(map.backward(d, 0.0).T_one - a.T_one) < 1e-6);
        if (a.segments_available) {
            double sum = 0.0;
            for (double t : a.segment_times) sum += t;
            CHECK(std::abs(sum - a.T_one) <= 1e-8 * a.T_one);
        }
    }
}

TEST_CASE("autonomous loops are independent of the start time") {
    const LoopMap map(duffing().anchors, 0.0125);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> tau(-20.0, 20.0);
    const LoopResult ref = map.forward(1e-3, 0.0);
    for (int k = 0; k < 10; ++k) {
        const LoopResult r = map.forward(1e-3, tau(rng));
        CHECK(std::abs(r.T_one - ref.T_one) < 1e-9);
        CHECK(std::abs(r.D_one - ref.D_one) < 1e-9);
    }
}

TEST_CASE("least squares recovers random lines and pass flags are monotone in mu") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        const double m = u(rng), c = u(rng);
        std::vector<double> x, y;
        for (int i = 0; i < 7; ++i) {
            x.push_back(u(rng));
            y.push_back(c + m * x.back());
        }
        const SlopeFit f = least_squares(x, y);
        CHECK(f.slope == doctest::Approx(m).epsilon(1e-9));
        CHECK(f.intercept == doctest::Approx(c).epsilon(1e-9));
    }
    const LoopMap map(duffing().anchors, 0.0125);
    const auto batch = loop_batch(map, {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, {0.0}, true, false);
    const RateConstants th = rate_constants(duffing().gamma.spectrum());
    for (int k = 0; k < 20; ++k) {
        const double mu = log_uniform(rng, 1e-4, 0.1);
        const double wider = mu * std::uniform_real_distribution<double>(1.0, 5.0)(rng);
        const ScalingReport a = fit_exponents(batch, th, mu), b = fit_exponents(batch, th, wider);
        for (std::size_t i = 0; i < a.fits.size(); ++i)
            if (a.fits[i].pass) CHECK(b.fits[i].pass);
    }
}

TEST_CASE("17-digit output round-trips every double") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-300, 300);
    for (int k = 0; k < 2000; ++k) {
        const double x = std::ldexp(mant(rng), ex(rng));
        CHECK(std::strtod(cli::format_double(x).c_str(), nullptr) == x);
    }
}

TEST_CASE("configuration grids round-trip through the text format") {
    std::mt19937_64 rng(16);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> d;
        std::string text = "[grid]\nd = [";
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        for (int i = 0; i < n; ++i) {
            d.push_back(log_uniform(rng, 1e-8, 1.0) * (1.0 + i * 1e-3));
            text += (i ? ", " : "") + cli::format_double(d.back());
        }
        text += "]\n";
        const cli::ExperimentConfig cfg = cli::parse_config(text);
        REQUIRE(cfg.grid.d.size() == d.size());
        for (int i = 0; i < n; ++i) CHECK(cfg.grid.d[i] == d[i]);
    }
}
