#include "doctest.h"

#include "homloop/dichotomy.hpp"
#include "homloop/errors.hpp"

#include <cmath>

using namespace homloop;

TEST_CASE("principal solutions of the frozen autonomous system") {
    const PiecewiseSystem sys = builtin::duffing();
    const PrincipalSolutions p(sys, Side::Plus);
    CHECK(norm(p.w_u(0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(norm(p.w_s(0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    for (double t : {-150.0, -20.0, -1.0, 0.5, 7.0, 180.0}) {
        CHECK(std::abs(p.log_norm_u(t) - t) < 1e-10 * (1.0 + std::abs(t)));
        CHECK(std::abs(p.log_norm_s(t) + t) < 1e-10 * (1.0 + std::abs(t)));
        CHECK(norm(p.v_u(t) - p.eigen_u()) < 1e-12);
        CHECK(norm(p.v_s(t) - p.eigen_s()) < 1e-12);
        CHECK(p.z_u(t, 0.0) == doctest::Approx(std::exp(t)).epsilon(1e-9));
    }
    CHECK_THROWS_AS((void)p.v_u(250.0), Error);
}

TEST_CASE("rescaled side has doubled rates") {
    const PrincipalSolutions p(builtin::duffing_rescaled(), Side::Minus);
    CHECK(p.lambda_u() == doctest::Approx(2.0));
    CHECK(std::abs(p.log_norm_u(3.0) - 6.0) < 1e-10);
    CHECK(std::abs(p.log_norm_s(3.0) + 6.0) < 1e-10);
}

TEST_CASE("dichotomy data at epsilon = 0") {
    const DichotomyData d = dichotomy_data(builtin::duffing());
    CHECK(d.k1_est == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(d.k_eps_est < 1e-10);
    // Orthogonal eigenvectors: ‖P‖ = ‖I − P‖ = 1.
    CHECK(d.k2_est == doctest::Approx(2.0).epsilon(1e-12));
    const CocycleReport c = cocycle_check(d, 1000, 3);
    CHECK(c.max_residual < 1e-9);
    CHECK(c.max_identity == 0.0);
    const ProjectionReport r = projection_bound_check(d, Side::Plus, 100, 5);
    CHECK(r.pass());
    CHECK(r.max_ratio_stable <= 1.0 + 1e-6);
    CHECK(r.max_ratio_unstable <= 1.0 + 1e-6);
    // ξ along v_s: the unstable part vanishes.
    const Mat2 P = d.plus->projection(1.0);
    CHECK(norm((Mat2::identity() - P) * d.plus->v_s(1.0)) < 1e-15);
}

TEST_CASE("dichotomy of the periodically forced linearization") {
    const PiecewiseSystem sys = builtin::duffing(perturbations::x_cos(), 1e-3);
    const DichotomyData d = dichotomy_data(sys);
    CHECK(d.gx_sup == doctest::Approx(1.0).epsilon(1e-6));
    // Roughness: exponents stay within kε = ε‖g_x‖ of the frozen ones, with k₁ ≈ 1.
    CHECK(d.band_excess(1.01, d.epsilon * d.gx_sup) <= 0.0);
    CHECK(d.k1_est < 1.01);
    CHECK(d.C_est < 2.0);
    CHECK(d.C_est > 0.0);
    // Sign alignment with the frozen eigenvectors.
    for (double t : {-30.0, 0.0, 17.0}) {
        CHECK(dot(d.plus->v_u(t), d.plus->eigen_u()) > 0.99);
        CHECK(dot(d.minus->v_s(t), d.minus->eigen_s()) > 0.99);
    }
    const CocycleReport c = cocycle_check(d, 1000, 11);
    CHECK(c.max_residual < 1e-9);
    for (Side side : {Side::Plus, Side::Minus}) {
        const ProjectionReport r = projection_bound_check(d, side, 100, 17);
        CHECK(r.pass());
        CHECK(r.max_ratio_stable < 1.01);
    }
    // The principal unstable solution solves the linear equation.
    const double h = 1e-5;
    for (double t : {-3.0, 2.0}) {
        const Point2 dw = (d.plus->w_u(t + h) - d.plus->w_u(t - h)) / (2.0 * h);
        CHECK(norm(dw - d.plus->A(t) * d.plus->w_u(t)) < 1e-7);
    }
}

TEST_CASE("decay sandwich along anchor orbits") {
    const PiecewiseSystem sys = builtin::duffing();
    const Homoclinic h = homoclinic_orbit(sys);
    const LeafAnchors a(sys, h, 40.0);
    for (Leaf leaf : {Leaf::Stable, Leaf::Unstable}) {
        const SandwichReport r = anchor_decay_sandwich(a, leaf, 0.0);
        CHECK(r.pass());
        CHECK(r.c_k > 1.0);
    }
}

TEST_CASE("saddle passage decomposition") {
    const PiecewiseSystem sys = builtin::duffing();
    const Homoclinic h = homoclinic_orbit(sys);
    const LeafAnchors a(sys, h, 40.0);
    const PrincipalSolutions plus(sys, Side::Plus);
    const SaddlePassageDecomposition z = decompose_saddle_passage(a, plus, 0.0, 0.0, 5.0, 0.0125);
    CHECK(z.weighted_norm_h < 1e-9);
    for (const Point2& l : z.ell) CHECK(norm(l) == 0.0);

    const SaddlePassageDecomposition r = decompose_saddle_passage(a, plus, 0.0, 1e-4, 2.5, 0.0125);
    CHECK(norm(r.h.front()) < 1e-12);
    CHECK(r.D_ell == doctest::Approx(1e-4 * std::exp(2.5)).epsilon(1e-9));
    CHECK(r.M0 == doctest::Approx(2.0 * std::abs(std::log(0.0125))).epsilon(1e-12));
    CHECK(r.pass());
    for (std::size_t k = 0; k < r.x.size(); ++k) CHECK(norm(r.x[k] - r.y_s[k] - r.ell[k] - r.h[k]) < 1e-15);
    CHECK_THROWS_AS((void)decompose_saddle_passage(a, plus, 0.0, 1.0, 2.5, 0.0125), Error);
    // The orbit reaches Ω⁰ (L^in) near θ ≈ 2.8, so a longer horizon leaves the region.
    CHECK_THROWS_AS((void)decompose_saddle_passage(a, plus, 0.0, 1e-4, 4.0, 0.0125), Error);
}

TEST_CASE("varpi policy") {
    const PiecewiseSystem sys = builtin::duffing();
    const Homoclinic h = homoclinic_orbit(sys);
    const DichotomyData d = dichotomy_data(sys);
    const VarpiPolicy v = varpi_policy(sys, h, d, 1.0 / 16.0 / 20.0);
    CHECK(v.N_alpha == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(v.c_s > 2.0);
    CHECK(v.c_s < 2.2);
    CHECK(v.C > 50.0);
    CHECK(v.capped);
    CHECK(v.log_varpi == 40.0);
    CHECK(v.required > 40.0);
}
