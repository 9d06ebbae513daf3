#include "homloop/spectrum.hpp"

#include "homloop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homloop {

namespace {

Point2 eigenvector(const Mat2& A, double lambda) {
    // Rows of (A − λI) are orthogonal to the eigenvector; use the larger one.
    const Point2 r1{A.a11 - lambda, A.a12};
    const Point2 r2{A.a21, A.a22 - lambda};
    const Point2 r = norm(r1) >= norm(r2) ? r1 : r2;
    if (norm(r) == 0.0) return {1.0, 0.0};
    return normalized(Point2{-r.x2, r.x1});
}

}  // namespace

std::optional<EigenPair2> real_eigen(const Mat2& A) {
    const double tr = A.trace();
    const double det = A.det();
    const double disc = 0.25 * tr * tr - det;
    if (!(disc > 0.0)) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Avoid cancellation: compute the larger-magnitude root first.
    const double half = 0.5 * tr;
    const double big = half >= 0.0 ? half + sq : half - sq;
    const double small = big != 0.0 ? det / big : 0.0;
    EigenPair2 e;
    e.lambda1 = std::min(big, small);
    e.lambda2 = std::max(big, small);
    e.v1 = eigenvector(A, e.lambda1);
    e.v2 = eigenvector(A, e.lambda2);
    return e;
}

SaddleSpectrum compute_spectrum(const PiecewiseSystem& sys, const std::optional<OrientationHint>& hint, double tol) {
    const Point2 origin{0.0, 0.0};
    const Point2 n = sys.grad_G(origin);
    const double gn = norm(n);
    SaddleSpectrum sp;
    for (Side side : {Side::Plus, Side::Minus}) {
        const Mat2 J = sys.jac(side, origin);
        const auto e = real_eigen(J);
        if (!e || !(e->lambda1 < 0.0 && e->lambda2 > 0.0)) {
            std::ostringstream msg;
            msg << "f_x^" << (side == Side::Plus ? '+' : '-') << "(0) is not a saddle (trace " << J.trace()
                << ", det " << J.det() << ")";
            throw Error(ErrorCode::NotASaddle, msg.str());
        }
        for (const auto& [lam, v] : {std::pair{e->lambda1, e->v1}, std::pair{e->lambda2, e->v2}})
            sp.eigen_residual = std::max(sp.eigen_residual, norm(J * v - lam * v));
        if (side == Side::Plus) {
            sp.lambda_s_plus = e->lambda1;
            sp.lambda_u_plus = e->lambda2;
            sp.v_s_plus = e->v1;
            sp.v_u_plus = e->v2;
        } else {
            sp.lambda_s_minus = e->lambda1;
            sp.lambda_u_minus = e->lambda2;
            sp.v_s_minus = e->v1;
            sp.v_u_minus = e->v2;
        }
    }

    for (const Point2* v : {&sp.v_s_plus, &sp.v_u_plus, &sp.v_s_minus, &sp.v_u_minus}) {
        if (std::abs(dot(n, *v)) < tol * gn)
            throw Error(ErrorCode::TangentEigenvector, "an eigenvector at the origin is tangent to the switching curve");
    }

    // F1 orientation: c_u^{⊥,+} > 0, c_s^{⊥,+} > 0, c_u^{⊥,−} < 0, c_s^{⊥,−} < 0.
    auto orient = [&](Point2& v, double want) {
        if (dot(n, v) * want < 0.0) v = -1.0 * v;
    };
    orient(sp.v_u_plus, 1.0);
    orient(sp.v_s_minus, -1.0);
    if (hint) {
        if (dot(sp.v_u_minus, hint->departure) < 0.0) sp.v_u_minus = -1.0 * sp.v_u_minus;
        if (dot(sp.v_s_plus, hint->arrival) > 0.0) sp.v_s_plus = -1.0 * sp.v_s_plus;
    } else {
        orient(sp.v_u_minus, -1.0);
        orient(sp.v_s_plus, 1.0);
    }
    sp.c_u_perp_plus = dot(n, sp.v_u_plus);
    sp.c_u_perp_minus = dot(n, sp.v_u_minus);
    sp.c_s_perp_plus = dot(n, sp.v_s_plus);
    sp.c_s_perp_minus = dot(n, sp.v_s_minus);
    sp.f1_ok = sp.c_u_perp_minus < 0.0 && 0.0 < sp.c_u_perp_plus && sp.c_s_perp_minus < 0.0 && 0.0 < sp.c_s_perp_plus;
    return sp;
}

RateConstants rate_constants(const SaddleSpectrum& sp) {
    const double lsp = std::abs(sp.lambda_s_plus);
    const double lsm = std::abs(sp.lambda_s_minus);
    const double lup = sp.lambda_u_plus;
    const double lum = sp.lambda_u_minus;
    RateConstants r;
    r.sigma_fwd_plus = lsp / (lup + lsp);
    r.sigma_fwd_minus = (lum + lsm) / lum;
    r.sigma_fwd = r.sigma_fwd_plus * r.sigma_fwd_minus;
    r.sigma_bwd_plus = 1.0 / r.sigma_fwd_plus;
    r.sigma_bwd_minus = 1.0 / r.sigma_fwd_minus;
    r.sigma_bwd = r.sigma_bwd_plus * r.sigma_bwd_minus;
    r.sigma_lo = std::min(r.sigma_fwd_plus, r.sigma_bwd_minus);
    r.sigma_hi = std::max(r.sigma_fwd_plus, r.sigma_bwd_minus);
    r.Sigma_fwd_plus = 1.0 / (lup + lsp);
    r.Sigma_bwd_minus = 1.0 / (lum + lsm);
    r.Sigma_fwd = (lum + lsp) / (lum * (lup + lsp));
    r.Sigma_bwd = (lum + lsp) / (lsp * (lum + lsm));
    r.Sigma_lo = std::min(r.Sigma_fwd, r.Sigma_bwd);
    r.Sigma_hi = std::max(r.Sigma_fwd, r.Sigma_bwd);
    r.lambda_lo = std::min({lum, lup, lsm, lsp});
    r.lambda_hi = std::max({lum, lup, lsm, lsp});
    r.mu0 = 0.25 * std::min({r.Sigma_fwd_plus, r.Sigma_bwd_minus, r.sigma_lo * r.sigma_lo});
    r.sigma_fb = std::min(r.sigma_fwd, r.sigma_bwd);
    const double ratio = r.lambda_hi / r.lambda_lo;
    const double c_d = 7.0 * ratio * ratio * ratio;
    const double c_T = 1.0 / 6.0 + 1.0 / (2.0 * r.lambda_lo);
    r.c_mu = c_T + c_d + 1.0 / 6.0;
    return r;
}

ParameterCascade make_cascade(const RateConstants& rates, double epsilon, double mu, const CascadeOptions& opt) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw Error(ErrorCode::DegenerateInput, "epsilon must be finite and non-negative");
    if (!(mu > 0.0) || mu > rates.mu0 * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "mu = " << mu << " must lie in (0, mu0 = " << rates.mu0 << "]";
        throw Error(ErrorCode::DegenerateInput, msg.str());
    }
    ParameterCascade c;
    c.epsilon = epsilon;
    c.mu = mu;
    c.mu0 = rates.mu0;
    c.c_mu = rates.c_mu;
    c.mu2 = mu / rates.c_mu;
    c.mu1 = 0.5 * c.mu2;
    c.sigma_fb = rates.sigma_fb;
    const double beta_policy = std::max(2.0 * std::pow(epsilon, 0.5 * rates.sigma_fb), opt.beta_floor);
    c.beta = opt.beta > 0.0 ? opt.beta : beta_policy;
    if (epsilon > 0.0 && c.beta < std::pow(epsilon, 0.5 * rates.sigma_fb))
        throw Error(ErrorCode::DegenerateInput, "beta must be at least eps^(sigma_fb/2)");
    c.log_varpi_required = opt.log_varpi_required > 0.0 ? opt.log_varpi_required : opt.log_varpi_cap;
    c.log_varpi = std::min(c.log_varpi_required, opt.log_varpi_cap);
    c.varpi_capped = c.log_varpi_required > opt.log_varpi_cap;
    c.varpi = std::exp(-c.log_varpi);
    c.delta = c.beta / 4.0;
    return c;
}

}  // namespace homloop
