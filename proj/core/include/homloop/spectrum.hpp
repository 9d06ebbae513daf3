#pragma once

/// Saddle eigendata at the origin, the rate constants derived from it, and
/// the session parameter cascade (β, ϖ, δ, μ, μ₁, μ₂).

#include "homloop/system.hpp"
#include "homloop/types.hpp"

#include <optional>
#include <string>

namespace homloop {

/// Eigendata of f_x^±(0) with signs normalized so that
///     c_u^{⊥,−} < 0 < c_u^{⊥,+},   c_s^{⊥,−} < 0 < c_s^{⊥,+},
/// where c^⊥ = ∇G(0)ᵀ v.
struct SaddleSpectrum {
    double lambda_s_plus = 0.0;
    double lambda_u_plus = 0.0;
    double lambda_s_minus = 0.0;
    double lambda_u_minus = 0.0;
    Point2 v_s_plus{};
    Point2 v_u_plus{};
    Point2 v_s_minus{};
    Point2 v_u_minus{};
    double c_u_perp_plus = 0.0;
    double c_u_perp_minus = 0.0;
    double c_s_perp_plus = 0.0;
    double c_s_perp_minus = 0.0;
    double eigen_residual = 0.0;  ///< max ‖J v − λ v‖ over the four pairs
    /// True when the F1 sign pattern holds after orientation; false only when
    /// an orientation hint forced a sign that contradicts it.
    bool f1_ok = true;

    [[nodiscard]] double lambda_s(Side s) const { return s == Side::Plus ? lambda_s_plus : lambda_s_minus; }
    [[nodiscard]] double lambda_u(Side s) const { return s == Side::Plus ? lambda_u_plus : lambda_u_minus; }
    [[nodiscard]] Point2 v_s(Side s) const { return s == Side::Plus ? v_s_plus : v_s_minus; }
    [[nodiscard]] Point2 v_u(Side s) const { return s == Side::Plus ? v_u_plus : v_u_minus; }
    /// K^+ with v_s^+ − K^+ v_u^+ tangent to Ω⁰ at the origin.
    [[nodiscard]] double K_plus() const { return c_s_perp_plus / c_u_perp_plus; }
    /// K^− with v_u^− − K^− v_s^− tangent to Ω⁰ at the origin.
    [[nodiscard]] double K_minus() const { return c_u_perp_minus / c_s_perp_minus; }
};

/// Limits of γ̇/‖γ̇‖ at t → −∞ (departure) and t → +∞ (arrival).
struct OrientationHint {
    Point2 departure{};
    Point2 arrival{};
};

/// Eigen-decomposes f_x^±(0). v_u^− and v_s^+ are oriented by the hint when
/// given (v_u^− = departure, v_s^+ = −arrival) and by F1 otherwise; v_u^+ and
/// v_s^− are always oriented by F1. Throws NotASaddle or TangentEigenvector
/// (|c^⊥| below tol·‖∇G(0)‖).
SaddleSpectrum compute_spectrum(const PiecewiseSystem& sys, const std::optional<OrientationHint>& hint = {},
                                double tol = 1e-9);

/// Rate constants built from the four eigenvalues.
struct RateConstants {
    double sigma_fwd_plus = 0.0;
    double sigma_fwd_minus = 0.0;
    double sigma_fwd = 0.0;
    double sigma_bwd_plus = 0.0;
    double sigma_bwd_minus = 0.0;
    double sigma_bwd = 0.0;
    double sigma_lo = 0.0;
    double sigma_hi = 0.0;
    double Sigma_fwd_plus = 0.0;
    double Sigma_bwd_minus = 0.0;
    double Sigma_fwd = 0.0;
    double Sigma_bwd = 0.0;
    double Sigma_lo = 0.0;
    double Sigma_hi = 0.0;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double mu0 = 0.0;
    double sigma_fb = 0.0;
    /// c_μ = c_T + c_d + 1/6 with c_d = 7(λ̄/λ̲)³ and c_T = 1/6 + 1/(2λ̲).
    double c_mu = 0.0;
};

RateConstants rate_constants(const SaddleSpectrum& spec);

/// Resolved session parameters. μ₂ = μ/c_μ, μ₁ = μ₂/2,
/// β = max(2ε^{σ^fb/2}, β_floor), δ = β/4, |ln ϖ| = min(required, cap).
struct ParameterCascade {
    double epsilon = 0.0;
    double mu = 0.0;
    double mu0 = 0.0;
    double c_mu = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double sigma_fb = 0.0;
    double beta = 0.0;
    double log_varpi_required = 0.0;  ///< |ln ϖ| demanded by the measured constants
    double log_varpi = 0.0;           ///< |ln ϖ| actually used
    bool varpi_capped = false;
    double varpi = 0.0;
    double delta = 0.0;

    /// Half-width and offset of the saddle transversals S̃^±: 1/|ln ϖ|.
    [[nodiscard]] double transversal_scale() const { return 1.0 / log_varpi; }
};

struct CascadeOptions {
    double beta_floor = 0.05;
    double log_varpi_cap = 40.0;
    /// Required |ln ϖ| from the dichotomy policy; values ≤ 0 mean "use the cap".
    double log_varpi_required = 0.0;
    /// Explicit β override (0 = policy).
    double beta = 0.0;
};

/// Throws DegenerateInput if μ ∉ (0, μ₀] or ε < 0.
ParameterCascade make_cascade(const RateConstants& rates, double epsilon, double mu, const CascadeOptions& opt = {});

/// 2×2 eigen-decomposition of a real matrix with real distinct eigenvalues,
/// returned in ascending order with unit eigenvectors (arbitrary sign).
struct EigenPair2 {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Point2 v1{};
    Point2 v2{};
};
std::optional<EigenPair2> real_eigen(const Mat2& A);

}  // namespace homloop
