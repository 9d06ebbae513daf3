#pragma once

/// Exponential dichotomy of the linearizations at the saddle,
///
///     ξ' = A^±(t) ξ,   A^±(t) = f_x^±(0) + ε g_x(t, 0),
///
/// through their principal unstable/stable solutions w_u^±, w_s^± (normalized
/// at t = 0), the cocycle factors z_u(t, s) = ‖w_u(t)‖/‖w_u(s)‖ and z_s, the
/// dichotomy projections and measured constants, the decay sandwich along
/// leaf orbits, the three-term decomposition of an orbit passing the saddle,
/// and the choice of the transversal scale |ln ϖ|.

#include "homloop/anchors.hpp"
#include "homloop/spectrum.hpp"
#include "homloop/system.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace homloop {

struct PrincipalOptions {
    double t_min = -200.0;
    double t_max = 200.0;
    double rtol = 1e-12;
    double atol = 1e-14;
    /// Two pre-runs from different initial directions must agree to this
    /// angle at the start of the range (HorizonTooShort otherwise).
    double convergence_tol = 1e-10;
};

/// Principal solutions of one side, stored in log scale: the unit direction
/// by its angle and ln‖w‖ separately, so that no overflow occurs.
class PrincipalSolutions {
public:
    /// Uses sys.epsilon(). The unstable direction is propagated forward from a
    /// pre-run before t_min, the stable one backward from beyond t_max.
    PrincipalSolutions(const PiecewiseSystem& sys, Side side, const PrincipalOptions& opt = {});

    [[nodiscard]] Side side() const { return side_; }
    [[nodiscard]] double t_min() const { return opt_.t_min; }
    [[nodiscard]] double t_max() const { return opt_.t_max; }
    /// A^±(t).
    [[nodiscard]] Mat2 A(double t) const;
    /// Unit directions v_u(t), v_s(t), sign-aligned with the eigenvectors.
    [[nodiscard]] Point2 v_u(double t) const;
    [[nodiscard]] Point2 v_s(double t) const;
    /// ln‖w_u(t)‖, ln‖w_s(t)‖ (zero at t = 0).
    [[nodiscard]] double log_norm_u(double t) const;
    [[nodiscard]] double log_norm_s(double t) const;
    [[nodiscard]] Point2 w_u(double t) const;
    [[nodiscard]] Point2 w_s(double t) const;
    [[nodiscard]] double z_u(double t, double s) const;
    [[nodiscard]] double z_s(double t, double s) const;
    /// Rank-one projection onto span v_s(τ) along v_u(τ).
    [[nodiscard]] Mat2 projection(double tau) const;
    [[nodiscard]] double lambda_u() const { return lambda_u_; }
    [[nodiscard]] double lambda_s() const { return lambda_s_; }
    /// Frozen eigenvectors (the ε = 0 directions).
    [[nodiscard]] Point2 eigen_u() const { return eig_u_; }
    [[nodiscard]] Point2 eigen_s() const { return eig_s_; }

    struct Table;

private:
    PiecewiseSystem sys_;
    Side side_;
    PrincipalOptions opt_;
    double lambda_u_ = 0.0;
    double lambda_s_ = 0.0;
    Point2 eig_u_{};
    Point2 eig_s_{};
    std::shared_ptr<const Table> u_;
    std::shared_ptr<const Table> s_;
};

/// Deterministic grid for the constant estimates: t, s on a uniform grid of
/// [−span/2, span/2] (shifted by `center`), pairs with |t − s| ≤ span.
struct DichotomyGrid {
    double span = 50.0;
    int points = 101;
    double center = 0.0;
};

struct DichotomyData {
    std::shared_ptr<const PrincipalSolutions> plus;
    std::shared_ptr<const PrincipalSolutions> minus;
    double epsilon = 0.0;
    DichotomyGrid grid{};
    double k1_est = 1.0;     ///< |ln z − λ(t−s)| ≤ ln k1 + kε|t−s| on the grid
    double k_eps_est = 0.0;  ///< fitted exponent slack kε
    double k_est = 0.0;      ///< kε/ε (0 when ε = 0)
    double k2_est = 2.0;     ///< 2·sup of ‖P(τ)‖, ‖I − P(τ)‖ over the grid
    double C_est = 0.0;      ///< sup ‖v(t) − v‖/ε over the grid (0 when ε = 0)
    double gx_sup = 0.0;     ///< sup_t ‖g_x(t, 0)‖ over the grid

    [[nodiscard]] const PrincipalSolutions& side(Side s) const { return s == Side::Plus ? *plus : *minus; }
    /// Largest excess of |ln z(t,s) − λ(t−s)| over ln k1 + kε|t−s| on the grid
    /// (≤ 0 means the band holds), over both factors of both sides.
    [[nodiscard]] double band_excess(double k1, double k_eps) const;
};

DichotomyData dichotomy_data(const PiecewiseSystem& sys, const PrincipalOptions& opt = {}, const DichotomyGrid& grid = {});

struct CocycleReport {
    int samples = 0;
    double max_residual = 0.0;  ///< max relative |z(t,s) − z(t,r) z(r,s)|/z(t,s) over sides and factors
    double max_identity = 0.0;  ///< max |z(s,s) − 1|
};

/// Random (t, r, s) triples within `window` of the grid centre.
CocycleReport cocycle_check(const DichotomyData& data, int samples, std::uint64_t seed, double window = 25.0);

struct ProjectionReport {
    int samples = 0;
    double k2 = 0.0;
    double max_ratio_stable = 0.0;    ///< max ‖X(t)X(s)⁻¹P(s)ξ‖/(z_s(t,s)‖ξ‖)
    double max_ratio_unstable = 0.0;  ///< max ‖X(t)X(s)⁻¹(I−P(s))ξ‖/(z_u(t,s)‖ξ‖)
    int violations = 0;               ///< samples with a ratio above k2
    [[nodiscard]] bool pass() const { return violations == 0; }
};

/// Checks both projection inequalities with the measured k₂ by integrating
/// the linear system directly between random times |t − s| ≤ window.
ProjectionReport projection_bound_check(const DichotomyData& data, Side side, int samples, std::uint64_t seed,
                                        double window = 10.0);

struct SandwichReport {
    double c_k = 1.0;            ///< fitted on [0, fit_window]
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double worst_upper = 0.0;    ///< max ‖x‖/(c_k e^{−λ̲|θ|/2}) over the verify window
    double worst_lower = 0.0;    ///< max c_k⁻¹e^{−2λ̄|θ|}/‖x‖ over the verify window
    [[nodiscard]] bool pass() const { return worst_upper < 1.0 && worst_lower < 1.0; }
};

/// c_k⁻¹e^{−2λ̄|θ|} < ‖x(θ+τ, τ; anchor)‖ < c_k e^{−λ̲|θ|/2} along the stable
/// (θ ≥ 0) or unstable (θ ≤ 0) anchor orbit through P_s(τ) or P_u(τ).
SandwichReport anchor_decay_sandwich(const LeafAnchors& anchors, Leaf leaf, double tau, double fit_window = 5.0,
                                     double verify_window = 15.0);

struct SaddlePassageDecomposition {
    double tau = 0.0;
    double d = 0.0;
    double M = 0.0;
    Point2 Q{};                       ///< −d v_u^+ + π_s(τ)
    std::vector<double> theta;        ///< samples of [0, M]
    std::vector<Point2> x;            ///< x(θ+τ, τ; Q)
    std::vector<Point2> y_s;          ///< stable-leaf orbit through π_s(τ)
    std::vector<Point2> ell;          ///< −d z_u^+(θ+τ, τ) v_u^+(θ+τ)
    std::vector<Point2> h;            ///< x − y_s − ℓ
    double weighted_norm_h = 0.0;     ///< max ‖h(θ)‖/z_u^+(θ+τ, M+τ)
    double D_ell = 0.0;               ///< d z_u^+(M+τ, τ)
    double D0 = 0.0;                  ///< 1/|ln δ|²
    double M0 = 0.0;                  ///< 2|ln δ|/λ̲
    double bound = 0.0;               ///< D_ℓ·|ln ϖ|^{−α/2}
    [[nodiscard]] bool pass() const { return weighted_norm_h <= bound; }
};

/// Decomposes the orbit through Q = −d v_u^+ + π_s(τ) over θ ∈ [0, M]. Throws
/// NotOnTransversal if Q is off S̃⁺, PassageLeftRegion if the orbit reaches Ω⁰
/// before θ = M. `delta` enters only D₀ and M₀.
SaddlePassageDecomposition decompose_saddle_passage(const LeafAnchors& anchors, const PrincipalSolutions& plus, double tau,
                                                    double d, double M, double delta, int samples = 400);

/// Time θ at which the orbit through Q = −d v_u^+ + π_s(τ) first reaches Ω⁰
/// (the passage time T^f_2 of a loop through Q). Throws NotOnTransversal,
/// PassageLeftRegion if Ω⁰ is not reached within `horizon`.
double saddle_passage_time(const LeafAnchors& anchors, double tau, double d, double horizon = 100.0);

/// Measured constants and the resulting |ln ϖ|.
struct VarpiPolicy {
    double alpha = 1.0;
    double N_alpha = 0.0;       ///< Hölder constant of f_x^± near 0
    double c_s = 0.0;           ///< stable-leaf size constant, ‖y_s(θ)‖|ln ϖ| ≤ c_s z_s
    double k1 = 1.0;
    double k2 = 2.0;
    double K_plus = 0.0;
    double C = 0.0;             ///< constant of the first requirement
    double required = 0.0;      ///< smallest admissible |ln ϖ| (uncapped)
    double cap = 40.0;
    double log_varpi = 0.0;     ///< min(required, cap)
    bool capped = false;
};

/// Smallest |ln ϖ| satisfying |ln ϖ| ≥ max{(2C)^{2/α}, 4}, |ln ϖ| > K⁺c_s k₁² and
/// k₁²|ln ϖ|/(K⁺c_s) < ϖ^{−μ₂/4}, with measured constants; capped at `cap`.
VarpiPolicy varpi_policy(const PiecewiseSystem& sys, const Homoclinic& gamma, const DichotomyData& data, double mu2,
                         double cap = 40.0, double hoelder_radius = 0.1);

}  // namespace homloop
