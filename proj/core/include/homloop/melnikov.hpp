#pragma once

/// The piecewise-smooth Melnikov function
///
///     M(α) = ∫_{−∞}^0 w⁻(t) f⁻(γ(t)) ∧ g(t+α, γ(t), 0) dt
///          + ∫_0^{∞}  w⁺(t) f⁺(γ(t)) ∧ g(t+α, γ(t), 0) dt,
///
/// with trace weights w^±(t) = exp(−∫₀ᵗ tr f_x^±(γ(s)) ds), its zeros, and the
/// comparison with the measured splitting of the perturbed leaves.

#include "homloop/anchors.hpp"
#include "homloop/homoclinic.hpp"
#include "homloop/system.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace homloop {

struct MelnikovOptions {
    double quad_tol = 1e-13;        ///< relative Gauss–Kronrod tolerance per unit subinterval
    double truncation_tol = 1e-14;  ///< integrand bound at which the half-lines are cut
    double max_horizon = 200.0;     ///< hard cap on T_mel
    double zero_tol = 1e-10;        ///< |M| accepted at a refined zero
    double nondegeneracy = 1e-6;    ///< zeros need |M'| > nondegeneracy·max|M|
    double slope_step = 1e-4;       ///< central-difference step for M'
};

struct MelnikovZero {
    double alpha = 0.0;
    double slope = 0.0;
};

struct MelnikovProfile {
    std::vector<double> alphas;
    std::vector<double> values;
    std::vector<MelnikovZero> zeros;       ///< nondegenerate zeros
    std::vector<MelnikovZero> degenerate;  ///< zeros rejected by the nondegeneracy floor (DegenerateZero)
    std::optional<double> period;          ///< when set, the grid wraps around after one period
    double horizon_minus = 0.0;            ///< truncation of the negative half-line
    double horizon_plus = 0.0;             ///< truncation of the positive half-line
};

class Melnikov {
public:
    /// Uses the perturbation attached to sys (its ε is irrelevant: g is taken at ε = 0).
    /// Throws WeightOverflow if a trace weight grows beyond e^{700} before the
    /// integrand has decayed.
    Melnikov(const PiecewiseSystem& sys, const Homoclinic& gamma, MelnikovOptions opt = {});

    [[nodiscard]] double value(double alpha) const;
    [[nodiscard]] double operator()(double alpha) const { return value(alpha); }
    /// Integrand w^±(t) f^±(γ(t)) ∧ g(t+α, γ(t), 0).
    [[nodiscard]] double integrand(double t, double alpha) const;
    /// ln w^±(t) (sign of t selects the side).
    [[nodiscard]] double log_weight(double t) const;
    [[nodiscard]] double horizon_minus() const;
    [[nodiscard]] double horizon_plus() const;
    /// Same computation with both truncation horizons multiplied by `factor`.
    [[nodiscard]] double value_with_horizon_factor(double alpha, double factor) const;
    /// Evaluates M on the grid and locates the zeros.
    [[nodiscard]] MelnikovProfile profile(const std::vector<double>& alphas) const;
    [[nodiscard]] const MelnikovOptions& options() const { return opt_; }

    struct Data;

private:
    std::shared_ptr<const Data> d_;
    MelnikovOptions opt_;
};

/// Uniform grid of n values over one period [0, T) of g, or [0, 2π) if g is aperiodic.
std::vector<double> default_alpha_grid(const PiecewiseSystem& sys, int n = 64);

/// Locates sign changes (and exact grid zeros) of the tabulated profile,
/// refines each on M to |M| < zero_tol and classifies it by its central
/// difference slope. Fills profile.zeros and profile.degenerate.
void find_zeros(MelnikovProfile& profile, const std::function<double(double)>& M, const MelnikovOptions& opt = {});

struct SplittingSample {
    double tau = 0.0;
    double epsilon = 0.0;
    double splitting = 0.0;   ///< 𝒟(P_u(τ), P_s(τ))
    double melnikov = 0.0;    ///< M(τ)
    double ratio = 0.0;       ///< 𝒟/(ε M(τ)); 0 when excluded
    bool near_zero = false;   ///< |M(τ)| below 10% of max|M|: excluded from the ratio test
    bool sign_ok = false;     ///< sign(𝒟) = sign(M)·orientation
};

struct SplittingReport {
    std::vector<SplittingSample> samples;
    /// sign of 1/(e ∧ f^+(γ(0))), e the chart tangent at γ(0); to first order
    /// 𝒟 = ε M/(e ∧ f(γ(0))) for smooth systems.
    double predicted_constant = 0.0;
    double ratio_min = 0.0;
    double ratio_max = 0.0;
    double relative_spread = 0.0;  ///< (max − min)/|mean| of the admissible ratios
    bool signs_ok = false;
    bool ratio_ok = false;         ///< relative spread ≤ 15%
    [[nodiscard]] bool pass() const { return signs_ok && ratio_ok; }
};

/// Measures the leaf splitting for every (τ, ε) of the grids. `base` carries
/// the perturbation (its ε is replaced by each grid value).
SplittingReport splitting_check(const PiecewiseSystem& base, const Homoclinic& gamma, const std::vector<double>& tau_grid,
                                const std::vector<double>& eps_grid, double log_varpi, const AnchorOptions& anchor_opt = {},
                                const MelnikovOptions& mel_opt = {});

}  // namespace homloop
