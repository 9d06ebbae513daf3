#pragma once

/// Aggregation of loop batches: fitted displacement exponents and time
/// slopes against the theoretical rate constants, the deviation suite for
/// the positions along the loop, the first-arc mismatch suite, and the
/// inside-stability probe of the unperturbed loop.

#include "homloop/homoclinic.hpp"
#include "homloop/loopmap.hpp"
#include "homloop/spectrum.hpp"
#include "homloop/system.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace homloop {

/// Ordinary least squares y = intercept + slope·x.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;   ///< standard error of the slope (0 for n = 2)
    double half_width = 0.0;  ///< confidence half-width, 2·std_error
    int n = 0;
};

/// Throws InsufficientGrid for fewer than two distinct x values.
SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct ExponentFit {
    std::string name;  ///< sigma_fwd, sigma_fwd_plus, Sigma_fwd, Sigma_fwd_plus, and the bwd analogues
    SlopeFit fit;
    double theory = 0.0;
    double mu_effective = 0.0;  ///< max(μ, 3·std_error)
    bool pass = false;          ///< |slope − theory| ≤ mu_effective
};

struct ScalingReport {
    std::vector<double> d_grid;
    std::vector<double> tau_grid;
    RateConstants theory;
    double mu_used = 0.0;
    std::vector<ExponentFit> fits;
    /// Spread (max − min) of the per-τ slopes of each quantity when the
    /// batch holds more than one τ.
    std::map<std::string, double> tau_spread;

    [[nodiscard]] const ExponentFit* find(const std::string& name) const;
    [[nodiscard]] bool pass() const;
};

struct FitOptions {
    double d_max = 1e-2;      ///< only d ≤ d_max enter the fits
    int min_points = 5;
    double min_decades = 1.5;
};

/// Fits ln D_one and ln D_half against ln d and T_one, T_half against |ln d|
/// for each direction present in the batch. Throws InsufficientGrid when a
/// direction has fewer than min_points distinct d ≤ d_max or they span less
/// than min_decades.
ScalingReport fit_exponents(const std::vector<LoopResult>& batch, const RateConstants& theory, double mu,
                            const FitOptions& opt = {});

/// Runs the loops of a (d, τ) grid, forward and/or backward, on `threads`
/// workers. The result is ordered by (direction, τ, d) regardless of the
/// thread count; the first failing cell (in that order) is rethrown unless
/// `keep_failures` is set, in which case a failed cell carries its d, τ and
/// direction, NaN measurements and the error message as status.
std::vector<LoopResult> loop_batch(const LoopMap& map, const std::vector<double>& d_grid,
                                   const std::vector<double>& tau_grid, bool forward, bool backward, int threads = 1,
                                   bool keep_failures = false);

struct DeviationEntry {
    double d = 0.0;
    double tau = 0.0;
    Direction direction = Direction::Fwd;
    double dev_first = 0.0;
    double dev_second = 0.0;
    double bound = 0.0;  ///< d^{σ^fwd_+ − μ} (forward) or d^{σ^bwd_− − μ} (backward)
    [[nodiscard]] bool ok() const { return dev_first <= bound && dev_second <= bound; }
};

struct DeviationReport {
    std::vector<DeviationEntry> entries;
    int violations = 0;
    double worst_margin = 0.0;  ///< max of dev/bound over all entries (≤ 1 passes)
    [[nodiscard]] bool pass() const { return violations == 0; }
};

DeviationReport deviation_suite(const std::vector<LoopResult>& batch, const RateConstants& theory, double mu);

struct EllMismatchEntry {
    double d = 0.0;
    bool measured = false;         ///< false when the orbit misses S̃⁺
    double mismatch = 0.0;         ///< ‖P_f^+ − x(T^f_1+τ, τ; P_s(τ))‖
    double mismatch_bound = 0.0;   ///< d·δ^{−μ₁/2}
    double arc_deviation = 0.0;    ///< sup over the first arc of ‖x(·; Q_s) − x(·; P_s)‖
    double arc_bound = 0.0;        ///< d·δ^{−μ₁}
    [[nodiscard]] bool ok() const { return !measured || (mismatch <= mismatch_bound && arc_deviation <= arc_bound); }
};

struct EllMismatchReport {
    double tau = 0.0;
    double delta = 0.0;
    double mu1 = 0.0;
    std::vector<EllMismatchEntry> entries;
    int violations = 0;
    double slope = 0.0;  ///< fitted slope of ln mismatch against ln d (0 with < 2 measured points)
};

EllMismatchReport ell_mismatch_suite(const LoopMap& map, const std::vector<double>& d_grid, double tau, double mu1,
                                     int arc_samples = 400);

enum class StabilityPrediction { StableInside, UnstableInside, Indeterminate };

const char* to_string(StabilityPrediction p);

struct StabilityProbe {
    double div_at_origin_plus = 0.0;
    double div_at_origin_minus = 0.0;
    double div_integral_along_gamma = 0.0;  ///< ∫_Γ div f^± ds (side-appropriate)
    StabilityPrediction prediction = StabilityPrediction::Indeterminate;
    double d0 = 0.0;
    std::vector<double> displacements;      ///< d₀, d₁, … of the iterated return map
    int loops_completed = 0;
    bool escaped = false;                   ///< the orbit left the region before n_loops
    double empirical_contraction = 0.0;     ///< (d_n/d₀)^{1/n}
    bool consistent = false;                ///< prediction agrees with the measured ratio (5%)
    std::string note;
};

/// Dulac sign rules and the iterated ε = 0 return map from d₀. The next
/// displacement is the directed distance of 𝒫₁ inside P_s. Requires ε = 0.
StabilityProbe dulac_probe(const PiecewiseSystem& sys, const Homoclinic& gamma, int n_loops, double d0 = 1e-3,
                           double log_varpi = 40.0);

/// Parameter value in [lo, hi] at which a one-parameter family has a
/// homoclinic loop (the shot branches meet on Ω⁰), by bracketing the
/// shooting mismatch. Throws NoConnection if the mismatch does not change sign.
double find_connection_parameter(const std::function<PiecewiseSystem(double)>& family, double lo, double hi,
                                 double tol = 1e-13);

}  // namespace homloop
