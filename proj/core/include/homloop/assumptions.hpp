#pragma once

/// Checks of the standing assumptions (F0, F1, F2, K, G), the scenario
/// classification, the rotated perpendicular field and the constant 𝒦.

#include "homloop/homoclinic.hpp"
#include "homloop/spectrum.hpp"
#include "homloop/system.hpp"

#include <string>

namespace homloop {

enum class Scenario { S1, S2, S3, S4, Undetermined };

const char* to_string(Scenario s);

struct AssumptionReport {
    bool f0_ok = false;
    bool f1_ok = false;
    bool f2_ok = false;
    bool g_ok = false;
    /// min over ± of ∇G(γ(0))ᵀ f^±(γ(0)); assumption K requires it positive.
    double k_transversality = 0.0;
    Scenario scenario = Scenario::Undetermined;
    bool sliding_near_origin = false;
    double probe_distance = 0.0;  ///< d used for the E^in/E^out probes
    bool v_u_plus_inside = false;
    bool v_s_minus_inside = false;
};

struct ClassifyOptions {
    double probe_fraction = 1e-4;   ///< initial probe d relative to diameter(Γ)
    int max_halvings = 8;
    double ambiguity_fraction = 1e-3;  ///< probe counts as on Γ if closer than this·d
};

/// True iff w1 and w2 lie in different open sectors cut out by the rays along
/// r1 and r2 (the sectors are undefined if w lies on a ray; reported false).
bool opposite_sectors(const Point2& r1, const Point2& r2, const Point2& w1, const Point2& w2);

/// Scenario by E^in/E^out membership of d·v_u^+ and d·v_s^−, F2 by the sector
/// test on v_s^±. Throws ProbeAmbiguous when no probe distance decides.
AssumptionReport classify_scenario(const PiecewiseSystem& sys, const SaddleSpectrum& spec, const Homoclinic& gamma,
                                   const ClassifyOptions& opt = {});

/// Orientation sign s such that γ(0) + c·s·rot90(f^+(γ(0))) ∈ E^in for small c > 0.
int perp_orientation(const PiecewiseSystem& sys, const Homoclinic& gamma);

/// f^{⊥,±}(x) = s·rot90(f^±(x)). Throws ZeroField when ‖f^±(x)‖ < tol.
Point2 perp_field(const PiecewiseSystem& sys, Side side, const Point2& x, int orientation, double tol = 1e-14);

struct KappaGrid {
    int along = 64;      ///< points along Γ (uniform in arclength, origin excluded)
    int offsets = 16;    ///< normal offsets, linspace(−radius, radius)
    int times = 32;      ///< time samples over one period, or over [0, 8π] if aperiodic
    double radius = 1.0;
};

/// 𝒦 = 2·max over the grid of ‖g(t, x)‖/‖f^±(x)‖ (side ± admissible at x).
/// Throws FieldVanishesOnGrid if some ‖f^±(x)‖ on the grid is below 1e-12.
double kappa_bound(const PiecewiseSystem& sys, const Homoclinic& gamma, const KappaGrid& grid = {});

}  // namespace homloop
