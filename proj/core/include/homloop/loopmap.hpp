#pragma once

/// Barrier curves and trapping regions around Γ, and the forward/backward
/// loop Poincaré maps with their segment times and displacements.
///
/// The barrier curves are orbits of the autonomous rotated fields
///
///     f_a = f + ε𝒦 f^⊥,   f_b = f − ε𝒦 f^⊥,
///
/// with f^⊥ = s·rot90(f) oriented towards E^in. Z^{fwd,in} and Z^{bwd,out}
/// are f_a orbits, Z^{fwd,out} and Z^{bwd,in} are f_b orbits; each starts at
/// the point of L⁰ at Euclidean distance β from γ(0) on its side of Γ.

#include "homloop/anchors.hpp"
#include "homloop/chart.hpp"
#include "homloop/homoclinic.hpp"
#include "homloop/spectrum.hpp"
#include "homloop/system.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homloop {

/// One barrier curve as a polyline in its natural orbit order, with the
/// distinguished points. Unused points (R for out-curves, O for in-curves)
/// are left unset.
struct BarrierCurve {
    std::string name;
    std::vector<Point2> points;
    Point2 P{};
    Point2 Q{};
    std::optional<Point2> R;
    std::optional<Point2> O;
    /// Field used to generate the curve: +1 for f_a, −1 for f_b.
    int field = 1;
};

/// An endpoint norm against its prescribed band [lo, hi].
struct BandCheck {
    std::string name;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] bool ok() const { return value >= lo && value <= hi; }
};

/// Sign test of the true field against the curve normal at interior samples.
struct FlowDirectionCheck {
    std::string curve;
    int samples = 0;
    int violations = 0;
    /// Smallest normalized normal component (F·n)/‖F‖ with n pointing to the
    /// required side; positive means strictly crossing the right way.
    double worst = 0.0;
};

struct BarrierOptions {
    int polyline_points = 1500;   ///< samples per integrated branch
    int flow_samples = 32;        ///< interior samples per curve for the sign test
    int time_phases = 16;         ///< time samples over one period (non-autonomous F)
    /// With ε = 0 the curves are orbits of F and the normal component vanishes;
    /// it then passes when |F·n|/‖F‖ stays below this tolerance.
    double tangency_tol = 1e-7;
    double horizon = 200.0;
    /// Throw BandViolation from build_barriers when a band fails.
    bool strict = false;
    Tolerances tol{};
};

class BarrierSet {
public:
    double beta = 0.0;
    double mu = 0.0;
    double epsilon = 0.0;
    double kappa = 0.0;
    int orientation = 1;
    Point2 gamma0{};
    Point2 w{};  ///< unit tangent of Ω⁰ at γ(0) pointing into E^in
    Point2 zeta_u_a{}, zeta_s_a{}, zeta_u_b{}, zeta_s_b{};
    /// Offsets of the starting points from the ζ-points along Ω⁰.
    double D_bar_fwd_in = 0.0, D_bar_fwd_out = 0.0, D_bar_bwd_in = 0.0, D_bar_bwd_out = 0.0;
    BarrierCurve z_fwd_in, z_fwd_out, z_bwd_in, z_bwd_out;
    std::vector<BandCheck> bands;
    std::vector<FlowDirectionCheck> flow;
    double containment_radius = 0.0;      ///< β^{σ̲−μ}
    double max_distance_fwd = 0.0;        ///< max distance of ∂K^fwd to Γ
    double max_distance_bwd = 0.0;
    double min_distance_to_gamma = 0.0;   ///< over all four curves
    bool simple = false;                  ///< every curve is free of self-intersections
    bool disjoint = false;                ///< in/out curves of each family do not meet

    [[nodiscard]] bool bands_ok() const;
    [[nodiscard]] bool flow_ok() const;
    [[nodiscard]] bool geometry_ok() const;
    [[nodiscard]] bool pass() const { return bands_ok() && flow_ok() && geometry_ok(); }

    /// Membership in the compact sets K^fwd, K^bwd (boundary included).
    [[nodiscard]] bool in_K_fwd(const Point2& x) const;
    [[nodiscard]] bool in_K_bwd(const Point2& x) const;
    /// A/B split of K along Γ: A is the part in the closure of E^in, B the rest.
    [[nodiscard]] bool in_K_fwd_A(const Point2& x) const;
    [[nodiscard]] bool in_K_fwd_B(const Point2& x) const;
    [[nodiscard]] bool in_K_bwd_A(const Point2& x) const;
    [[nodiscard]] bool in_K_bwd_B(const Point2& x) const;

    struct Regions;
    std::shared_ptr<const Regions> regions;
    std::shared_ptr<const Homoclinic> gamma;
};

/// Builds the four barrier curves for β and μ. `kappa` ≤ 0 means 𝒦 from
/// kappa_bound. Rates are taken from the homoclinic's spectrum. Throws
/// DegenerateInput for β outside (0, L⁰ radius), LeftRegion if a curve
/// misses its sections, BandViolation in strict mode.
BarrierSet build_barriers(const PiecewiseSystem& sys, double beta, double mu, const LeafAnchors& anchors,
                          double kappa = 0.0, const BarrierOptions& opt = {});

struct LoopOptions {
    /// Assert that the orbit stays in K^fwd (K^bwd) when barriers are given.
    bool check_containment = true;
    int containment_samples = 256;
    int deviation_samples = 2000;
    double horizon = 0.0;  ///< 0 means 40 + 8|ln d|/λ̲
    Tolerances tol{};
    /// Tolerances of both legs of the round trip. The residual grows like
    /// rtol/d² (the saddle passage amplifies local errors by ~1/d each way),
    /// so the reversibility check integrates more tightly than the loops.
    Tolerances roundtrip_tol = tight_tolerances();

    static Tolerances tight_tolerances() {
        Tolerances t;
        t.rtol = 1e-14;
        t.atol = 1e-18;
        return t;
    }
};

/// Result of one loop. For a backward loop the times are τ − 𝒯_{−½} and
/// τ − 𝒯_{−1} (positive), and the points are 𝒫_{−½}, 𝒫_{−1}.
struct LoopResult {
    double d = 0.0;
    double tau = 0.0;
    Direction direction = Direction::Fwd;
    Point2 start{};       ///< Q_s(d, τ) or Q_u(d, τ)
    double T_half = 0.0;
    double T_one = 0.0;
    Point2 P_half{};      ///< on L^in
    Point2 P_one{};       ///< on L⁰
    double D_half = 0.0;  ///< ‖𝒫_{±½}‖
    double D_one = 0.0;   ///< 𝒟(𝒫₁, P_u(𝒯₁)) or 𝒟(𝒫_{−1}, P_s(𝒯_{−1}))
    /// T^f_1..4 (T^b for backward): to the first transversal, to L^in, to the
    /// second transversal, to L⁰. NaN when the orbit misses a transversal.
    std::array<double, 4> segment_times{};
    std::array<double, 4> segment_disps{};
    bool segments_available = false;
    /// Hits of the first and second saddle transversal (P_f^± or P_b^∓).
    Point2 P_first{};
    Point2 P_second{};
    double sup_dev_first_half = 0.0;
    double sup_dev_second_half = 0.0;
    /// Normal velocities ∇Gᵀ F at the start, L^in and L⁰ crossings.
    std::array<double, 3> transversality{};
    bool contained = true;  ///< all containment samples inside K (true when unchecked)
    std::string status = "ok";
};

/// Forward and backward loop maps over shared, immutable anchors and barriers.
class LoopMap {
public:
    LoopMap(const LeafAnchors& anchors, double delta, std::shared_ptr<const BarrierSet> barriers = nullptr,
            LoopOptions opt = {});

    /// Q_s(d, τ), Q_u(d, τ): the points of Ω⁰ at directed distance d on the
    /// E^in side of P_s(τ), P_u(τ). Throws DegenerateInput unless 0 < d ≤ δ.
    [[nodiscard]] Point2 Q_s(double d, double tau) const;
    [[nodiscard]] Point2 Q_u(double d, double tau) const;

    /// Throws DegenerateInput, LeftRegion, SlidingDetected, NonTransversalCrossing.
    [[nodiscard]] LoopResult forward(double d, double tau) const;
    [[nodiscard]] LoopResult backward(double d, double tau) const;
    /// ‖x(τ, 𝒯₁; 𝒫₁) − Q_s(d, τ)‖ after a forward loop.
    [[nodiscard]] double roundtrip(double d, double tau) const;

    [[nodiscard]] const DirectedChart& chart() const { return *chart_; }
    [[nodiscard]] const LeafAnchors& anchors() const { return anchors_; }
    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] const LoopOptions& options() const { return opt_; }

private:
    [[nodiscard]] LoopResult run(double d, double tau, Direction dir, const Tolerances& tol) const;
    [[nodiscard]] double horizon(double d) const;

    const LeafAnchors& anchors_;
    double delta_;
    std::shared_ptr<const BarrierSet> barriers_;
    LoopOptions opt_;
    std::shared_ptr<const DirectedChart> chart_;
};

LoopResult loop_forward(const LoopMap& map, double d, double tau);
LoopResult loop_backward(const LoopMap& map, double d, double tau);
double roundtrip_check(const LoopMap& map, double d, double tau);

}  // namespace homloop
