#pragma once

/// Event-driven integration of a piecewise-smooth system: every sign change of
/// G along the orbit is located, the step is cut at the crossing, and the
/// integration restarts exactly there with the other side's field. Crossings
/// that would enter sliding motion, or that are tangential, are rejected.

#include "homloop/rk.hpp"
#include "homloop/system.hpp"
#include "homloop/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace homloop {

/// Integration and event tolerances.
struct Tolerances {
    double rtol = 1e-12;
    double atol = 1e-15;
    double crossing = 1e-12;              ///< |G| at a located crossing, relative to ‖∇G‖(1+‖x‖)
    double transversality_floor = 1e-9;   ///< minimum |∇Gᵀ F| / ‖∇G‖ at a crossing
    double h_max = 0.25;                  ///< largest step
    long max_steps = 5'000'000;
};

/// A transversal crossing of Ω⁰.
struct CrossingEvent {
    double t = 0.0;
    Point2 point{};
    double transversality = 0.0;  ///< ∇Gᵀ F of the incoming side, in physical time
    Side from_side = Side::Minus;
    Side to_side = Side::Plus;
    bool initial = false;  ///< the orbit started on Ω⁰ and this records its departure
};

/// A recorded passage through a user section.
struct SectionHit {
    int id = 0;
    double t = 0.0;
    Point2 point{};
};

/// A section given as the zero set of fn, restricted by accept; direction
/// +1/−1 requires fn to increase/decrease along the integration, 0 accepts both.
struct SectionStop {
    int id = 0;
    std::function<double(const Point2&)> fn;
    std::function<bool(const Point2&)> accept;  ///< empty accepts every hit
    int direction = 0;
    bool terminal = true;
};

/// Stop at the count-th Ω⁰ crossing (not counting an initial departure)
/// whose event satisfies accept.
struct SwitchStop {
    int id = -1;
    int count = 1;
    std::function<bool(const CrossingEvent&)> accept;
};

/// Stop on entering (entry = true) or leaving the ball B(center, radius).
struct BallStop {
    Point2 center{};
    double radius = 0.0;
    bool entry = true;
};

struct StopSet {
    double t_end = 0.0;  ///< time horizon (always active)
    std::vector<SectionStop> sections;
    std::optional<SwitchStop> switch_stop;
    std::vector<BallStop> balls;
    /// When false, a sliding crossing ends the trajectory with
    /// Termination::SlidingDetected instead of throwing.
    bool throw_on_sliding = true;
};

enum class Termination { TimeHorizon, HitTarget, SlidingDetected, LeftDomain, Converged };

const char* to_string(Termination t);

/// One accepted step with its dense polynomial, tagged with the active side.
struct TrajectoryStep {
    rk::DenseStep<2> dense;
    Side side = Side::Plus;
};

/// A numerically integrated orbit x(t, τ; P) with its dense output.
class Trajectory {
public:
    std::vector<TrajectoryStep> steps;
    std::vector<CrossingEvent> crossings;
    std::vector<SectionHit> hits;
    double t_start = 0.0;
    double t_end = 0.0;
    Point2 start{};
    Point2 end{};
    Side start_side = Side::Plus;
    Side end_side = Side::Plus;
    Direction direction = Direction::Fwd;
    Termination termination = Termination::TimeHorizon;
    int target_id = 0;  ///< id of the section that ended the run (HitTarget)

    [[nodiscard]] double t_min() const { return std::min(t_start, t_end); }
    [[nodiscard]] double t_max() const { return std::max(t_start, t_end); }
    [[nodiscard]] bool contains(double t) const;
    /// Position at time t; throws IntervalOutOfRange outside [t_min, t_max].
    [[nodiscard]] Point2 at(double t) const;
    /// Active side at time t (the side of the step containing t).
    [[nodiscard]] Side side_at(double t) const;
    /// Uniform samples (t, x) over the span, including both ends.
    [[nodiscard]] std::vector<std::pair<double, Point2>> sample(std::size_t n) const;
    /// Crossings other than an initial departure.
    [[nodiscard]] std::vector<CrossingEvent> interior_crossings() const;

private:
    [[nodiscard]] std::size_t locate(double t) const;
};

/// Chooses the side an orbit enters when it starts on Ω⁰ (or the side of P
/// otherwise). Throws SlidingDetected or NonTransversalCrossing.
Side departure_side(const PiecewiseSystem& sys, double t, const Point2& P, Direction dir, const Tolerances& tol);

/// Integrates from (τ, P) in the given direction until the first stop fires.
Trajectory integrate(const PiecewiseSystem& sys, double tau, const Point2& P, Direction dir, const StopSet& stops,
                     const Tolerances& tol = {});

/// Φ_{τ2,τ1}(Q): the point reached at τ2 by the orbit through Q at τ1.
Point2 flow_map(const PiecewiseSystem& sys, double tau1, double tau2, const Point2& Q, const Tolerances& tol = {});

/// How the fundamental matrix is continued through a crossing of Ω⁰.
enum class CrossingRule {
    Continuous,  ///< restart with the new side's Jacobian, X continuous
    Saltation,   ///< apply the saltation matrix (derivative of the true flow)
};

/// Fundamental matrix X(t, s) of the variational equation along a base orbit
/// together with the Liouville integral ∫_s^t tr J(x(r)) dr.
struct FundamentalMatrix {
    Mat2 X = Mat2::identity();
    double trace_integral = 0.0;
    double t = 0.0;
    double s = 0.0;
};

/// Solves X' = J^±(r, x(r)) X from s to t along base (either order).
FundamentalMatrix variational_flow(const PiecewiseSystem& sys, const Trajectory& base, double t, double s,
                                   CrossingRule rule = CrossingRule::Continuous, const Tolerances& tol = {});

/// Saltation matrix for a crossing from side `from` to side `to` at (t, x).
Mat2 saltation_matrix(const PiecewiseSystem& sys, double t, const Point2& x, Side from, Side to);

}  // namespace homloop
