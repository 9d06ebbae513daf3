#pragma once

/// Perturbed leaf anchors: P_s(τ), P_u(τ) on the reference section L⁰ and
/// π_s(τ), π_u(τ) on the saddle transversals S̃⁺, S̃⁻. A point of the stable
/// (unstable) leaf at time τ is found by launching η·v_s^+ (η·v_u^−) near the
/// saddle and integrating backward (forward); the launch time is solved for
/// so that the orbit meets the target section exactly at time τ, and the
/// results for η, η/2, η/4 are Richardson-extrapolated.

#include "homloop/flow.hpp"
#include "homloop/homoclinic.hpp"
#include "homloop/spectrum.hpp"
#include "homloop/system.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace homloop {

enum class Leaf { Stable, Unstable };
enum class AnchorSection { L0, Transversal };

const char* to_string(Leaf l);

/// Finite segment {base + c·dir : |c| ≤ half_width}.
struct Transversal {
    Point2 base{};
    Point2 dir{};
    Point2 other{};  ///< complementary direction used for coordinates
    double half_width = 0.0;

    /// Coefficient c of x = c·dir + b·other + base.
    [[nodiscard]] double coordinate(const Point2& x) const { return wedge(x - base, other) / wedge(dir, other); }
    /// Signed function vanishing on the line of the segment.
    [[nodiscard]] double level(const Point2& x) const { return wedge(dir, x - base); }
    [[nodiscard]] bool covers(const Point2& x) const { return std::abs(coordinate(x)) <= half_width; }
};

/// S̃⁺ = {c·v_u^+ + v_s^+/L : |c| ≤ 1/L} and S̃⁻ = {c·v_s^− + v_u^−/L : |c| ≤ 1/L}, L = |ln ϖ|.
Transversal transversal_plus(const SaddleSpectrum& spec, double log_varpi);
Transversal transversal_minus(const SaddleSpectrum& spec, double log_varpi);

struct AnchorOptions {
    double eta0 = 1e-4;
    double horizon = 0.0;        ///< max launch-to-τ time; 0 means max(30, 8/λ̲)
    double L0_radius = 0.0;      ///< radius of L⁰ around γ(0); 0 means 0.1·diameter(Γ)
    double richardson_tol = 1e-8;
    double time_tol = 1e-12;     ///< |t_hit − τ| accepted by the launch-time solve
    int max_iterations = 40;
    Tolerances tol{};
};

struct AnchorPoint {
    Point2 point{};
    double extrapolation_error = 0.0;  ///< disagreement of the two Richardson estimates
    double travel_time = 0.0;          ///< |launch time − τ| for η₀
    Point2 raw_eta0{};                 ///< unextrapolated result at η₀
};

class LeafAnchors {
public:
    LeafAnchors(const PiecewiseSystem& sys, const Homoclinic& gamma, double log_varpi, AnchorOptions opt = {});

    [[nodiscard]] Point2 P_s(double tau) const { return anchor(Leaf::Stable, AnchorSection::L0, tau).point; }
    [[nodiscard]] Point2 P_u(double tau) const { return anchor(Leaf::Unstable, AnchorSection::L0, tau).point; }
    [[nodiscard]] Point2 pi_s(double tau) const { return anchor(Leaf::Stable, AnchorSection::Transversal, tau).point; }
    [[nodiscard]] Point2 pi_u(double tau) const { return anchor(Leaf::Unstable, AnchorSection::Transversal, tau).point; }

    /// Full result; cached per (leaf, section, τ), and τ-independent when the
    /// system is autonomous. Throws NotConverged, WrongSection, MissedTransversal.
    [[nodiscard]] AnchorPoint anchor(Leaf leaf, AnchorSection section, double tau) const;
    /// Unextrapolated shooting with a given η; returns the orbit from the
    /// launch point to the section hit at time τ (the hit is its end point).
    [[nodiscard]] Trajectory shoot(Leaf leaf, AnchorSection section, double tau, double eta) const;
    /// A numerically stable realization of the leaf orbit through the anchor:
    /// the shooting trajectory at η₀/4, which runs from the launch time to τ.
    [[nodiscard]] std::shared_ptr<const Trajectory> leaf_orbit(Leaf leaf, AnchorSection section, double tau) const;
    /// x(t, τ; anchor) evaluated from the leaf orbit, with the linear
    /// asymptotics beyond the launch point.
    [[nodiscard]] Point2 leaf_point(Leaf leaf, AnchorSection section, double tau, double t) const;

    [[nodiscard]] const PiecewiseSystem& system() const { return sys_; }
    [[nodiscard]] const Homoclinic& homoclinic() const { return gamma_; }
    [[nodiscard]] const SaddleSpectrum& spectrum() const { return gamma_.spectrum(); }
    [[nodiscard]] const Transversal& S_plus() const { return s_plus_; }
    [[nodiscard]] const Transversal& S_minus() const { return s_minus_; }
    [[nodiscard]] double L0_radius() const { return L0_radius_; }
    [[nodiscard]] double horizon() const { return horizon_; }
    [[nodiscard]] double log_varpi() const { return log_varpi_; }
    [[nodiscard]] const AnchorOptions& options() const { return opt_; }
    /// Whether x lies on L⁰ = Ω⁰ ∩ B(γ(0), radius).
    [[nodiscard]] bool on_L0(const Point2& x) const;

private:
    PiecewiseSystem sys_;
    Homoclinic gamma_;
    double log_varpi_;
    AnchorOptions opt_;
    Transversal s_plus_;
    Transversal s_minus_;
    double L0_radius_ = 0.0;
    double horizon_ = 0.0;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

/// max over τ of max(‖P_s(τ) − γ(0)‖, ‖P_u(τ) − γ(0)‖)/ε (0 when ε = 0).
double estimate_cbar(const LeafAnchors& anchors, const std::vector<double>& taus);

/// sup over t ∈ [τ − window, τ] of ‖x(t, τ; P_u(τ)) − γ(t − τ)‖ (Unstable) or
/// over [τ, τ + window] with P_s (Stable).
double shadowing_deviation(const LeafAnchors& anchors, Leaf leaf, double tau, double window = 20.0);

}  // namespace homloop
