#pragma once

/// The unperturbed homoclinic loop γ(t) (analytic when the system provides
/// it, otherwise shot numerically) together with the geometry of Γ: the
/// inside test for E^in, distances to Γ, and its decay constant.

#include "homloop/flow.hpp"
#include "homloop/spectrum.hpp"
#include "homloop/system.hpp"

#include <memory>
#include <vector>

namespace homloop {

struct HomoclinicOptions {
    double eta = 1e-7;              ///< launch offset along the eigenvectors when shooting
    double horizon = 60.0;          ///< max integration time of each branch
    double match_tol = 1e-9;        ///< maximal mismatch of the two branches on Ω⁰
    double polyline_spacing = 1e-3; ///< arclength spacing of the sampled loop
    Tolerances tol{};
};

/// Outcome of shooting both branches to Ω⁰.
struct ShootingResult {
    Point2 unstable_hit{};  ///< first Ω⁰ crossing of the branch leaving along v_u^−
    Point2 stable_hit{};    ///< first Ω⁰ crossing (backwards) of the branch arriving along v_s^+
    double mismatch = 0.0;  ///< (unstable_hit − stable_hit) · (unit tangent of Ω⁰ towards E^in side)
    std::shared_ptr<const Trajectory> unstable;  ///< launch → crossing
    std::shared_ptr<const Trajectory> stable;    ///< launch → crossing (backwards)
};

/// Integrates the ε = 0 unstable branch from η·v_u^− forward and the stable
/// branch from η·v_s^+ backward to their first Ω⁰ crossings. Throws
/// NoConnection if a branch never reaches Ω⁰ within the horizon.
ShootingResult shoot_branches(const PiecewiseSystem& sys, const SaddleSpectrum& spec, const HomoclinicOptions& opt = {});

class Homoclinic {
public:
    /// γ(t) on ℝ; beyond the tabulated span the linear asymptotics are used.
    [[nodiscard]] Point2 gamma(double t) const;
    [[nodiscard]] Point2 gamma_dot(double t) const;
    [[nodiscard]] Point2 gamma0() const { return gamma(0.0); }
    [[nodiscard]] bool analytic() const;
    /// Constant c₀* with ‖γ(t)‖ ≤ (c₀*/4) e^{λ_u^− t} (t ≤ 0) and
    /// ‖γ(t)‖ ≤ (c₀*/4) e^{λ_s^+ t} (t ≥ 0), measured on a grid.
    [[nodiscard]] double decay_c0() const;
    /// Closed polyline sampling of Γ (first point is the origin).
    [[nodiscard]] const std::vector<Point2>& polyline() const;
    /// Membership in the open region E^in enclosed by Γ.
    [[nodiscard]] bool inside(const Point2& x) const;
    /// Euclidean distance from x to Γ.
    [[nodiscard]] double distance(const Point2& x) const;
    [[nodiscard]] double diameter() const;
    /// Limits of γ̇/‖γ̇‖ at t → ∓∞.
    [[nodiscard]] OrientationHint orientation() const;
    /// Unit tangent of Ω⁰ at the origin pointing into E^in.
    [[nodiscard]] Point2 inward_tangent() const;
    /// Oriented saddle spectrum of the ε = 0 system.
    [[nodiscard]] const SaddleSpectrum& spectrum() const;
    /// The ε = 0 system the loop belongs to.
    [[nodiscard]] const PiecewiseSystem& system() const;
    /// Mismatch of the two shot branches (0 for analytic loops).
    [[nodiscard]] double shooting_mismatch() const;

    struct Data;
    explicit Homoclinic(std::shared_ptr<const Data> d) : d_(std::move(d)) {}

private:
    std::shared_ptr<const Data> d_;
};

/// Builds Γ for the ε = 0 system. Analytic curves are used when provided;
/// otherwise both branches are shot and must match within match_tol
/// (NoConnection otherwise). Verifies assumption K at γ(0).
Homoclinic homoclinic_orbit(const PiecewiseSystem& sys, const HomoclinicOptions& opt = {});

}  // namespace homloop
