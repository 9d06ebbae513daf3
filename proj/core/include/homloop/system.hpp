#pragma once

/// Planar piecewise-smooth systems
///
///     x' = f^±(x) + ε g(t, x, ε),   x ∈ Ω^± = {±G(x) > 0},
///
/// with the switching curve Ω⁰ = {G = 0} through a saddle at the origin.
/// A PiecewiseSystem is immutable and cheap to copy (its callables are shared).

#include "homloop/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homloop {

using VectorField = std::function<Point2(const Point2&)>;
using Jacobian = std::function<Mat2(const Point2&)>;
using TimeField = std::function<Point2(double t, const Point2& x, double eps)>;
using TimeJacobian = std::function<Mat2(double t, const Point2& x, double eps)>;
using ScalarField = std::function<double(const Point2&)>;
using Curve = std::function<Point2(double)>;

/// A perturbation g(t, x, ε) with optional analytic state Jacobian.
struct Perturbation {
    std::string label = "zero";
    TimeField g;               ///< empty means g ≡ 0
    TimeJacobian g_jac;        ///< empty means finite differences
    std::optional<double> period;  ///< time period when g is periodic
    bool autonomous = true;    ///< g independent of t
};

/// Everything needed to build a PiecewiseSystem. Optional members left empty
/// are filled with finite-difference fallbacks.
struct SystemDefinition {
    std::string name = "custom";
    VectorField f_plus;
    VectorField f_minus;
    Jacobian jac_plus;
    Jacobian jac_minus;
    ScalarField G;
    VectorField grad_G;
    Perturbation perturbation;
    double epsilon = 0.0;
    double holder_alpha = 1.0;  ///< Hölder exponent of the derivatives
    double r_order = 2.0;       ///< smoothness order r > 1
    /// Analytic unperturbed homoclinic t ↦ γ(t) and its derivative, if known.
    Curve gamma;
    Curve gamma_dot;
};

class PiecewiseSystem {
public:
    /// Builds the system and checks its structural invariants: G(0) = 0,
    /// ∇G(0) ≠ 0, f^±(0) = 0, g(t, 0, ε) = 0 on sampled t, and agreement of
    /// supplied Jacobians with finite differences. Throws InvalidSystem.
    explicit PiecewiseSystem(SystemDefinition def);

    [[nodiscard]] const std::string& name() const { return def_->name; }
    [[nodiscard]] double epsilon() const { return def_->epsilon; }
    [[nodiscard]] double holder_alpha() const { return def_->holder_alpha; }
    [[nodiscard]] double r_order() const { return def_->r_order; }
    [[nodiscard]] const Perturbation& perturbation() const { return def_->perturbation; }
    [[nodiscard]] bool autonomous() const { return def_->epsilon == 0.0 || def_->perturbation.autonomous; }
    [[nodiscard]] std::optional<double> period() const { return def_->perturbation.period; }
    [[nodiscard]] const SystemDefinition& definition() const { return *def_; }

    /// Unperturbed piece f^±(x).
    [[nodiscard]] Point2 f(Side side, const Point2& x) const;
    [[nodiscard]] Mat2 jac(Side side, const Point2& x) const;
    /// Perturbation g(t, x, ε) at the system's ε (zero if none).
    [[nodiscard]] Point2 g(double t, const Point2& x) const;
    [[nodiscard]] Mat2 g_jac(double t, const Point2& x) const;
    /// Full field F^± = f^± + ε g and its state Jacobian.
    [[nodiscard]] Point2 field(Side side, double t, const Point2& x) const;
    [[nodiscard]] Mat2 field_jac(Side side, double t, const Point2& x) const;

    [[nodiscard]] double G(const Point2& x) const { return def_->G(x); }
    [[nodiscard]] Point2 grad_G(const Point2& x) const { return def_->grad_G(x); }
    /// Side by the sign of G; points with G == 0 are reported as Plus.
    [[nodiscard]] Side side_of(const Point2& x) const { return G(x) >= 0.0 ? Side::Plus : Side::Minus; }

    [[nodiscard]] bool has_analytic_homoclinic() const { return static_cast<bool>(def_->gamma); }

    /// Same system with a different ε.
    [[nodiscard]] PiecewiseSystem with_epsilon(double eps) const;
    /// Same unperturbed system with a different perturbation and ε.
    [[nodiscard]] PiecewiseSystem with_perturbation(Perturbation p, double eps) const;
    /// Time-reversed system: f'^± = −f^∓, G' = −G, g'(t,x) = −g(−t,x),
    /// γ'(t) = γ(−t). Orbits of the result are orbits of this system run
    /// backwards, and its sides are relabelled so that the homoclinic again
    /// leaves through Ω'⁻ and returns through Ω'⁺.
    [[nodiscard]] PiecewiseSystem reversed() const;

private:
    std::shared_ptr<const SystemDefinition> def_;
};

/// Structural checks of a system, recomputed on demand.
struct SystemValidation {
    bool G_vanishes_at_origin = false;
    bool grad_G_nonzero = false;
    bool f_plus_vanishes = false;
    bool f_minus_vanishes = false;
    bool g_vanishes_at_origin = false;  ///< assumption G on sampled t
    double jac_plus_residual = 0.0;     ///< max |analytic − finite difference|
    double jac_minus_residual = 0.0;
    [[nodiscard]] bool ok() const;
};

SystemValidation validate(const SystemDefinition& def);

/// Fourth-order central-difference Jacobian with step cbrt(eps_mach)(1+‖x‖).
Mat2 fd_jacobian(const VectorField& f, const Point2& x);
/// Fourth-order central-difference gradient.
Point2 fd_gradient(const ScalarField& G, const Point2& x);

/// Autonomous system x' = f^± + c·s·rot90(f^±), with no perturbation.
/// With s = ±1 the orientation sign of the perpendicular field, c = ±ε𝒦 gives
/// the rotated fields used for the barrier curves.
PiecewiseSystem rotated_system(const PiecewiseSystem& sys, double coefficient, int orientation);

namespace perturbations {
/// g ≡ 0.
Perturbation zero();
/// g = (0, −c·x2): linear damping, autonomous.
Perturbation damping(double c = 1.0);
/// g = (0, x1·cos(ω t)), 2π/ω periodic.
Perturbation x_cos(double omega = 1.0);
}  // namespace perturbations

namespace builtin {
/// f^± = (x2, x1 − x1²), G = −x2.
PiecewiseSystem duffing(Perturbation p = perturbations::zero(), double eps = 0.0);
/// f^+ as Duffing, f^− = 2·Duffing (discontinuous on Ω⁰).
PiecewiseSystem duffing_rescaled(Perturbation p = perturbations::zero(), double eps = 0.0);
/// A discontinuous system sharing Duffing's homoclinic whose Ω⁺ piece has its
/// unstable eigenvector rotated inside the loop, so both stable eigenvectors
/// lie on the same side of the unstable rays (sliding near the origin).
PiecewiseSystem sliding_demo(Perturbation p = perturbations::zero(), double eps = 0.0);
/// Smooth one-parameter family f = (x2, x1 − x1² + x2(a + b·x1)), G = −x2,
/// with no analytic homoclinic (for a ≠ 0 or b ≠ 0 the loop must be shot).
PiecewiseSystem dulac_family(double a, double b);
/// Look up a built-in by name ("duffing", "duffing-rescaled", "sliding-demo").
PiecewiseSystem by_name(const std::string& name, Perturbation p = perturbations::zero(), double eps = 0.0);
/// Names accepted by by_name.
std::vector<std::string> names();
/// Analytic Duffing homoclinic γ(t) = (3/2 sech²(t/2), −3/2 sech²(t/2) tanh(t/2)).
Point2 duffing_gamma(double t);
Point2 duffing_gamma_dot(double t);
}  // namespace builtin

}  // namespace homloop
