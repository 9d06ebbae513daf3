#pragma once

/// Arclength chart on the switching curve Ω⁰ and the directed distance
/// 𝒟(Q, P) = ℓ(P) − ℓ(Q), with ℓ increasing from the origin towards γ(0).

#include "homloop/homoclinic.hpp"
#include "homloop/rk.hpp"
#include "homloop/system.hpp"

#include <vector>

namespace homloop {

class DirectedChart {
public:
    /// Traces Ω⁰ from the origin in both directions by integrating the unit
    /// tangent field with respect to arclength, over [−s_back, s_ahead].
    /// Defaults: s_ahead = 2·diameter(Γ), s_back = diameter(Γ); ℓ increases
    /// along the inward tangent at the origin.
    DirectedChart(const PiecewiseSystem& sys, const Homoclinic& gamma, double s_ahead = 0.0, double s_back = 0.0);
    /// Chart oriented so that ℓ increases along `positive` at the origin.
    DirectedChart(const PiecewiseSystem& sys, const Point2& positive, double s_ahead, double s_back);

    /// Arclength coordinate ℓ(Q); throws OffSection if Q is not on Ω⁰ within
    /// tolerance or outside the traced range.
    [[nodiscard]] double arclength(const Point2& Q) const;
    /// Point of Ω⁰ with ℓ = s; throws OutOfChart outside the traced range.
    [[nodiscard]] Point2 point(double s) const;
    /// Unit tangent at ℓ = s in the direction of increasing ℓ.
    [[nodiscard]] Point2 tangent(double s) const;
    /// 𝒟(Q, P) = ℓ(P) − ℓ(Q).
    [[nodiscard]] double directed_distance(const Point2& Q, const Point2& P) const;
    /// The point Q with 𝒟(Q, anchor) = d, i.e. at distance d from the anchor
    /// towards the origin (d > 0 gives the inner side).
    [[nodiscard]] Point2 point_at_distance(const Point2& anchor, double d) const;
    [[nodiscard]] double s_min() const { return s_min_; }
    [[nodiscard]] double s_max() const { return s_max_; }
    /// Tolerance on |G| for section membership, relative to ‖∇G‖(1+‖x‖).
    double section_tol = 1e-9;

private:
    [[nodiscard]] Point2 project(const Point2& x) const;
    [[nodiscard]] Point2 unit_tangent(const Point2& x) const;

    PiecewiseSystem sys_;
    double orient_ = 1.0;
    double s_min_ = 0.0;
    double s_max_ = 0.0;
    std::vector<rk::DenseStep<2>> ahead_;
    std::vector<rk::DenseStep<2>> back_;
};

}  // namespace homloop
