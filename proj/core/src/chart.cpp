#include "homloop/chart.hpp"

#include "homloop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homloop {

namespace {

using Steps = std::vector<rk::DenseStep<2>>;

Point2 to_point(const rk::Vec<2>& v) { return {v[0], v[1]}; }

/// Step of a monotone (in |s|) table containing arclength s.
const rk::DenseStep<2>& locate(const Steps& steps, double s) {
    const double a = std::abs(s);
    auto it = std::lower_bound(steps.begin(), steps.end(), a,
                               [](const rk::DenseStep<2>& st, double v) { return std::abs(st.t1()) < v; });
    if (it == steps.end()) --it;
    return *it;
}

}  // namespace

DirectedChart::DirectedChart(const PiecewiseSystem& sys, const Homoclinic& gamma, double s_ahead, double s_back)
    : DirectedChart(sys, gamma.inward_tangent(), s_ahead > 0.0 ? s_ahead : 2.0 * gamma.diameter(),
                    s_back > 0.0 ? s_back : gamma.diameter()) {}

DirectedChart::DirectedChart(const PiecewiseSystem& sys, const Point2& positive, double s_ahead, double s_back)
    : sys_(sys) {
    if (!(s_ahead > 0.0) || !(s_back > 0.0)) throw Error(ErrorCode::DegenerateInput, "chart extents must be positive");
    s_max_ = s_ahead;
    s_min_ = -s_back;
    const double diam = std::max(s_ahead, s_back) / 2.0;
    const Point2 t0 = rot90(sys.grad_G(Point2{}));
    orient_ = dot(t0, positive) >= 0.0 ? 1.0 : -1.0;

    auto rhs = [this](double, const rk::Vec<2>& y) {
        const Point2 t = unit_tangent({y[0], y[1]});
        return rk::Vec<2>{t.x1, t.x2};
    };
    const double h_max = 0.05 * diam;
    rk::integrate_smooth<2>(rhs, 0.0, rk::Vec<2>{0.0, 0.0}, s_max_, 1e-13, 1e-15, h_max,
                            [this](const rk::DenseStep<2>& d) { ahead_.push_back(d); });
    rk::integrate_smooth<2>(rhs, 0.0, rk::Vec<2>{0.0, 0.0}, s_min_, 1e-13, 1e-15, h_max,
                            [this](const rk::DenseStep<2>& d) { back_.push_back(d); });
}

Point2 DirectedChart::unit_tangent(const Point2& x) const {
    const Point2 n = sys_.grad_G(x);
    const double nn = norm(n);
    if (!(nn > 0.0)) throw Error(ErrorCode::OutOfChart, "switching curve is singular (grad G vanishes)");
    return orient_ * rot90(n) / nn;
}

Point2 DirectedChart::project(const Point2& x) const {
    Point2 y = x;
    for (int k = 0; k < 4; ++k) {
        const Point2 n = sys_.grad_G(y);
        const double g = sys_.G(y);
        if (g == 0.0) break;
        y -= (g / dot(n, n)) * n;
    }
    return y;
}

Point2 DirectedChart::point(double s) const {
    if (s < s_min_ || s > s_max_) {
        std::ostringstream msg;
        msg << "arclength " << s << " outside the traced chart [" << s_min_ << ", " << s_max_ << "]";
        throw Error(ErrorCode::OutOfChart, msg.str());
    }
    if (s == 0.0) return {};
    const Steps& steps = s > 0.0 ? ahead_ : back_;
    return project(to_point(locate(steps, s).at(s)));
}

Point2 DirectedChart::tangent(double s) const { return unit_tangent(point(s)); }

double DirectedChart::arclength(const Point2& Q) const {
    const double scale = norm(sys_.grad_G(Q)) * (1.0 + norm(Q));
    if (std::abs(sys_.G(Q)) > section_tol * scale) {
        std::ostringstream msg;
        msg << "point (" << Q.x1 << ", " << Q.x2 << ") is not on the switching curve (G = " << sys_.G(Q) << ")";
        throw Error(ErrorCode::OffSection, msg.str());
    }
    // Coarse search over step end points, then Newton on the tangent projection.
    double best_s = 0.0;
    double best = norm(Q);
    for (const Steps* steps : {&ahead_, &back_}) {
        for (const auto& st : *steps) {
            for (double th : {0.25, 0.5, 0.75, 1.0}) {
                const double s = st.t0 + th * st.h;
                const double dd = norm(to_point(st.at(s)) - Q);
                if (dd < best) {
                    best = dd;
                    best_s = s;
                }
            }
        }
    }
    double s = best_s;
    for (int k = 0; k < 20; ++k) {
        s = std::clamp(s, s_min_, s_max_);
        const Point2 x = point(s);
        const double ds = dot(Q - x, unit_tangent(x));
        s += ds;
        if (std::abs(ds) < 1e-15 * (1.0 + std::abs(s))) break;
    }
    if (s < s_min_ || s > s_max_ || norm(point(s) - Q) > section_tol * (1.0 + norm(Q)) * 10.0) {
        throw Error(ErrorCode::OffSection, "point lies outside the traced part of the switching curve");
    }
    return s;
}

double DirectedChart::directed_distance(const Point2& Q, const Point2& P) const { return arclength(P) - arclength(Q); }

Point2 DirectedChart::point_at_distance(const Point2& anchor, double d) const {
    return point(arclength(anchor) - d);
}

}  // namespace homloop
