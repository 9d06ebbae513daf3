#include "homloop/loopmap.hpp"

#include "homloop/assumptions.hpp"
#include "homloop/errors.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace homloop {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;

struct BarrierSet::Regions {
    BgPolygon k_fwd;
    BgPolygon k_bwd;
};

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

BgPoint to_bg(const Point2& p) { return {p.x1, p.x2}; }

std::string fmt_point(const Point2& p) {
    std::ostringstream s;
    s.precision(10);
    s << "(" << p.x1 << ", " << p.x2 << ")";
    return s.str();
}

/// Points of Ω⁰ at Euclidean distance β from γ(0): inside (sgn = +1, lower
/// arclength) or outside (sgn = −1).
Point2 point_at_euclidean_distance(const DirectedChart& chart, const Point2& g0, double beta, int sgn) {
    const double l0 = chart.arclength(g0);
    const double reach = sgn > 0 ? std::min(4.0 * beta, l0 - chart.s_min()) : std::min(4.0 * beta, chart.s_max() - l0);
    auto fn = [&](double s) { return norm(chart.point(l0 - sgn * s) - g0) - beta; };
    const double f_hi = fn(reach);
    if (!(f_hi > 0.0)) throw Error(ErrorCode::OutOfChart, "no point of the section at distance beta from gamma(0)");
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(fn, 0.0, reach, -beta, f_hi,
                                                     boost::math::tools::eps_tolerance<double>(52), it);
    return chart.point(l0 - sgn * 0.5 * (r.first + r.second));
}

/// Uniform time samples of a trajectory in orbit order (start → end).
std::vector<Point2> orbit_points(const Trajectory& tr, int n) {
    std::vector<Point2> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = tr.t_start + (tr.t_end - tr.t_start) * k / (n - 1);
        out.push_back(k + 1 == n ? tr.end : tr.at(t));
    }
    return out;
}

StopSet ray_stop(const Point2& ray, double t_end, int id) {
    StopSet s;
    s.t_end = t_end;
    SectionStop sec;
    sec.id = id;
    sec.fn = [ray](const Point2& x) { return wedge(ray, x); };
    sec.accept = [ray](const Point2& x) { return dot(ray, x) > 0.0; };
    s.sections.push_back(sec);
    // Reaching Ω⁰ first means the curve left its half plane.
    s.switch_stop = SwitchStop{-2, 1, {}};
    return s;
}

/// In-curve: orbit from P with two Ω⁰ crossings (L^in, then L⁰).
BarrierCurve in_curve(const std::string& name, const PiecewiseSystem& field_sys, int field, const Point2& P, Direction dir,
                      const DirectedChart& chart, double l0, const LeafAnchors& anchors, const BarrierOptions& opt) {
    StopSet stops;
    stops.t_end = direction_sign(dir) * opt.horizon;
    stops.switch_stop = SwitchStop{-1, 2, {}};
    const Trajectory tr = integrate(field_sys, 0.0, P, dir, stops, opt.tol);
    const auto cr = tr.interior_crossings();
    if (tr.termination != Termination::HitTarget || cr.size() < 2) {
        throw Error(ErrorCode::LeftRegion, name + ": the barrier orbit does not return to the section");
    }
    const double lq = chart.arclength(cr[0].point);
    if (!(lq > 0.0 && lq < l0)) {
        throw Error(ErrorCode::LeftRegion, name + ": first section crossing " + fmt_point(cr[0].point) + " is not on L^in");
    }
    if (!anchors.on_L0(cr[1].point)) {
        throw Error(ErrorCode::LeftRegion, name + ": return point " + fmt_point(cr[1].point) + " is not on L0");
    }
    BarrierCurve c;
    c.name = name;
    c.field = field;
    c.P = P;
    c.Q = cr[0].point;
    c.R = cr[1].point;
    c.points = orbit_points(tr, 2 * opt.polyline_points);
    return c;
}

/// Out-curve: backward from P to L^{−,out} and forward to L^{+,out}.
BarrierCurve out_curve(const std::string& name, const PiecewiseSystem& field_sys, int field, const Point2& P,
                       const Point2& ray_minus, const Point2& ray_plus, const BarrierOptions& opt) {
    const Trajectory back = integrate(field_sys, 0.0, P, Direction::Bwd, ray_stop(ray_minus, -opt.horizon, 10), opt.tol);
    const Trajectory fwd = integrate(field_sys, 0.0, P, Direction::Fwd, ray_stop(ray_plus, opt.horizon, 11), opt.tol);
    if (back.termination != Termination::HitTarget || back.target_id != 10) {
        throw Error(ErrorCode::LeftRegion, name + ": backward branch misses L^{-,out}");
    }
    if (fwd.termination != Termination::HitTarget || fwd.target_id != 11) {
        throw Error(ErrorCode::LeftRegion, name + ": forward branch misses L^{+,out}");
    }
    BarrierCurve c;
    c.name = name;
    c.field = field;
    c.P = P;
    c.O = back.end;
    c.Q = fwd.end;
    std::vector<Point2> b = orbit_points(back, opt.polyline_points);
    std::reverse(b.begin(), b.end());
    const std::vector<Point2> f = orbit_points(fwd, opt.polyline_points);
    c.points = std::move(b);
    c.points.insert(c.points.end(), f.begin() + 1, f.end());
    return c;
}

BandCheck band(const std::string& name, double value, double beta, double sigma, double mu) {
    return {name, value, std::pow(beta, sigma + mu), std::pow(beta, sigma - mu)};
}

BandCheck exact(const std::string& name, double value, double target) {
    return {name, value, target * (1.0 - 1e-9), target * (1.0 + 1e-9)};
}

/// Required sign of F·n_in (n_in = s·rot90(f_gen), pointing into E^in).
FlowDirectionCheck flow_check(const BarrierCurve& c, int required, const PiecewiseSystem& sys,
                              const PiecewiseSystem& field_sys, int orientation, const BarrierOptions& opt) {
    FlowDirectionCheck r;
    r.curve = c.name;
    r.worst = std::numeric_limits<double>::infinity();
    const std::size_t n = c.points.size();
    std::vector<double> times;
    if (sys.autonomous()) {
        times.push_back(0.0);
    } else {
        const double period = sys.period().value_or(8.0 * kPi);
        for (int k = 0; k < opt.time_phases; ++k) times.push_back(period * k / opt.time_phases);
    }
    for (int j = 0; j < opt.flow_samples; ++j) {
        std::size_t idx = (static_cast<std::size_t>(j) + 1) * (n - 1) / (static_cast<std::size_t>(opt.flow_samples) + 1);
        // Avoid sampling exactly on Ω⁰, where the side is ambiguous.
        while (std::abs(sys.G(c.points[idx])) < 1e-12 && idx + 2 < n) ++idx;
        const Point2 x = c.points[idx];
        const Side side = sys.side_of(x);
        const Point2 n_in = normalized(orientation * rot90(field_sys.field(side, 0.0, x)));
        for (double t : times) {
            const Point2 F = sys.field(side, t, x);
            const double v = required * dot(F, n_in) / norm(F);
            r.worst = std::min(r.worst, v);
            const bool bad = sys.epsilon() > 0.0 ? !(v > 0.0) : !(v > -opt.tangency_tol);
            if (bad) {
                ++r.violations;
                break;
            }
        }
        ++r.samples;
    }
    return r;
}

bool segments_meet(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    if (std::max(a.x1, b.x1) < std::min(c.x1, d.x1) || std::max(c.x1, d.x1) < std::min(a.x1, b.x1) ||
        std::max(a.x2, b.x2) < std::min(c.x2, d.x2) || std::max(c.x2, d.x2) < std::min(a.x2, b.x2)) {
        return false;
    }
    const double o1 = wedge(b - a, c - a), o2 = wedge(b - a, d - a);
    const double o3 = wedge(d - c, a - c), o4 = wedge(d - c, b - c);
    return (o1 * o2 <= 0.0) && (o3 * o4 <= 0.0);
}

/// No two non-adjacent segments of the polyline meet; for a curve that
/// closes up (ε = 0 in-curves) the first and last segments may touch.
bool simple_curve(const BarrierCurve& c, double tol) {
    const auto& p = c.points;
    const std::size_t n = p.size();
    const bool closes = norm(p.front() - p.back()) <= tol;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 2; j + 1 < n; ++j) {
            if (closes && i == 0 && j + 2 == n) continue;
            if (segments_meet(p[i], p[i + 1], p[j], p[j + 1])) return false;
        }
    }
    return true;
}

bool curves_meet(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        for (std::size_t j = 0; j + 1 < b.size(); ++j)
            if (segments_meet(a[i], a[i + 1], b[j], b[j + 1])) return true;
    return false;
}

/// Ring of K: out-curve closed through the saddle, or in-curve closed along Ω⁰.
BgPolygon region(const BarrierCurve& out, const BarrierCurve& in, const DirectedChart& chart) {
    BgPolygon poly;
    for (const auto& p : out.points) bg::append(poly.outer(), to_bg(p));
    bg::append(poly.outer(), BgPoint(0.0, 0.0));
    bg::append(poly.outer(), to_bg(out.points.front()));
    poly.inners().resize(1);
    auto& hole = poly.inners()[0];
    for (const auto& p : in.points) bg::append(hole, to_bg(p));
    const double lr = chart.arclength(*in.R);
    const double lp = chart.arclength(in.P);
    for (int k = 1; k < 32; ++k) bg::append(hole, to_bg(chart.point(lr + (lp - lr) * k / 32.0)));
    bg::append(hole, to_bg(in.points.front()));
    bg::correct(poly);
    return poly;
}

double max_distance(const Homoclinic& g, const BgPolygon& poly) {
    double m = 0.0;
    for (const auto& p : poly.outer()) m = std::max(m, g.distance({p.x(), p.y()}));
    for (const auto& ring : poly.inners())
        for (const auto& p : ring) m = std::max(m, g.distance({p.x(), p.y()}));
    return m;
}

}  // namespace

bool BarrierSet::bands_ok() const {
    return std::all_of(bands.begin(), bands.end(), [](const BandCheck& b) { return b.ok(); });
}

bool BarrierSet::flow_ok() const {
    return std::all_of(flow.begin(), flow.end(), [](const FlowDirectionCheck& f) { return f.violations == 0; });
}

bool BarrierSet::geometry_ok() const {
    return simple && disjoint && max_distance_fwd <= containment_radius && max_distance_bwd <= containment_radius &&
           min_distance_to_gamma > 0.0;
}

bool BarrierSet::in_K_fwd(const Point2& x) const { return regions && bg::covered_by(to_bg(x), regions->k_fwd); }
bool BarrierSet::in_K_bwd(const Point2& x) const { return regions && bg::covered_by(to_bg(x), regions->k_bwd); }

namespace {
bool closure_inside(const Homoclinic& g, const Point2& x) { return g.inside(x) || g.distance(x) < 1e-12; }
}  // namespace

bool BarrierSet::in_K_fwd_A(const Point2& x) const { return in_K_fwd(x) && closure_inside(*gamma, x); }
bool BarrierSet::in_K_fwd_B(const Point2& x) const { return in_K_fwd(x) && !closure_inside(*gamma, x); }
bool BarrierSet::in_K_bwd_A(const Point2& x) const { return in_K_bwd(x) && closure_inside(*gamma, x); }
bool BarrierSet::in_K_bwd_B(const Point2& x) const { return in_K_bwd(x) && !closure_inside(*gamma, x); }

BarrierSet build_barriers(const PiecewiseSystem& sys, double beta, double mu, const LeafAnchors& anchors, double kappa,
                          const BarrierOptions& opt) {
    if (!(beta > 0.0) || !(beta < anchors.L0_radius())) {
        throw Error(ErrorCode::DegenerateInput, "beta must lie in (0, L0 radius)");
    }
    if (!(mu > 0.0)) throw Error(ErrorCode::DegenerateInput, "mu must be positive");
    const Homoclinic& gamma = anchors.homoclinic();
    const SaddleSpectrum& spec = gamma.spectrum();
    const RateConstants rates = rate_constants(spec);
    const DirectedChart chart(sys, gamma);

    BarrierSet b;
    b.beta = beta;
    b.mu = mu;
    b.epsilon = sys.epsilon();
    b.kappa = kappa > 0.0 ? kappa : (sys.epsilon() > 0.0 ? kappa_bound(sys, gamma) : 0.0);
    b.orientation = perp_orientation(sys, gamma);
    b.gamma0 = gamma.gamma0();
    b.gamma = std::make_shared<const Homoclinic>(gamma);
    const double l0 = chart.arclength(b.gamma0);
    b.w = -chart.tangent(l0);

    const double c = b.epsilon * b.kappa;
    const PiecewiseSystem sys_a = rotated_system(sys, c, b.orientation);
    const PiecewiseSystem sys_b = rotated_system(sys, -c, b.orientation);

    // ζ-points: first section hits of the leaves of the rotated fields.
    const auto zeta = [&](const PiecewiseSystem& s, Point2& zu, Point2& zs) {
        const SaddleSpectrum sp = compute_spectrum(s, gamma.orientation());
        const ShootingResult r = shoot_branches(s, sp);
        zu = r.unstable_hit;
        zs = r.stable_hit;
    };
    zeta(sys_a, b.zeta_u_a, b.zeta_s_a);
    zeta(sys_b, b.zeta_u_b, b.zeta_s_b);

    const Point2 p_in = point_at_euclidean_distance(chart, b.gamma0, beta, +1);
    const Point2 p_out = point_at_euclidean_distance(chart, b.gamma0, beta, -1);
    b.D_bar_fwd_in = norm(p_in - b.zeta_s_a);
    b.D_bar_fwd_out = norm(p_out - b.zeta_u_b);
    b.D_bar_bwd_in = norm(p_in - b.zeta_u_b);
    b.D_bar_bwd_out = norm(p_out - b.zeta_s_a);

    const Point2 ray_minus = spec.v_u_minus + spec.v_s_minus;
    const Point2 ray_plus = spec.v_u_plus + spec.v_s_plus;
    b.z_fwd_in = in_curve("z_fwd_in", sys_a, +1, p_in, Direction::Fwd, chart, l0, anchors, opt);
    b.z_fwd_out = out_curve("z_fwd_out", sys_b, -1, p_out, ray_minus, ray_plus, opt);
    b.z_bwd_in = in_curve("z_bwd_in", sys_b, -1, p_in, Direction::Bwd, chart, l0, anchors, opt);
    b.z_bwd_out = out_curve("z_bwd_out", sys_a, +1, p_out, ray_minus, ray_plus, opt);

    const Point2 g0 = b.gamma0;
    b.bands = {
        exact("P_fwd_in", norm(b.z_fwd_in.P - g0), beta),
        exact("P_fwd_out", norm(b.z_fwd_out.P - g0), beta),
        band("Q_fwd_in", norm(b.z_fwd_in.Q), beta, rates.sigma_fwd_plus, mu),
        band("Q_fwd_out", norm(b.z_fwd_out.Q), beta, rates.sigma_fwd_plus, mu),
        band("R_fwd_in", norm(*b.z_fwd_in.R - g0), beta, rates.sigma_fwd, mu),
        band("O_fwd_out", norm(*b.z_fwd_out.O), beta, rates.sigma_bwd_minus, mu),
        exact("P_bwd_in", norm(b.z_bwd_in.P - g0), beta),
        exact("P_bwd_out", norm(b.z_bwd_out.P - g0), beta),
        band("Q_bwd_in", norm(b.z_bwd_in.Q), beta, rates.sigma_bwd_minus, mu),
        band("Q_bwd_out", norm(b.z_bwd_out.Q), beta, rates.sigma_bwd_minus, mu),
        band("R_bwd_in", norm(*b.z_bwd_in.R - g0), beta, rates.sigma_bwd, mu),
        band("O_bwd_out", norm(*b.z_bwd_out.O), beta, rates.sigma_bwd_minus, mu),
    };

    // F must point into K^fwd across the forward curves and out of K^bwd
    // across the backward curves.
    b.flow = {
        flow_check(b.z_fwd_in, -1, sys, sys_a, b.orientation, opt),
        flow_check(b.z_fwd_out, +1, sys, sys_b, b.orientation, opt),
        flow_check(b.z_bwd_in, +1, sys, sys_b, b.orientation, opt),
        flow_check(b.z_bwd_out, -1, sys, sys_a, b.orientation, opt),
    };

    const double tol = 1e-6 * beta;
    b.simple = simple_curve(b.z_fwd_in, tol) && simple_curve(b.z_fwd_out, tol) && simple_curve(b.z_bwd_in, tol) &&
               simple_curve(b.z_bwd_out, tol);
    b.disjoint = !curves_meet(b.z_fwd_in.points, b.z_fwd_out.points) && !curves_meet(b.z_bwd_in.points, b.z_bwd_out.points);

    auto regions = std::make_shared<BarrierSet::Regions>();
    regions->k_fwd = region(b.z_fwd_out, b.z_fwd_in, chart);
    regions->k_bwd = region(b.z_bwd_out, b.z_bwd_in, chart);
    b.regions = regions;

    b.containment_radius = std::pow(beta, rates.sigma_lo - mu);
    b.max_distance_fwd = max_distance(gamma, regions->k_fwd);
    b.max_distance_bwd = max_distance(gamma, regions->k_bwd);
    b.min_distance_to_gamma = std::numeric_limits<double>::infinity();
    for (const BarrierCurve* cv : {&b.z_fwd_in, &b.z_fwd_out, &b.z_bwd_in, &b.z_bwd_out}) {
        for (std::size_t k = 0; k < cv->points.size(); k += 4) {
            b.min_distance_to_gamma = std::min(b.min_distance_to_gamma, gamma.distance(cv->points[k]));
        }
    }

    if (opt.strict && !b.bands_ok()) {
        std::ostringstream msg;
        msg << "endpoint bands violated:";
        for (const auto& bc : b.bands)
            if (!bc.ok()) msg << " " << bc.name << "=" << bc.value << " not in [" << bc.lo << ", " << bc.hi << "]";
        throw Error(ErrorCode::BandViolation, msg.str());
    }
    return b;
}

// ---------------------------------------------------------------------------
// Loop maps

LoopMap::LoopMap(const LeafAnchors& anchors, double delta, std::shared_ptr<const BarrierSet> barriers, LoopOptions opt)
    : anchors_(anchors), delta_(delta), barriers_(std::move(barriers)), opt_(std::move(opt)),
      chart_(std::make_shared<const DirectedChart>(anchors.system(), anchors.homoclinic())) {
    if (!(delta > 0.0)) throw Error(ErrorCode::DegenerateInput, "delta must be positive");
}

namespace {
void check_d(double d, double delta) {
    if (!(d > 0.0) || !(d <= delta)) {
        std::ostringstream msg;
        msg << "d = " << d << " outside (0, delta = " << delta << "]";
        throw Error(ErrorCode::DegenerateInput, msg.str());
    }
}
}  // namespace

Point2 LoopMap::Q_s(double d, double tau) const {
    check_d(d, delta_);
    return chart_->point_at_distance(anchors_.P_s(tau), d);
}

Point2 LoopMap::Q_u(double d, double tau) const {
    check_d(d, delta_);
    return chart_->point_at_distance(anchors_.P_u(tau), d);
}

double LoopMap::horizon(double d) const {
    if (opt_.horizon > 0.0) return opt_.horizon;
    const RateConstants r = rate_constants(anchors_.spectrum());
    return 40.0 + 8.0 * std::abs(std::log(d)) / r.lambda_lo;
}

LoopResult LoopMap::forward(double d, double tau) const { return run(d, tau, Direction::Fwd, opt_.tol); }
LoopResult LoopMap::backward(double d, double tau) const { return run(d, tau, Direction::Bwd, opt_.tol); }

LoopResult LoopMap::run(double d, double tau, Direction dir, const Tolerances& tol) const {
    const bool fwd = dir == Direction::Fwd;
    LoopResult res;
    res.d = d;
    res.tau = tau;
    res.direction = dir;
    res.start = fwd ? Q_s(d, tau) : Q_u(d, tau);

    // The backward loop is the forward loop of the time-reversed system,
    // whose time t' = −t; the side pattern is again Ω'⁺ then Ω'⁻.
    const PiecewiseSystem eff = fwd ? anchors_.system() : anchors_.system().reversed();
    const auto orig = [fwd](double t) { return fwd ? t : -t; };
    const double t0 = orig(tau);
    const Transversal& first = fwd ? anchors_.S_plus() : anchors_.S_minus();
    const Transversal& second = fwd ? anchors_.S_minus() : anchors_.S_plus();

    StopSet stops;
    stops.t_end = t0 + horizon(d);
    for (const auto& [id, tr] : {std::pair{1, &first}, std::pair{2, &second}}) {
        SectionStop s;
        s.id = id;
        s.fn = [tr](const Point2& x) { return tr->level(x); };
        s.accept = [tr](const Point2& x) { return tr->covers(x); };
        s.terminal = false;
        stops.sections.push_back(s);
    }
    stops.switch_stop = SwitchStop{-1, 2, {}};
    const Trajectory tr = integrate(eff, t0, res.start, Direction::Fwd, stops, tol);
    const auto cr = tr.interior_crossings();
    if (tr.termination != Termination::HitTarget || cr.size() < 2) {
        throw Error(ErrorCode::LeftRegion, "loop orbit does not return to the section within the horizon");
    }
    if (tr.start_side != Side::Plus || cr[0].from_side != Side::Plus || cr[1].from_side != Side::Minus) {
        throw Error(ErrorCode::LeftRegion, "loop orbit does not follow the side pattern of the homoclinic loop");
    }
    const double l0 = chart_->arclength(anchors_.homoclinic().gamma0());
    const double lh = chart_->arclength(cr[0].point);
    if (!(lh > 0.0 && lh < l0)) {
        throw Error(ErrorCode::LeftRegion, "half-loop crossing " + fmt_point(cr[0].point) + " is not on L^in");
    }
    if (!anchors_.on_L0(cr[1].point)) {
        throw Error(ErrorCode::LeftRegion, "return point " + fmt_point(cr[1].point) + " is not on L0");
    }
    const double t_half = cr[0].t;
    const double t_one = cr[1].t;
    res.T_half = t_half - t0;
    res.T_one = t_one - t0;
    res.P_half = cr[0].point;
    res.P_one = cr[1].point;
    res.D_half = norm(res.P_half);
    for (const auto& c : tr.crossings)
        if (c.initial) res.transversality[0] = c.transversality;
    res.transversality[1] = cr[0].transversality;
    res.transversality[2] = cr[1].transversality;

    const double T_one_orig = orig(t_one);
    res.D_one = fwd ? chart_->directed_distance(res.P_one, anchors_.P_u(T_one_orig))
                    : chart_->directed_distance(res.P_one, anchors_.P_s(T_one_orig));

    // Segment data on the saddle transversals.
    const SectionHit* h1 = nullptr;
    const SectionHit* h2 = nullptr;
    for (const auto& h : tr.hits) {
        if (h.id == 1 && !h1 && h.t < t_half) h1 = &h;
        if (h.id == 2 && !h2 && h.t > t_half && h.t < t_one) h2 = &h;
    }
    res.segment_times.fill(kNaN);
    res.segment_disps.fill(kNaN);
    if (h1 && h2) {
        res.segments_available = true;
        res.P_first = h1->point;
        res.P_second = h2->point;
        res.segment_times = {h1->t - t0, t_half - h1->t, h2->t - t_half, t_one - h2->t};
        const Leaf leaf1 = fwd ? Leaf::Stable : Leaf::Unstable;
        const Leaf leaf2 = fwd ? Leaf::Unstable : Leaf::Stable;
        const Point2 a1 = anchors_.anchor(leaf1, AnchorSection::Transversal, orig(h1->t)).point;
        const Point2 a2 = anchors_.anchor(leaf2, AnchorSection::Transversal, orig(h2->t)).point;
        res.segment_disps = {-(first.coordinate(h1->point) - first.coordinate(a1)), res.D_half,
                             -(second.coordinate(h2->point) - second.coordinate(a2)), res.D_one};
    }

    // Deviations from the leaf orbits through the anchors.
    const Leaf lead = fwd ? Leaf::Stable : Leaf::Unstable;
    const Leaf trail = fwd ? Leaf::Unstable : Leaf::Stable;
    const int n = opt_.deviation_samples;
    for (int k = 0; k <= n; ++k) {
        const double t1 = t0 + (t_half - t0) * k / n;
        res.sup_dev_first_half = std::max(
            res.sup_dev_first_half, norm(tr.at(t1) - anchors_.leaf_point(lead, AnchorSection::L0, tau, orig(t1))));
        const double t2 = t_half + (t_one - t_half) * k / n;
        res.sup_dev_second_half =
            std::max(res.sup_dev_second_half,
                     norm(tr.at(t2) - anchors_.leaf_point(trail, AnchorSection::L0, T_one_orig, orig(t2))));
    }

    if (barriers_ && opt_.check_containment) {
        const int m = opt_.containment_samples;
        for (int k = 0; k < m; ++k) {
            const Point2 x = tr.at(t0 + (t_one - t0) * k / (m - 1));
            const bool in = fwd ? barriers_->in_K_fwd(x) : barriers_->in_K_bwd(x);
            if (!in) {
                res.contained = false;
                throw Error(ErrorCode::LeftRegion, "loop orbit leaves the trapping region at " + fmt_point(x));
            }
        }
    }
    return res;
}

double LoopMap::roundtrip(double d, double tau) const {
    const LoopResult r = run(d, tau, Direction::Fwd, opt_.roundtrip_tol);
    StopSet stops;
    stops.t_end = tau;
    const Trajectory back =
        integrate(anchors_.system(), tau + r.T_one, r.P_one, Direction::Bwd, stops, opt_.roundtrip_tol);
    return norm(back.end - r.start);
}

LoopResult loop_forward(const LoopMap& map, double d, double tau) { return map.forward(d, tau); }
LoopResult loop_backward(const LoopMap& map, double d, double tau) { return map.backward(d, tau); }
double roundtrip_check(const LoopMap& map, double d, double tau) { return map.roundtrip(d, tau); }

}  // namespace homloop
