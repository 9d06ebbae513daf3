#include "homloop/homoclinic.hpp"

#include "homloop/errors.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/linestring.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homloop {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgLine = bg::model::linestring<BgPoint>;

struct Homoclinic::Data {
    explicit Data(PiecewiseSystem s) : sys(std::move(s)) {}
    PiecewiseSystem sys;
    SaddleSpectrum spec;
    bool analytic = false;
    // Shot representation: γ(t) = unstable->at(t + t_u) on [−t_u, 0] and
    // γ(t) = stable->at(t − t_s) on [0, t_s].
    std::shared_ptr<const Trajectory> unstable;
    std::shared_ptr<const Trajectory> stable;
    double t_u = 0.0;
    double t_s = 0.0;
    double eta = 0.0;
    double mismatch = 0.0;
    std::vector<Point2> poly;
    BgPolygon polygon;
    BgLine line;
    double c0 = 0.0;
    double diam = 0.0;
    OrientationHint hint;
};

namespace {

Point2 gamma_of(const Homoclinic::Data& d, double t) {
    if (d.analytic) return d.sys.definition().gamma(t);
    if (t <= 0.0) {
        if (t >= -d.t_u) return d.unstable->at(t + d.t_u);
        return d.eta * std::exp(d.spec.lambda_u_minus * (t + d.t_u)) * d.spec.v_u_minus;
    }
    if (t <= d.t_s) return d.stable->at(t - d.t_s);
    return d.eta * std::exp(d.spec.lambda_s_plus * (t - d.t_s)) * d.spec.v_s_plus;
}

Point2 gamma_dot_of(const Homoclinic::Data& d, double t) {
    if (d.analytic && d.sys.definition().gamma_dot) return d.sys.definition().gamma_dot(t);
    const Side s = t < 0.0 ? Side::Minus : Side::Plus;
    return d.sys.f(s, gamma_of(d, t));
}

/// Samples Γ with roughly uniform arclength spacing, from the origin along
/// the unstable branch, through γ(0), back to the origin.
std::vector<Point2> sample_loop(const Homoclinic::Data& d, double spacing) {
    const double floor_norm = 1e-9;
    auto walk = [&](double sign) {
        std::vector<std::pair<double, Point2>> pts;
        double t = 0.0;
        for (int i = 0; i < 2'000'000; ++i) {
            const Point2 x = gamma_of(d, t);
            pts.emplace_back(t, x);
            if (norm(x) < floor_norm || std::abs(t) > 200.0) break;
            const double speed = norm(gamma_dot_of(d, t));
            t += sign * std::min(0.05, spacing / std::max(speed, 1e-300));
        }
        return pts;
    };
    const auto back = walk(-1.0);
    const auto fwd = walk(1.0);
    std::vector<Point2> poly;
    poly.reserve(back.size() + fwd.size() + 2);
    poly.push_back({0.0, 0.0});
    for (auto it = back.rbegin(); it != back.rend(); ++it) poly.push_back(it->second);
    for (std::size_t i = 1; i < fwd.size(); ++i) poly.push_back(fwd[i].second);
    return poly;
}

void finish(Homoclinic::Data& d, const HomoclinicOptions& opt) {
    const Point2 g0 = gamma_of(d, 0.0);
    // Assumption K at γ(0).
    const Point2 n = d.sys.grad_G(g0);
    for (Side s : {Side::Plus, Side::Minus}) {
        const double k = dot(n, d.sys.f(s, g0));
        if (!(k > 0.0)) {
            std::ostringstream msg;
            msg << "transversality at gamma(0) fails on side " << to_string(s) << " (value " << k << ")";
            throw Error(ErrorCode::NoConnection, msg.str());
        }
    }
    d.poly = sample_loop(d, opt.polyline_spacing);
    for (const Point2& p : d.poly) {
        bg::append(d.polygon.outer(), BgPoint(p.x1, p.x2));
        bg::append(d.line, BgPoint(p.x1, p.x2));
    }
    bg::append(d.polygon.outer(), BgPoint(d.poly.front().x1, d.poly.front().x2));
    bg::append(d.line, BgPoint(d.poly.front().x1, d.poly.front().x2));
    bg::correct(d.polygon);

    d.diam = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, d.poly.size() / 400);
    for (std::size_t i = 0; i < d.poly.size(); i += stride)
        for (std::size_t j = i + stride; j < d.poly.size(); j += stride)
            d.diam = std::max(d.diam, norm(d.poly[i] - d.poly[j]));

    d.c0 = 0.0;
    for (double t = -40.0; t <= 40.0; t += 0.01) {
        const double rate = t <= 0.0 ? d.spec.lambda_u_minus : d.spec.lambda_s_plus;
        d.c0 = std::max(d.c0, 4.0 * norm(gamma_of(d, t)) * std::exp(-rate * t));
    }
    d.hint.departure = normalized(gamma_dot_of(d, -30.0));
    d.hint.arrival = normalized(gamma_dot_of(d, 30.0));
}

Point2 omega0_direction(const PiecewiseSystem& sys, const Point2& at, const Point2& away_from_origin) {
    Point2 t = normalized(rot90(sys.grad_G(at)));
    if (dot(t, away_from_origin) < 0.0) t = -t;
    return t;
}

}  // namespace

ShootingResult shoot_branches(const PiecewiseSystem& sys0, const SaddleSpectrum& spec, const HomoclinicOptions& opt) {
    const PiecewiseSystem sys = sys0.with_epsilon(0.0);
    ShootingResult r;
    StopSet su;
    su.t_end = opt.horizon;
    su.switch_stop = SwitchStop{1, 1, {}};
    const Trajectory tu = integrate(sys, 0.0, opt.eta * spec.v_u_minus, Direction::Fwd, su, opt.tol);
    StopSet ss;
    ss.t_end = -opt.horizon;
    ss.switch_stop = SwitchStop{1, 1, {}};
    const Trajectory ts = integrate(sys, 0.0, opt.eta * spec.v_s_plus, Direction::Bwd, ss, opt.tol);
    if (tu.termination != Termination::HitTarget || ts.termination != Termination::HitTarget)
        throw Error(ErrorCode::NoConnection, "a branch of the saddle never reached the switching curve");
    r.unstable_hit = tu.end;
    r.stable_hit = ts.end;
    const Point2 dir = omega0_direction(sys, tu.end, tu.end);
    r.mismatch = dot(r.unstable_hit - r.stable_hit, dir);
    r.unstable = std::make_shared<const Trajectory>(tu);
    r.stable = std::make_shared<const Trajectory>(ts);
    return r;
}

Homoclinic homoclinic_orbit(const PiecewiseSystem& sys_in, const HomoclinicOptions& opt) {
    auto d = std::make_shared<Homoclinic::Data>(sys_in.with_epsilon(0.0));
    if (d->sys.has_analytic_homoclinic()) {
        d->analytic = true;
        const auto& def = d->sys.definition();
        OrientationHint hint;
        hint.departure = normalized(def.gamma_dot ? def.gamma_dot(-30.0) : d->sys.f(Side::Minus, def.gamma(-30.0)));
        hint.arrival = normalized(def.gamma_dot ? def.gamma_dot(30.0) : d->sys.f(Side::Plus, def.gamma(30.0)));
        d->spec = compute_spectrum(d->sys, hint);
        // Side pattern of assumption K.
        for (double t = -20.0; t <= 20.0; t += 0.25) {
            if (t == 0.0) continue;
            const double G = d->sys.G(def.gamma(t));
            if ((t < 0.0 && !(G < 0.0)) || (t > 0.0 && !(G > 0.0)))
                throw Error(ErrorCode::NoConnection, "supplied homoclinic does not follow the side pattern");
        }
    } else {
        d->spec = compute_spectrum(d->sys);
        const ShootingResult r = shoot_branches(d->sys, d->spec, opt);
        if (std::abs(r.mismatch) > opt.match_tol) {
            std::ostringstream msg;
            msg << "stable and unstable branches miss each other on the switching curve by " << r.mismatch;
            throw Error(ErrorCode::NoConnection, msg.str());
        }
        d->unstable = r.unstable;
        d->stable = r.stable;
        d->t_u = r.unstable->t_end;
        d->t_s = -r.stable->t_end;
        d->eta = opt.eta;
        d->mismatch = r.mismatch;
    }
    finish(*d, opt);
    return Homoclinic(d);
}

Point2 Homoclinic::gamma(double t) const { return gamma_of(*d_, t); }
Point2 Homoclinic::gamma_dot(double t) const { return gamma_dot_of(*d_, t); }
bool Homoclinic::analytic() const { return d_->analytic; }
double Homoclinic::decay_c0() const { return d_->c0; }
const std::vector<Point2>& Homoclinic::polyline() const { return d_->poly; }
double Homoclinic::diameter() const { return d_->diam; }
OrientationHint Homoclinic::orientation() const { return d_->hint; }
const SaddleSpectrum& Homoclinic::spectrum() const { return d_->spec; }
const PiecewiseSystem& Homoclinic::system() const { return d_->sys; }
double Homoclinic::shooting_mismatch() const { return d_->mismatch; }

bool Homoclinic::inside(const Point2& x) const { return bg::within(BgPoint(x.x1, x.x2), d_->polygon); }

double Homoclinic::distance(const Point2& x) const { return bg::distance(BgPoint(x.x1, x.x2), d_->line); }

Point2 Homoclinic::inward_tangent() const {
    const SaddleSpectrum& s = d_->spec;
    return normalized(s.v_s_plus - s.K_plus() * s.v_u_plus);
}

}  // namespace homloop
