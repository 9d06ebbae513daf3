#include "homloop/anchors.hpp"

#include "homloop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace homloop {

const char* to_string(Leaf l) { return l == Leaf::Stable ? "stable" : "unstable"; }

Transversal transversal_plus(const SaddleSpectrum& spec, double log_varpi) {
    Transversal t;
    t.base = spec.v_s_plus / log_varpi;
    t.dir = spec.v_u_plus;
    t.other = spec.v_s_plus;
    t.half_width = 1.0 / log_varpi;
    return t;
}

Transversal transversal_minus(const SaddleSpectrum& spec, double log_varpi) {
    Transversal t;
    t.base = spec.v_u_minus / log_varpi;
    t.dir = spec.v_s_minus;
    t.other = spec.v_u_minus;
    t.half_width = 1.0 / log_varpi;
    return t;
}

struct LeafAnchors::Cache {
    struct Entry {
        AnchorPoint point;
        std::shared_ptr<const Trajectory> orbit;
    };
    std::mutex mutex;
    std::map<std::tuple<int, int, double>, Entry> entries;
};

LeafAnchors::LeafAnchors(const PiecewiseSystem& sys, const Homoclinic& gamma, double log_varpi, AnchorOptions opt)
    : sys_(sys), gamma_(gamma), log_varpi_(log_varpi), opt_(opt), cache_(std::make_shared<Cache>()) {
    if (!(log_varpi > 0.0)) throw Error(ErrorCode::DegenerateInput, "|ln varpi| must be positive");
    s_plus_ = transversal_plus(gamma.spectrum(), log_varpi);
    s_minus_ = transversal_minus(gamma.spectrum(), log_varpi);
    L0_radius_ = opt.L0_radius > 0.0 ? opt.L0_radius : 0.1 * gamma.diameter();
    const RateConstants r = rate_constants(gamma.spectrum());
    horizon_ = opt.horizon > 0.0 ? opt.horizon : std::max(30.0, 8.0 / r.lambda_lo);
}

bool LeafAnchors::on_L0(const Point2& x) const {
    const double scale = norm(sys_.grad_G(x)) * (1.0 + norm(x));
    return std::abs(sys_.G(x)) <= 1e3 * opt_.tol.crossing * scale && norm(x - gamma_.gamma0()) <= L0_radius_;
}

Trajectory LeafAnchors::shoot(Leaf leaf, AnchorSection section, double tau, double eta) const {
    const SaddleSpectrum& sp = gamma_.spectrum();
    const bool stable = leaf == Leaf::Stable;
    const Direction dir = stable ? Direction::Bwd : Direction::Fwd;
    const double sg = direction_sign(dir);
    const Point2 launch = eta * (stable ? sp.v_s_plus : sp.v_u_minus);
    const Transversal& tr = stable ? s_plus_ : s_minus_;
    const Point2 g0 = gamma_.gamma0();
    const double radius = L0_radius_;

    StopSet stops;
    if (section == AnchorSection::L0) {
        stops.switch_stop = SwitchStop{1, 1, {}};
    } else {
        SectionStop s;
        s.id = 1;
        s.fn = [tr](const Point2& x) { return tr.level(x); };
        s.accept = [tr](const Point2& x) { return tr.covers(x); };
        stops.sections.push_back(s);
    }

    // Initial guess of the travel time from the linear rate.
    const double lam = stable ? std::abs(sp.lambda_s_plus) : sp.lambda_u_minus;
    const double target = section == AnchorSection::L0 ? norm(g0) : 1.0 / log_varpi_;
    double travel = std::log(std::max(target / eta, 1.0 + 1e-12)) / lam + 1.0;
    double t_launch = tau - sg * travel;
    for (int it = 0; it < opt_.max_iterations; ++it) {
        stops.t_end = t_launch + sg * 3.0 * horizon_;
        Trajectory t = integrate(sys_, t_launch, launch, dir, stops, opt_.tol);
        if (t.termination != Termination::HitTarget) {
            if (section == AnchorSection::L0)
                throw Error(ErrorCode::WrongSection, "leaf orbit never reached the switching curve");
            throw Error(ErrorCode::MissedTransversal, "leaf orbit never met the saddle transversal");
        }
        if (section == AnchorSection::L0 && norm(t.end - g0) > radius) {
            std::ostringstream msg;
            msg << to_string(leaf) << " leaf meets the switching curve at distance " << norm(t.end - g0)
                << " from gamma(0), outside L0 (radius " << radius << ")";
            throw Error(ErrorCode::WrongSection, msg.str());
        }
        const double residual = t.t_end - tau;
        if (std::abs(residual) <= opt_.time_tol * (1.0 + std::abs(tau))) {
            if (std::abs(t.t_end - t_launch) > horizon_) {
                throw Error(ErrorCode::HorizonTooShort, "leaf travel time exceeds the shooting horizon");
            }
            return t;
        }
        t_launch -= residual;
    }
    throw Error(ErrorCode::NotConverged, "launch-time solve for the leaf anchor did not converge");
}

namespace {

double effective_tau(const PiecewiseSystem& sys, double tau) { return sys.autonomous() ? 0.0 : tau; }

}  // namespace

AnchorPoint LeafAnchors::anchor(Leaf leaf, AnchorSection section, double tau_in) const {
    const double tau = effective_tau(sys_, tau_in);
    const auto key = std::make_tuple(static_cast<int>(leaf), static_cast<int>(section), tau);
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        const auto it = cache_->entries.find(key);
        if (it != cache_->entries.end()) return it->second.point;
    }
    const double e0 = opt_.eta0;
    const Trajectory t1 = shoot(leaf, section, tau, e0);
    const Trajectory t2 = shoot(leaf, section, tau, e0 / 2.0);
    const Trajectory t3 = shoot(leaf, section, tau, e0 / 4.0);
    const Point2 P1 = t1.end, P2 = t2.end, P3 = t3.end;
    const Point2 R12 = P2 + (P2 - P1) / 3.0;
    const Point2 R23 = P3 + (P3 - P2) / 3.0;
    AnchorPoint a;
    a.point = R23;
    a.extrapolation_error = norm(R23 - R12);
    a.travel_time = std::abs(t1.t_end - t1.t_start);
    a.raw_eta0 = P1;
    if (a.extrapolation_error > opt_.richardson_tol) {
        std::ostringstream msg;
        msg << "Richardson estimates of the " << to_string(leaf) << " anchor disagree by " << a.extrapolation_error;
        throw Error(ErrorCode::NotConverged, msg.str());
    }
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->entries.emplace(key, Cache::Entry{a, std::make_shared<const Trajectory>(t3)});
    return a;
}

std::shared_ptr<const Trajectory> LeafAnchors::leaf_orbit(Leaf leaf, AnchorSection section, double tau_in) const {
    const double tau = effective_tau(sys_, tau_in);
    (void)anchor(leaf, section, tau);
    std::lock_guard<std::mutex> lock(cache_->mutex);
    return cache_->entries.at(std::make_tuple(static_cast<int>(leaf), static_cast<int>(section), tau)).orbit;
}

Point2 LeafAnchors::leaf_point(Leaf leaf, AnchorSection section, double tau, double t) const {
    const double te = effective_tau(sys_, tau);
    const auto orbit = leaf_orbit(leaf, section, te);
    const double s = t - tau + te;
    if (orbit->contains(s)) return orbit->at(s);
    const SaddleSpectrum& sp = gamma_.spectrum();
    if (leaf == Leaf::Stable) {
        if (s < orbit->t_min()) throw Error(ErrorCode::IntervalOutOfRange, "stable leaf orbit queried before its anchor");
        return std::exp(sp.lambda_s_plus * (s - orbit->t_start)) * orbit->start;
    }
    if (s > orbit->t_max()) throw Error(ErrorCode::IntervalOutOfRange, "unstable leaf orbit queried after its anchor");
    return std::exp(sp.lambda_u_minus * (s - orbit->t_start)) * orbit->start;
}

double estimate_cbar(const LeafAnchors& anchors, const std::vector<double>& taus) {
    const double eps = anchors.system().epsilon();
    if (eps == 0.0) return 0.0;
    const Point2 g0 = anchors.homoclinic().gamma0();
    double best = 0.0;
    for (double tau : taus) {
        best = std::max(best, norm(anchors.P_s(tau) - g0));
        best = std::max(best, norm(anchors.P_u(tau) - g0));
    }
    return best / eps;
}

double shadowing_deviation(const LeafAnchors& anchors, Leaf leaf, double tau, double window) {
    const Homoclinic& h = anchors.homoclinic();
    double worst = 0.0;
    const int n = 2000;
    for (int k = 0; k <= n; ++k) {
        const double th = window * k / n;
        const double t = leaf == Leaf::Stable ? tau + th : tau - th;
        const Point2 x = anchors.leaf_point(leaf, AnchorSection::L0, tau, t);
        worst = std::max(worst, norm(x - h.gamma(t - tau)));
    }
    return worst;
}

}  // namespace homloop
