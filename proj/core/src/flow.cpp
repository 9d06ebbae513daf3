#include "homloop/flow.hpp"

#include "homloop/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace homloop {

namespace {

using V2 = rk::Vec<2>;

V2 vec(const Point2& p) { return {p.x1, p.x2}; }
Point2 pt(const V2& v) { return {v[0], v[1]}; }

/// Samples per step used to bracket sign changes of event functions.
constexpr int kScanSamples = 8;

double crossing_scale(const PiecewiseSystem& sys, const Point2& x) {
    return norm(sys.grad_G(x)) * (1.0 + norm(x));
}

std::string describe(const Point2& p, double t) {
    std::ostringstream s;
    s.precision(17);
    s << "t=" << t << " x=(" << p.x1 << ", " << p.x2 << ")";
    return s.str();
}

/// Kind of a located event inside a step.
enum class EventKind { Switch, Section, Ball };

struct Located {
    EventKind kind;
    std::size_t index = 0;
    double theta = 0.0;
};

/// Finds θ ∈ [a, b] with fn(x(θ)) = 0 where x(θ) is produced by an exact
/// Runge–Kutta step of size θh (so the event point is a genuine step result,
/// not an interpolant). Falls back to the dense polynomial if the exact values
/// fail to bracket.
template <typename Exact, typename Dense, typename Fn>
double refine_root(const Exact& exact, const Dense& dense, const Fn& fn, double a, double b) {
    namespace bt = boost::math::tools;
    const auto tol = bt::eps_tolerance<double>(52);
    auto phi = [&](double th) { return fn(pt(exact(th))); };
    double fa = phi(a);
    double fb = phi(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    auto solve = [&](const auto& f, double fa0, double fb0) {
        std::uintmax_t it = 80;
        const auto r = bt::toms748_solve(f, a, b, fa0, fb0, tol, it);
        const double fr1 = std::abs(f(r.first));
        const double fr2 = std::abs(f(r.second));
        return fr1 <= fr2 ? r.first : r.second;
    };
    if ((fa < 0.0) != (fb < 0.0)) return solve(phi, fa, fb);
    auto psi = [&](double th) { return fn(pt(dense.at_theta(th))); };
    fa = psi(a);
    fb = psi(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) == (fb < 0.0)) return b;
    return solve(psi, fa, fb);
}

}  // namespace

const char* to_string(Termination t) {
    switch (t) {
        case Termination::TimeHorizon: return "TimeHorizon";
        case Termination::HitTarget: return "HitTarget";
        case Termination::SlidingDetected: return "SlidingDetected";
        case Termination::LeftDomain: return "LeftDomain";
        case Termination::Converged: return "Converged";
    }
    return "Unknown";
}

bool Trajectory::contains(double t) const {
    const double slack = 1e-12 * (1.0 + std::abs(t));
    return t >= t_min() - slack && t <= t_max() + slack;
}

std::size_t Trajectory::locate(double t) const {
    const double sg = direction_sign(direction);
    auto it = std::lower_bound(steps.begin(), steps.end(), sg * t,
                               [sg](const TrajectoryStep& s, double key) { return sg * s.dense.t1() < key; });
    if (it == steps.end()) return steps.size() - 1;
    return static_cast<std::size_t>(it - steps.begin());
}

Point2 Trajectory::at(double t) const {
    if (!contains(t)) {
        std::ostringstream s;
        s.precision(17);
        s << "t=" << t << " outside trajectory span [" << t_min() << ", " << t_max() << "]";
        throw Error(ErrorCode::IntervalOutOfRange, s.str());
    }
    if (steps.empty()) return start;
    if (t == t_end) return end;
    if (t == t_start) return start;
    return pt(steps[locate(t)].dense.at(t));
}

Side Trajectory::side_at(double t) const {
    if (steps.empty()) return start_side;
    return steps[locate(t)].side;
}

std::vector<std::pair<double, Point2>> Trajectory::sample(std::size_t n) const {
    std::vector<std::pair<double, Point2>> out;
    if (n < 2) n = 2;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = i + 1 == n ? t_end : t_start + (t_end - t_start) * static_cast<double>(i) / static_cast<double>(n - 1);
        out.emplace_back(t, at(t));
    }
    return out;
}

std::vector<CrossingEvent> Trajectory::interior_crossings() const {
    std::vector<CrossingEvent> out;
    for (const CrossingEvent& c : crossings) {
        if (!c.initial) out.push_back(c);
    }
    return out;
}

Side departure_side(const PiecewiseSystem& sys, double t, const Point2& P, Direction dir, const Tolerances& tol) {
    const double g = sys.G(P);
    const double scale = crossing_scale(sys, P);
    if (std::abs(g) > 1e3 * tol.crossing * scale) return g > 0.0 ? Side::Plus : Side::Minus;
    const Point2 gG = sys.grad_G(P);
    const double gn = norm(gG);
    const double sg = direction_sign(dir);
    const double ap = sg * dot(gG, sys.field(Side::Plus, t, P));
    const double am = sg * dot(gG, sys.field(Side::Minus, t, P));
    if (std::abs(ap) / gn < tol.transversality_floor || std::abs(am) / gn < tol.transversality_floor) {
        throw Error(ErrorCode::NonTransversalCrossing, "tangential departure from the switching curve at " + describe(P, t));
    }
    if (ap > 0.0 && am > 0.0) return Side::Plus;
    if (ap < 0.0 && am < 0.0) return Side::Minus;
    if (ap < 0.0 && am > 0.0) {
        throw Error(ErrorCode::SlidingDetected, "both fields point into the switching curve at " + describe(P, t));
    }
    throw Error(ErrorCode::NonTransversalCrossing,
                "both fields leave the switching curve at " + describe(P, t) + " (non-unique departure)");
}

Trajectory integrate(const PiecewiseSystem& sys, double tau, const Point2& P, Direction dir, const StopSet& stops,
                     const Tolerances& tol) {
    if (!P.finite() || !std::isfinite(tau) || !std::isfinite(stops.t_end)) {
        throw Error(ErrorCode::DegenerateInput, "non-finite initial data " + describe(P, tau));
    }
    const double sg = direction_sign(dir);
    if (sg * (stops.t_end - tau) < 0.0) {
        throw Error(ErrorCode::DegenerateInput, "time horizon lies behind the initial time");
    }

    Trajectory tr;
    tr.t_start = tau;
    tr.start = P;
    tr.direction = dir;

    Side side = departure_side(sys, tau, P, dir, tol);
    tr.start_side = side;
    {
        const double g = sys.G(P);
        if (std::abs(g) <= 1e3 * tol.crossing * crossing_scale(sys, P)) {
            CrossingEvent c;
            c.t = tau;
            c.point = P;
            c.transversality = dot(sys.grad_G(P), sys.field(side, tau, P));
            c.from_side = opposite(side);
            c.to_side = side;
            c.initial = true;
            tr.crossings.push_back(c);
        }
    }

    double t = tau;
    V2 y = vec(P);
    auto rhs = [&sys, &side](double tt, const V2& yy) { return vec(sys.field(side, tt, pt(yy))); };
    V2 k1 = rhs(t, y);
    double h;
    {
        const double fn = norm(pt(k1));
        h = 0.01 * (1.0 + norm(P)) / std::max(fn, 1e-300);
        h = sg * std::clamp(h, 1e-6, tol.h_max);
    }
    int switch_count = 0;

    auto finish = [&](Termination term, int id) {
        tr.termination = term;
        tr.target_id = id;
        tr.t_end = t;
        tr.end = pt(y);
        tr.end_side = side;
    };

    for (long n = 0;; ++n) {
        if (n > tol.max_steps) throw Error(ErrorCode::StepFailure, "maximum number of steps exceeded near " + describe(pt(y), t));
        const double remaining = stops.t_end - t;
        if (sg * remaining <= 0.0) {
            finish(Termination::TimeHorizon, 0);
            return tr;
        }
        bool last = false;
        if (std::abs(h) >= std::abs(remaining) * (1.0 - 1e-14)) {
            h = remaining;
            last = true;
        }
        rk::StepResult<2> st = rk::dopri5_step<2>(rhs, t, y, k1, h, tol.rtol, tol.atol);
        if (!std::isfinite(st.err) || st.err > 1.0) {
            const double fac = std::isfinite(st.err) ? std::max(0.1, 0.9 * std::pow(st.err, -0.2)) : 0.1;
            h *= fac;
            if (std::abs(h) < 1e-14 * (1.0 + std::abs(t))) {
                throw Error(ErrorCode::StepFailure, "step size underflow near " + describe(pt(y), t));
            }
            continue;
        }

        auto exact = [&](double th) -> V2 {
            if (th <= 0.0) return y;
            if (th >= 1.0) return st.y1;
            return rk::dopri5_step<2>(rhs, t, y, k1, th * h, tol.rtol, tol.atol).y1;
        };

        // Sample the step.
        std::array<Point2, kScanSamples + 1> xs;
        for (int k = 0; k <= kScanSamples; ++k) {
            const double th = static_cast<double>(k) / kScanSamples;
            xs[k] = k == 0 ? pt(y) : (k == kScanSamples ? pt(st.y1) : pt(st.dense.at_theta(th)));
        }

        std::optional<Located> first;
        auto consider = [&](const Located& c) {
            if (!first || c.theta < first->theta) first = c;
        };

        // Switching curve: the active side's sign of G must not flip.
        {
            const double sgn_side = side_sign(side);
            for (int k = 1; k <= kScanSamples; ++k) {
                const double gk = sys.G(xs[k]);
                if (sgn_side * gk < -tol.crossing * crossing_scale(sys, xs[k])) {
                    auto fn = [&sys](const Point2& x) { return sys.G(x); };
                    const double th = refine_root(exact, st.dense, fn, static_cast<double>(k - 1) / kScanSamples,
                                                  static_cast<double>(k) / kScanSamples);
                    consider({EventKind::Switch, 0, th});
                    break;
                }
            }
        }

        // Sections and balls: collect every accepted sign change in the step.
        struct Hit {
            EventKind kind;
            std::size_t index;
            double theta;
            Point2 point;
        };
        std::vector<Hit> hits;
        auto scan = [&](EventKind kind, std::size_t index, const auto& fn, int direction,
                        const std::function<bool(const Point2&)>& accept) {
            double prev = fn(xs[0]);
            for (int k = 1; k <= kScanSamples; ++k) {
                const double cur = fn(xs[k]);
                const bool change = prev != 0.0 && (cur == 0.0 || (prev < 0.0) != (cur < 0.0));
                const bool dir_ok = direction == 0 || (direction > 0 && prev < 0.0) || (direction < 0 && prev > 0.0);
                if (change && dir_ok) {
                    const double th = refine_root(exact, st.dense, fn, static_cast<double>(k - 1) / kScanSamples,
                                                  static_cast<double>(k) / kScanSamples);
                    const Point2 x = pt(exact(th));
                    if (!accept || accept(x)) hits.push_back({kind, index, th, x});
                }
                prev = cur;
            }
        };
        for (std::size_t i = 0; i < stops.sections.size(); ++i) {
            const SectionStop& s = stops.sections[i];
            scan(EventKind::Section, i, s.fn, s.direction, s.accept);
        }
        for (std::size_t i = 0; i < stops.balls.size(); ++i) {
            const BallStop& b = stops.balls[i];
            auto fn = [&b](const Point2& x) { return norm(x - b.center) - b.radius; };
            scan(EventKind::Ball, i, fn, b.entry ? -1 : 1, {});
        }
        for (const Hit& hit : hits) {
            const bool terminal = hit.kind == EventKind::Ball || stops.sections[hit.index].terminal;
            if (terminal) consider({hit.kind, hit.index, hit.theta});
        }
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.theta < b.theta; });
        const double cut = first ? first->theta : 2.0;
        for (const Hit& hit : hits) {
            if (hit.kind == EventKind::Section && hit.theta <= cut) {
                tr.hits.push_back({stops.sections[hit.index].id, t + hit.theta * h, hit.point});
            }
        }

        if (!first) {
            tr.steps.push_back({st.dense, side});
            t = last ? stops.t_end : t + h;
            y = st.y1;
            k1 = st.k7;
            h *= rk::step_factor(st.err);
            if (std::abs(h) > tol.h_max) h = sg * tol.h_max;
            continue;
        }

        // Cut the step at the earliest terminal event.
        const double th = first->theta;
        const double h_cut = th * h;
        if (h_cut != 0.0) {
            rk::StepResult<2> part = rk::dopri5_step<2>(rhs, t, y, k1, h_cut, tol.rtol, tol.atol);
            tr.steps.push_back({part.dense, side});
            y = part.y1;
            k1 = part.k7;
        }
        t = t + h_cut;

        if (first->kind == EventKind::Section) {
            finish(Termination::HitTarget, stops.sections[first->index].id);
            return tr;
        }
        if (first->kind == EventKind::Ball) {
            finish(stops.balls[first->index].entry ? Termination::Converged : Termination::LeftDomain,
                   static_cast<int>(first->index));
            return tr;
        }

        // Crossing of Ω⁰.
        const Point2 x = pt(y);
        const Side to = opposite(side);
        const Point2 gG = sys.grad_G(x);
        const double gn = norm(gG);
        const double a_old = dot(gG, sys.field(side, t, x));
        const double a_new = dot(gG, sys.field(to, t, x));
        if (std::abs(a_old) / gn < tol.transversality_floor || std::abs(a_new) / gn < tol.transversality_floor) {
            throw Error(ErrorCode::NonTransversalCrossing, "tangential crossing at " + describe(x, t));
        }
        CrossingEvent c;
        c.t = t;
        c.point = x;
        c.transversality = a_old;
        c.from_side = side;
        c.to_side = to;
        if (sg * a_new * side_sign(to) < 0.0) {
            tr.crossings.push_back(c);
            if (stops.throw_on_sliding) throw Error(ErrorCode::SlidingDetected, "sliding at " + describe(x, t));
            finish(Termination::SlidingDetected, 0);
            return tr;
        }
        tr.crossings.push_back(c);
        side = to;
        k1 = rhs(t, y);
        ++switch_count;
        if (stops.switch_stop) {
            const SwitchStop& ss = *stops.switch_stop;
            if (!ss.accept || ss.accept(c)) {
                if (switch_count >= ss.count) {
                    finish(Termination::HitTarget, ss.id);
                    return tr;
                }
            } else {
                --switch_count;
            }
        }
    }
}

Point2 flow_map(const PiecewiseSystem& sys, double tau1, double tau2, const Point2& Q, const Tolerances& tol) {
    if (tau1 == tau2) return Q;
    StopSet stops;
    stops.t_end = tau2;
    const Trajectory tr = integrate(sys, tau1, Q, tau2 > tau1 ? Direction::Fwd : Direction::Bwd, stops, tol);
    return tr.end;
}

Mat2 saltation_matrix(const PiecewiseSystem& sys, double t, const Point2& x, Side from, Side to) {
    const Point2 gG = sys.grad_G(x);
    const Point2 Ff = sys.field(from, t, x);
    const Point2 Ft = sys.field(to, t, x);
    return Mat2::identity() + (1.0 / dot(gG, Ff)) * outer(Ft - Ff, gG);
}

FundamentalMatrix variational_flow(const PiecewiseSystem& sys, const Trajectory& base, double t, double s,
                                   CrossingRule rule, const Tolerances& tol) {
    if (!base.contains(t) || !base.contains(s)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "[" << std::min(s, t) << ", " << std::max(s, t) << "] not within the base orbit span [" << base.t_min()
            << ", " << base.t_max() << "]";
        throw Error(ErrorCode::IntervalOutOfRange, msg.str());
    }
    FundamentalMatrix out;
    out.t = t;
    out.s = s;
    if (t == s) return out;
    const double sg = t > s ? 1.0 : -1.0;

    // Break points: crossings strictly between s and t, in propagation order.
    std::vector<const CrossingEvent*> cuts;
    for (const CrossingEvent& c : base.crossings) {
        if (c.initial) continue;
        if (sg * (c.t - s) > 0.0 && sg * (t - c.t) > 0.0) cuts.push_back(&c);
    }
    std::sort(cuts.begin(), cuts.end(), [sg](const CrossingEvent* a, const CrossingEvent* b) { return sg * a->t < sg * b->t; });

    using V5 = rk::Vec<5>;
    V5 y{1.0, 0.0, 0.0, 1.0, 0.0};
    double a = s;
    auto piece = [&](double from, double to) {
        const double mid = 0.5 * (from + to);
        const Side side = base.side_at(mid);
        auto f = [&](double r, const V5& z) {
            const Mat2 J = sys.field_jac(side, r, base.at(std::clamp(r, base.t_min(), base.t_max())));
            const Mat2 X{z[0], z[1], z[2], z[3]};
            const Mat2 D = J * X;
            return V5{D.a11, D.a12, D.a21, D.a22, J.trace()};
        };
        y = rk::integrate_smooth<5>(f, from, y, to, tol.rtol, tol.atol * 1e3, tol.h_max, [](const rk::DenseStep<5>&) {});
    };
    for (const CrossingEvent* c : cuts) {
        piece(a, c->t);
        if (rule == CrossingRule::Saltation) {
            const Side before = base.side_at(a + 0.5 * (c->t - a));
            const Mat2 S = saltation_matrix(sys, c->t, c->point, before, opposite(before));
            const Mat2 X = S * Mat2{y[0], y[1], y[2], y[3]};
            y = {X.a11, X.a12, X.a21, X.a22, y[4]};
        }
        a = c->t;
    }
    piece(a, t);
    out.X = Mat2{y[0], y[1], y[2], y[3]};
    out.trace_integral = y[4];
    return out;
}

}  // namespace homloop
