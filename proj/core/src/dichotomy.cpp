#include "homloop/dichotomy.hpp"

#include "homloop/errors.hpp"
#include "homloop/flow.hpp"
#include "homloop/rk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace homloop {

/// Dense table of (θ, ln‖w‖) with t ascending over the steps.
struct PrincipalSolutions::Table {
    std::vector<rk::DenseStep<2>> steps;
    double log_offset = 0.0;  ///< subtracted so that ln‖w(0)‖ = 0

    [[nodiscard]] rk::Vec<2> at(double t) const {
        auto it = std::lower_bound(steps.begin(), steps.end(), t, [](const rk::DenseStep<2>& st, double v) {
            return std::max(st.t0, st.t1()) < v;
        });
        if (it == steps.end()) --it;
        rk::Vec<2> y = it->at(t);
        y[1] -= log_offset;
        return y;
    }
};

namespace {

Point2 direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

double angle_of(const Point2& v) { return std::atan2(v.x2, v.x1); }

/// Wraps an angle difference into (−π, π].
double wrap(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a - kPi;
}

}  // namespace

PrincipalSolutions::PrincipalSolutions(const PiecewiseSystem& sys, Side side, const PrincipalOptions& opt)
    : sys_(sys), side_(side), opt_(opt) {
    if (!(opt.t_min < 0.0 && opt.t_max > 0.0)) throw Error(ErrorCode::DegenerateInput, "principal range must contain 0");
    const SaddleSpectrum spec = compute_spectrum(sys.with_epsilon(0.0));
    lambda_u_ = spec.lambda_u(side);
    lambda_s_ = spec.lambda_s(side);
    eig_u_ = spec.v_u(side);
    eig_s_ = spec.v_s(side);

    // Direction angle θ and log-norm of a solution of ξ' = A(t)ξ:
    // θ' = u ∧ A u, (ln‖ξ‖)' = u · A u with u = (cos θ, sin θ).
    auto rhs = [this](double t, const rk::Vec<2>& y) {
        const Point2 u = direction(y[0]);
        const Point2 Au = A(t) * u;
        return rk::Vec<2>{wedge(u, Au), dot(u, Au)};
    };
    const double gap = lambda_u_ - lambda_s_;
    const double pre = 40.0 / gap + 5.0;
    const double h_max = 0.25;

    auto build = [&](bool unstable) {
        const Point2 e = unstable ? eig_u_ : eig_s_;
        const double start = unstable ? opt.t_min - pre : opt.t_max + pre;
        const double entry = unstable ? opt.t_min : opt.t_max;
        const double exit = unstable ? opt.t_max : opt.t_min;
        // Pre-runs from two directions must agree when they enter the range.
        auto prerun = [&](double th0) {
            return rk::integrate_smooth<2>(rhs, start, rk::Vec<2>{th0, 0.0}, entry, opt.rtol, opt.atol, h_max,
                                           [](const rk::DenseStep<2>&) {});
        };
        const rk::Vec<2> a = prerun(angle_of(e));
        const rk::Vec<2> b = prerun(angle_of(e) + 0.5);
        if (std::abs(wrap(a[0] - b[0])) > opt.convergence_tol) {
            std::ostringstream msg;
            msg << "principal " << (unstable ? "unstable" : "stable") << " direction not converged (angle gap "
                << std::abs(wrap(a[0] - b[0])) << ")";
            throw Error(ErrorCode::HorizonTooShort, msg.str());
        }
        auto tab = std::make_shared<Table>();
        rk::integrate_smooth<2>(rhs, entry, rk::Vec<2>{a[0], 0.0}, exit, opt.rtol, opt.atol, h_max,
                                [&tab](const rk::DenseStep<2>& st) { tab->steps.push_back(st); });
        if (!unstable) std::reverse(tab->steps.begin(), tab->steps.end());
        tab->log_offset = tab->at(0.0)[1];
        // Align the sign with the frozen eigenvector.
        if (dot(direction(tab->at(0.0)[0]), e) < 0.0) {
            for (auto& st : tab->steps) st.r[0][0] += kPi;
        }
        return std::shared_ptr<const Table>(tab);
    };
    u_ = build(true);
    s_ = build(false);
}

Mat2 PrincipalSolutions::A(double t) const {
    Mat2 a = sys_.jac(side_, Point2{});
    const double eps = sys_.epsilon();
    if (eps != 0.0 && sys_.perturbation().g) a = a + eps * sys_.g_jac(t, Point2{});
    return a;
}

namespace {

void check_range(const PrincipalSolutions& p, double t) {
    if (t < p.t_min() - 1e-12 || t > p.t_max() + 1e-12) {
        std::ostringstream msg;
        msg << "time " << t << " outside the principal solution range [" << p.t_min() << ", " << p.t_max() << "]";
        throw Error(ErrorCode::IntervalOutOfRange, msg.str());
    }
}

}  // namespace

Point2 PrincipalSolutions::v_u(double t) const {
    check_range(*this, t);
    return direction(u_->at(t)[0]);
}
Point2 PrincipalSolutions::v_s(double t) const {
    check_range(*this, t);
    return direction(s_->at(t)[0]);
}
double PrincipalSolutions::log_norm_u(double t) const {
    check_range(*this, t);
    return u_->at(t)[1];
}
double PrincipalSolutions::log_norm_s(double t) const {
    check_range(*this, t);
    return s_->at(t)[1];
}
Point2 PrincipalSolutions::w_u(double t) const { return std::exp(log_norm_u(t)) * v_u(t); }
Point2 PrincipalSolutions::w_s(double t) const { return std::exp(log_norm_s(t)) * v_s(t); }
double PrincipalSolutions::z_u(double t, double s) const { return std::exp(log_norm_u(t) - log_norm_u(s)); }
double PrincipalSolutions::z_s(double t, double s) const { return std::exp(log_norm_s(t) - log_norm_s(s)); }

Mat2 PrincipalSolutions::projection(double tau) const {
    const Point2 u = v_u(tau);
    const Point2 s = v_s(tau);
    // Pξ = (u ∧ ξ)/(u ∧ s) s.
    const double den = wedge(u, s);
    return (1.0 / den) * outer(s, Point2{-u.x2, u.x1});
}

namespace {

std::vector<double> grid_times(const DichotomyGrid& g) {
    std::vector<double> ts;
    for (int i = 0; i < g.points; ++i) ts.push_back(g.center - g.span / 2.0 + g.span * i / (g.points - 1));
    return ts;
}

/// Deviations ρ = ln z(t, s) − λ(t − s) for all grid pairs, with |t − s|.
std::vector<std::pair<double, double>> deviations(const DichotomyData& d) {
    std::vector<std::pair<double, double>> out;
    const auto ts = grid_times(d.grid);
    for (const PrincipalSolutions* p : {d.plus.get(), d.minus.get()}) {
        std::vector<double> lu, ls;
        for (double t : ts) {
            lu.push_back(p->log_norm_u(t));
            ls.push_back(p->log_norm_s(t));
        }
        for (std::size_t i = 0; i < ts.size(); ++i) {
            for (std::size_t j = 0; j < ts.size(); ++j) {
                const double dt = ts[i] - ts[j];
                if (std::abs(dt) > d.grid.span) continue;
                out.emplace_back(std::abs(lu[i] - lu[j] - p->lambda_u() * dt), std::abs(dt));
                out.emplace_back(std::abs(ls[i] - ls[j] - p->lambda_s() * dt), std::abs(dt));
            }
        }
    }
    return out;
}

}  // namespace

double DichotomyData::band_excess(double k1, double k_eps) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [rho, dt] : deviations(*this)) worst = std::max(worst, rho - std::log(k1) - k_eps * dt);
    return worst;
}

DichotomyData dichotomy_data(const PiecewiseSystem& sys, const PrincipalOptions& opt, const DichotomyGrid& grid) {
    if (grid.points < 2 || !(grid.span > 0.0)) throw Error(ErrorCode::DegenerateInput, "dichotomy grid is empty");
    if (grid.center - grid.span / 2.0 < opt.t_min || grid.center + grid.span / 2.0 > opt.t_max) {
        throw Error(ErrorCode::IntervalOutOfRange, "dichotomy grid exceeds the principal solution range");
    }
    DichotomyData d;
    d.plus = std::make_shared<const PrincipalSolutions>(sys, Side::Plus, opt);
    d.minus = std::make_shared<const PrincipalSolutions>(sys, Side::Minus, opt);
    d.epsilon = sys.epsilon();
    d.grid = grid;

    const auto dev = deviations(d);
    // kε: largest mean drift rate over the longest separations; k₁ absorbs the rest.
    double k_eps = 0.0;
    for (const auto& [rho, dt] : dev) {
        if (dt >= 0.5 * grid.span) k_eps = std::max(k_eps, rho / dt);
    }
    double log_k1 = 0.0;
    for (const auto& [rho, dt] : dev) log_k1 = std::max(log_k1, rho - k_eps * dt);
    d.k_eps_est = k_eps;
    d.k1_est = std::exp(log_k1);
    d.k_est = d.epsilon > 0.0 ? k_eps / d.epsilon : 0.0;

    double pmax = 0.0;
    double vdev = 0.0;
    double gx = 0.0;
    for (double t : grid_times(grid)) {
        for (const PrincipalSolutions* p : {d.plus.get(), d.minus.get()}) {
            const Mat2 P = p->projection(t);
            pmax = std::max({pmax, P.norm2(), (Mat2::identity() - P).norm2()});
            vdev = std::max({vdev, norm(p->v_u(t) - p->eigen_u()), norm(p->v_s(t) - p->eigen_s())});
        }
        if (sys.perturbation().g) gx = std::max(gx, sys.g_jac(t, Point2{}).norm2());
    }
    d.k2_est = 2.0 * pmax;
    d.C_est = d.epsilon > 0.0 ? vdev / d.epsilon : 0.0;
    d.gx_sup = gx;
    return d;
}

CocycleReport cocycle_check(const DichotomyData& data, int samples, std::uint64_t seed, double window) {
    CocycleReport r;
    r.samples = samples;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(data.grid.center - window, data.grid.center + window);
    for (int k = 0; k < samples; ++k) {
        const double t = u(rng), q = u(rng), s = u(rng);
        for (const PrincipalSolutions* p : {data.plus.get(), data.minus.get()}) {
            const double zu = p->z_u(t, s);
            const double zs = p->z_s(t, s);
            r.max_residual = std::max(r.max_residual, std::abs(zu - p->z_u(t, q) * p->z_u(q, s)) / zu);
            r.max_residual = std::max(r.max_residual, std::abs(zs - p->z_s(t, q) * p->z_s(q, s)) / zs);
            r.max_identity = std::max({r.max_identity, std::abs(p->z_u(s, s) - 1.0), std::abs(p->z_s(s, s) - 1.0)});
        }
    }
    return r;
}

ProjectionReport projection_bound_check(const DichotomyData& data, Side side, int samples, std::uint64_t seed,
                                        double window) {
    const PrincipalSolutions& p = data.side(side);
    ProjectionReport r;
    r.samples = samples;
    r.k2 = data.k2_est;
    std::mt19937_64 rng(seed);
    const double half = data.grid.span / 2.0 - window;
    std::uniform_real_distribution<double> us(data.grid.center - half, data.grid.center + half);
    std::uniform_real_distribution<double> ud(-window, window);
    std::normal_distribution<double> un(0.0, 1.0);
    auto rhs = [&p](double t, const rk::Vec<2>& y) {
        const Point2 v = p.A(t) * Point2{y[0], y[1]};
        return rk::Vec<2>{v.x1, v.x2};
    };
    auto propagate = [&](double s, double t, const Point2& xi) {
        const rk::Vec<2> y = rk::integrate_smooth<2>(rhs, s, rk::Vec<2>{xi.x1, xi.x2}, t, 1e-12, 1e-300, 0.25,
                                                     [](const rk::DenseStep<2>&) {});
        return Point2{y[0], y[1]};
    };
    for (int k = 0; k < samples; ++k) {
        const double s = us(rng);
        const double t = s + ud(rng);
        const Point2 xi{un(rng), un(rng)};
        const Mat2 P = p.projection(s);
        const double nx = norm(xi);
        const double rs = norm(propagate(s, t, P * xi)) / (p.z_s(t, s) * nx);
        const double ru = norm(propagate(s, t, (Mat2::identity() - P) * xi)) / (p.z_u(t, s) * nx);
        r.max_ratio_stable = std::max(r.max_ratio_stable, rs);
        r.max_ratio_unstable = std::max(r.max_ratio_unstable, ru);
        if (rs > r.k2 || ru > r.k2) ++r.violations;
    }
    return r;
}

SandwichReport anchor_decay_sandwich(const LeafAnchors& anchors, Leaf leaf, double tau, double fit_window,
                                     double verify_window) {
    const RateConstants rates = rate_constants(anchors.spectrum());
    SandwichReport r;
    r.lambda_lo = rates.lambda_lo;
    r.lambda_hi = rates.lambda_hi;
    const double sg = leaf == Leaf::Stable ? 1.0 : -1.0;
    auto norm_at = [&](double th) { return norm(anchors.leaf_point(leaf, AnchorSection::L0, tau, tau + sg * th)); };
    auto upper = [&](double th) { return std::exp(-0.5 * r.lambda_lo * th); };
    auto lower = [&](double th) { return std::exp(-2.0 * r.lambda_hi * th); };
    const int n_fit = 500;
    double c = 1.0;
    for (int k = 0; k <= n_fit; ++k) {
        const double th = fit_window * k / n_fit;
        const double x = norm_at(th);
        c = std::max({c, x / upper(th), lower(th) / x});
    }
    r.c_k = c * (1.0 + 1e-6);
    const int n_ver = 1500;
    for (int k = 0; k <= n_ver; ++k) {
        const double th = verify_window * k / n_ver;
        const double x = norm_at(th);
        r.worst_upper = std::max(r.worst_upper, x / (r.c_k * upper(th)));
        r.worst_lower = std::max(r.worst_lower, lower(th) / (r.c_k * x));
    }
    return r;
}

SaddlePassageDecomposition decompose_saddle_passage(const LeafAnchors& anchors, const PrincipalSolutions& plus, double tau,
                                                    double d, double M, double delta, int samples) {
    if (plus.side() != Side::Plus) throw Error(ErrorCode::DegenerateInput, "decomposition needs the Ω⁺ principal solutions");
    if (!(d >= 0.0) || !(M > 0.0)) throw Error(ErrorCode::DegenerateInput, "decomposition needs d ≥ 0 and M > 0");
    const SaddleSpectrum& sp = anchors.spectrum();
    const PiecewiseSystem& sys = anchors.system();
    SaddlePassageDecomposition r;
    r.tau = tau;
    r.d = d;
    r.M = M;
    const Point2 pis = anchors.pi_s(tau);
    r.Q = pis - d * sp.v_u_plus;
    const Transversal& tr = anchors.S_plus();
    const double scale = 1e-10 * (1.0 + norm(r.Q));
    if (std::abs(tr.level(r.Q)) > scale || !tr.covers(r.Q)) {
        throw Error(ErrorCode::NotOnTransversal, "Q = pi_s(tau) - d v_u^+ is not on the saddle transversal");
    }
    const double ld = std::abs(std::log(delta));
    r.D0 = 1.0 / (ld * ld);
    r.M0 = 2.0 * ld / rate_constants(sp).lambda_lo;
    r.D_ell = d * plus.z_u(M + tau, tau);
    r.bound = r.D_ell * std::pow(anchors.log_varpi(), -sys.holder_alpha() / 2.0);

    StopSet stops;
    stops.t_end = tau + M;
    stops.switch_stop = SwitchStop{1, 1, {}};
    const Trajectory orbit = integrate(sys, tau, r.Q, Direction::Fwd, stops, anchors.options().tol);
    if (orbit.t_end < tau + M - 1e-9 * (1.0 + M)) {
        std::ostringstream msg;
        msg << "orbit reaches the switching curve at theta = " << orbit.t_end - tau << " < M = " << M;
        throw Error(ErrorCode::PassageLeftRegion, msg.str());
    }
    for (int k = 0; k <= samples; ++k) {
        const double th = M * k / samples;
        const double t = th + tau;
        const Point2 x = orbit.at(std::min(t, orbit.t_end));
        const Point2 ys = anchors.leaf_point(Leaf::Stable, AnchorSection::Transversal, tau, t);
        const Point2 l = d == 0.0 ? Point2{} : -d * plus.z_u(t, tau) * plus.v_u(t);
        const Point2 h = x - ys - l;
        r.theta.push_back(th);
        r.x.push_back(x);
        r.y_s.push_back(ys);
        r.ell.push_back(l);
        r.h.push_back(h);
        r.weighted_norm_h = std::max(r.weighted_norm_h, norm(h) / plus.z_u(t, M + tau));
    }
    return r;
}

double saddle_passage_time(const LeafAnchors& anchors, double tau, double d, double horizon) {
    const Point2 Q = anchors.pi_s(tau) - d * anchors.spectrum().v_u_plus;
    const Transversal& tr = anchors.S_plus();
    if (!(d > 0.0) || !tr.covers(Q)) {
        throw Error(ErrorCode::NotOnTransversal, "Q = pi_s(tau) - d v_u^+ is not on the saddle transversal");
    }
    StopSet stops;
    stops.t_end = tau + horizon;
    stops.switch_stop = SwitchStop{1, 1, {}};
    const Trajectory orbit = integrate(anchors.system(), tau, Q, Direction::Fwd, stops, anchors.options().tol);
    if (orbit.termination != Termination::HitTarget) {
        throw Error(ErrorCode::PassageLeftRegion, "orbit does not reach the switching curve within the horizon");
    }
    return orbit.t_end - tau;
}

namespace {

/// sup over a disc of radius r of ‖f_x^±(x) − f_x^±(0)‖/‖x‖^α (both sides).
double hoelder_constant(const PiecewiseSystem& sys, double alpha, double radius) {
    double best = 0.0;
    for (Side side : {Side::Plus, Side::Minus}) {
        const Mat2 J0 = sys.jac(side, Point2{});
        for (int i = 1; i <= 16; ++i) {
            const double rr = radius * i / 16.0;
            for (int j = 0; j < 32; ++j) {
                const double a = 2.0 * kPi * j / 32.0;
                const Point2 x{rr * std::cos(a), rr * std::sin(a)};
                best = std::max(best, (sys.jac(side, x) - J0).norm2() / std::pow(rr, alpha));
            }
        }
    }
    return best;
}

}  // namespace

VarpiPolicy varpi_policy(const PiecewiseSystem& sys, const Homoclinic& gamma, const DichotomyData& data, double mu2,
                         double cap, double hoelder_radius) {
    VarpiPolicy v;
    v.alpha = sys.holder_alpha();
    v.cap = cap;
    v.k1 = data.k1_est;
    v.k2 = data.k2_est;
    const SaddleSpectrum& sp = gamma.spectrum();
    v.K_plus = std::abs(sp.K_plus());
    v.N_alpha = hoelder_constant(sys.with_epsilon(0.0), v.alpha, hoelder_radius);
    // ã_s: size of the stable leaf relative to its linear decay, measured on
    // γ from the point where ‖γ‖ = 1/cap; c_s = 2.02·ã_s.
    const double target = 1.0 / cap;
    double t0 = 0.0;
    while (norm(gamma.gamma(t0)) > target && t0 < 200.0) t0 += 0.01;
    double a_s = 0.0;
    const double ls = sp.lambda_s_plus;
    for (int k = 0; k <= 2000; ++k) {
        const double th = 20.0 * k / 2000.0;
        a_s = std::max(a_s, norm(gamma.gamma(t0 + th)) * cap / std::exp(ls * th));
    }
    v.c_s = 2.02 * a_s;
    const RateConstants r = rate_constants(sp);
    const double a = v.alpha;
    v.C = (2.0 * std::pow(v.c_s, a) + 1.0) * v.N_alpha * 2.0 * v.k2 * std::pow(v.k1, 2.0 + 2.0 * a) * (a + 1.0) /
          (r.lambda_lo * a);
    double req = std::max(std::pow(2.0 * v.C, 2.0 / a), 4.0);
    const double Kc = v.K_plus * v.c_s;
    req = std::max(req, Kc * v.k1 * v.k1 * (1.0 + 1e-12));
    // k₁²L/(K⁺c_s) < e^{μ₂L/4}: the left side grows linearly, the right
    // exponentially, so step L up until it holds.
    if (Kc > 0.0 && mu2 > 0.0) {
        double L = req;
        while (v.k1 * v.k1 * L / Kc >= std::exp(mu2 * L / 4.0) && L < 1e12) L *= 1.01;
        req = L;
    }
    v.required = req;
    v.capped = req > cap;
    v.log_varpi = std::min(req, cap);
    return v;
}

}  // namespace homloop
