#include "homloop/melnikov.hpp"

#include "homloop/chart.hpp"
#include "homloop/errors.hpp"
#include "homloop/rk.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace homloop {

namespace {

constexpr double kLogOverflow = 700.0;

/// ln w(t) on one half-line, tabulated by dense steps with |t| increasing.
struct WeightTable {
    std::vector<rk::DenseStep<1>> steps;
    double reach = 0.0;  ///< |t| covered

    [[nodiscard]] double at(double t) const {
        if (t == 0.0 || steps.empty()) return 0.0;
        const double a = std::abs(t);
        auto it = std::lower_bound(steps.begin(), steps.end(), a,
                                   [](const rk::DenseStep<1>& st, double v) { return std::abs(st.t1()) < v; });
        if (it == steps.end()) --it;
        return it->at(t)[0];
    }
};

}  // namespace

struct Melnikov::Data {
    PiecewiseSystem sys;
    Homoclinic gamma;
    TimeField g;
    std::vector<double> g_phases;  ///< times sampled to bound sup_s ‖g(s, x)‖
    WeightTable minus;
    WeightTable plus;
    double horizon_minus = 0.0;
    double horizon_plus = 0.0;

    Data(PiecewiseSystem s, Homoclinic h) : sys(std::move(s)), gamma(std::move(h)) {}

    [[nodiscard]] Side side(double t) const { return t < 0.0 ? Side::Minus : Side::Plus; }

    [[nodiscard]] double trace(double t) const { return sys.jac(side(t), gamma.gamma(t)).trace(); }

    /// Extends the table of ln w on the half-line of sign `sg` to |t| = reach.
    void extend(WeightTable& tab, double sg, double reach) const {
        if (reach <= tab.reach) return;
        const double y0 = tab.steps.empty() ? 0.0 : tab.at(sg * tab.reach);
        auto rhs = [this](double t, const rk::Vec<1>&) { return rk::Vec<1>{-trace(t)}; };
        rk::integrate_smooth<1>(rhs, sg * tab.reach, rk::Vec<1>{y0}, sg * reach, 1e-12, 1e-14, 0.5,
                                [&tab](const rk::DenseStep<1>& st) { tab.steps.push_back(st); });
        tab.reach = reach;
    }

    [[nodiscard]] double bound(double t, double logw) const {
        const Point2 x = gamma.gamma(t);
        double gmax = 0.0;
        for (double s : g_phases) gmax = std::max(gmax, norm(g(s, x, 0.0)));
        return norm(sys.f(side(t), x)) * gmax * std::exp(logw);
    }

    /// Smallest integer |t| beyond which the integrand bound stays below tol.
    double find_horizon(WeightTable& tab, double sg, const MelnikovOptions& opt) {
        for (double T = 1.0; T <= opt.max_horizon; T += 1.0) {
            extend(tab, sg, T);
            const double lw = tab.at(sg * T);
            if (lw > kLogOverflow) {
                std::ostringstream msg;
                msg << "trace weight exceeds e^" << kLogOverflow << " at t = " << sg * T
                    << " before the Melnikov integrand decays";
                throw Error(ErrorCode::WeightOverflow, msg.str());
            }
            bool small = true;
            for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                const double t = sg * (T + frac);
                extend(tab, sg, T + 1.0);
                if (bound(t, tab.at(t)) >= opt.truncation_tol) small = false;
            }
            if (small) return T;
        }
        std::ostringstream msg;
        msg << "Melnikov integrand does not decay below " << opt.truncation_tol << " within |t| <= " << opt.max_horizon;
        throw Error(ErrorCode::WeightOverflow, msg.str());
    }

    [[nodiscard]] double integrand(double t, double alpha) const {
        const Point2 x = gamma.gamma(t);
        const WeightTable& tab = t < 0.0 ? minus : plus;
        return std::exp(tab.at(t)) * wedge(sys.f(side(t), x), g(t + alpha, x, 0.0));
    }
};

Melnikov::Melnikov(const PiecewiseSystem& sys, const Homoclinic& gamma, MelnikovOptions opt) : opt_(opt) {
    auto d = std::make_shared<Data>(sys, gamma);
    d->g = sys.perturbation().g;
    if (d->g) {
        const Perturbation& p = sys.perturbation();
        if (p.autonomous) {
            d->g_phases = {0.0};
        } else {
            const double span = p.period.value_or(2.0 * kPi);
            for (int k = 0; k < 16; ++k) d->g_phases.push_back(span * k / 16.0);
        }
        d->horizon_minus = d->find_horizon(d->minus, -1.0, opt);
        d->horizon_plus = d->find_horizon(d->plus, 1.0, opt);
        // Tables reach twice the horizons (for the truncation check) unless the
        // weight overflows first.
        for (auto [tab, sg, H] : {std::tuple{&d->minus, -1.0, d->horizon_minus}, std::tuple{&d->plus, 1.0, d->horizon_plus}}) {
            for (double T = tab->reach + 1.0; T <= 2.0 * H + 1.0; T += 1.0) {
                d->extend(*tab, sg, T);
                if (tab->at(sg * T) > kLogOverflow) break;
            }
        }
    }
    d_ = std::move(d);
}

double Melnikov::integrand(double t, double alpha) const {
    if (!d_->g) return 0.0;
    return d_->integrand(t, alpha);
}

double Melnikov::log_weight(double t) const { return t < 0.0 ? d_->minus.at(t) : d_->plus.at(t); }
double Melnikov::horizon_minus() const { return d_->horizon_minus; }
double Melnikov::horizon_plus() const { return d_->horizon_plus; }

double Melnikov::value_with_horizon_factor(double alpha, double factor) const {
    if (!d_->g) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto f = [this, alpha](double t) { return d_->integrand(t, alpha); };
    // Unit subintervals keep the oscillatory factors well resolved; the
    // negative half-line is summed towards 0 so that small tails come first.
    double total = 0.0;
    const double Hm = std::min(factor * d_->horizon_minus, d_->minus.reach);
    const double Hp = std::min(factor * d_->horizon_plus, d_->plus.reach);
    for (double a = Hm; a > 0.0; a -= 1.0) {
        const double lo = -a;
        const double hi = std::min(0.0, -a + 1.0);
        total += GK::integrate(f, lo, hi, 15, opt_.quad_tol);
    }
    for (double b = Hp; b > 0.0; b -= 1.0) {
        const double lo = std::max(0.0, b - 1.0);
        total += GK::integrate(f, lo, b, 15, opt_.quad_tol);
    }
    return total;
}

double Melnikov::value(double alpha) const { return value_with_horizon_factor(alpha, 1.0); }

MelnikovProfile Melnikov::profile(const std::vector<double>& alphas) const {
    MelnikovProfile p;
    p.alphas = alphas;
    p.values.reserve(alphas.size());
    for (double a : alphas) p.values.push_back(value(a));
    if (!d_->sys.perturbation().autonomous) p.period = d_->sys.perturbation().period;
    p.horizon_minus = d_->horizon_minus;
    p.horizon_plus = d_->horizon_plus;
    find_zeros(p, [this](double a) { return value(a); }, opt_);
    return p;
}

std::vector<double> default_alpha_grid(const PiecewiseSystem& sys, int n) {
    const double span = sys.perturbation().period.value_or(2.0 * kPi);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out.push_back(span * k / n);
    return out;
}

void find_zeros(MelnikovProfile& profile, const std::function<double(double)>& M, const MelnikovOptions& opt) {
    profile.zeros.clear();
    profile.degenerate.clear();
    const auto& a = profile.alphas;
    const auto& v = profile.values;
    const std::size_t n = a.size();
    if (n == 0) return;
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    if (vmax == 0.0) return;  // M ≡ 0: every point is a (degenerate) zero; nothing to isolate

    auto classify = [&](double alpha) {
        const double h = opt.slope_step;
        const double slope = (M(alpha + h) - M(alpha - h)) / (2.0 * h);
        const MelnikovZero z{alpha, slope};
        if (std::abs(slope) > opt.nondegeneracy * vmax) profile.zeros.push_back(z);
        else profile.degenerate.push_back(z);
    };
    auto refine = [&](double lo, double hi, double flo, double fhi) {
        boost::uintmax_t iters = 200;
        const auto tol = [&](double x, double y) { return std::abs(x - y) <= 1e-15 * (1.0 + std::abs(x)); };
        const auto r = boost::math::tools::toms748_solve(M, lo, hi, flo, fhi, tol, iters);
        double z = 0.5 * (r.first + r.second);
        if (std::abs(M(r.first)) < std::abs(M(z))) z = r.first;
        if (std::abs(M(r.second)) < std::abs(M(z))) z = r.second;
        return z;
    };

    const bool wrap = profile.period.has_value() && n > 1;
    const std::size_t pairs = wrap ? n : n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(v[i]) < opt.zero_tol) classify(a[i]);
    }
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t j = (i + 1) % n;
        const double lo = a[i];
        const double hi = j == 0 ? a[0] + *profile.period : a[j];
        if (std::abs(v[i]) < opt.zero_tol || std::abs(v[j]) < opt.zero_tol) continue;
        if ((v[i] < 0.0) == (v[j] < 0.0)) continue;
        double z = refine(lo, hi, v[i], v[j]);
        if (j == 0 && profile.period && z >= *profile.period) z -= *profile.period;
        classify(z);
    }
    auto by_alpha = [](const MelnikovZero& x, const MelnikovZero& y) { return x.alpha < y.alpha; };
    std::sort(profile.zeros.begin(), profile.zeros.end(), by_alpha);
    std::sort(profile.degenerate.begin(), profile.degenerate.end(), by_alpha);
}

SplittingReport splitting_check(const PiecewiseSystem& base, const Homoclinic& gamma, const std::vector<double>& tau_grid,
                                const std::vector<double>& eps_grid, double log_varpi, const AnchorOptions& anchor_opt,
                                const MelnikovOptions& mel_opt) {
    SplittingReport rep;
    const Melnikov mel(base, gamma, mel_opt);
    const DirectedChart chart(base.with_epsilon(0.0), gamma);
    const Point2 g0 = gamma.gamma0();
    const double e_wedge_f = wedge(chart.tangent(chart.arclength(g0)), base.f(Side::Plus, g0));
    rep.predicted_constant = 1.0 / e_wedge_f;
    const double orientation = e_wedge_f > 0.0 ? 1.0 : -1.0;

    double mmax = 0.0;
    std::vector<double> mvals;
    for (double tau : tau_grid) {
        mvals.push_back(mel.value(tau));
        mmax = std::max(mmax, std::abs(mvals.back()));
    }
    const auto profile = mel.profile(default_alpha_grid(base, 64));
    for (double v : profile.values) mmax = std::max(mmax, std::abs(v));

    rep.signs_ok = true;
    rep.ratio_min = std::numeric_limits<double>::infinity();
    rep.ratio_max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    int count = 0;
    for (double eps : eps_grid) {
        const PiecewiseSystem sys = base.with_epsilon(eps);
        const LeafAnchors anchors(sys, gamma, log_varpi, anchor_opt);
        for (std::size_t i = 0; i < tau_grid.size(); ++i) {
            SplittingSample s;
            s.tau = tau_grid[i];
            s.epsilon = eps;
            s.melnikov = mvals[i];
            s.splitting = chart.directed_distance(anchors.P_u(s.tau), anchors.P_s(s.tau));
            s.near_zero = std::abs(s.melnikov) < 0.1 * mmax;
            if (!s.near_zero && eps > 0.0) {
                s.ratio = s.splitting / (eps * s.melnikov);
                s.sign_ok = (s.splitting > 0.0) == (orientation * s.melnikov > 0.0);
                rep.ratio_min = std::min(rep.ratio_min, s.ratio);
                rep.ratio_max = std::max(rep.ratio_max, s.ratio);
                sum += s.ratio;
                ++count;
            } else {
                s.sign_ok = true;
            }
            rep.signs_ok = rep.signs_ok && s.sign_ok;
            rep.samples.push_back(s);
        }
    }
    if (count > 0) {
        rep.relative_spread = (rep.ratio_max - rep.ratio_min) / std::abs(sum / count);
        rep.ratio_ok = rep.relative_spread <= 0.15;
    } else {
        rep.ratio_min = rep.ratio_max = 0.0;
        rep.ratio_ok = false;
    }
    return rep;
}

}  // namespace homloop
