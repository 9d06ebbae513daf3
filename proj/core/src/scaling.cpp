#include "homloop/scaling.hpp"

#include "homloop/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace homloop {

SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DegenerateInput, "least squares needs equally many x and y");
    const std::set<double> distinct(x.begin(), x.end());
    if (distinct.size() < 2) throw Error(ErrorCode::InsufficientGrid, "least squares needs two distinct abscissae");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeFit f;
    f.n = static_cast<int>(x.size());
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ssr += r * r;
        }
        f.std_error = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    f.half_width = 2.0 * f.std_error;
    return f;
}

const ExponentFit* ScalingReport::find(const std::string& name) const {
    for (const auto& f : fits)
        if (f.name == name) return &f;
    return nullptr;
}

bool ScalingReport::pass() const {
    return !fits.empty() && std::all_of(fits.begin(), fits.end(), [](const ExponentFit& f) { return f.pass; });
}

namespace {

struct Quantity {
    const char* name;
    bool log_y;          ///< y = ln value (displacements) or the value itself (times)
    double LoopResult::*field;
};

/// The four fitted quantities of one direction and their theoretical values.
std::vector<std::pair<Quantity, double>> quantities(Direction dir, const RateConstants& th) {
    if (dir == Direction::Fwd) {
        return {{{"sigma_fwd", true, &LoopResult::D_one}, th.sigma_fwd},
                {{"sigma_fwd_plus", true, &LoopResult::D_half}, th.sigma_fwd_plus},
                {{"Sigma_fwd", false, &LoopResult::T_one}, th.Sigma_fwd},
                {{"Sigma_fwd_plus", false, &LoopResult::T_half}, th.Sigma_fwd_plus}};
    }
    return {{{"sigma_bwd", true, &LoopResult::D_one}, th.sigma_bwd},
            {{"sigma_bwd_minus", true, &LoopResult::D_half}, th.sigma_bwd_minus},
            {{"Sigma_bwd", false, &LoopResult::T_one}, th.Sigma_bwd},
            {{"Sigma_bwd_minus", false, &LoopResult::T_half}, th.Sigma_bwd_minus}};
}

SlopeFit fit_quantity(const std::vector<const LoopResult*>& loops, const Quantity& q) {
    std::vector<double> x, y;
    for (const LoopResult* r : loops) {
        const double v = r->*(q.field);
        if (q.log_y) {
            if (!(v > 0.0)) throw Error(ErrorCode::InsufficientGrid, std::string("non-positive value in fit of ") + q.name);
            x.push_back(std::log(r->d));
            y.push_back(std::log(v));
        } else {
            x.push_back(std::abs(std::log(r->d)));
            y.push_back(v);
        }
    }
    return least_squares(x, y);
}

}  // namespace

ScalingReport fit_exponents(const std::vector<LoopResult>& batch, const RateConstants& theory, double mu,
                            const FitOptions& opt) {
    ScalingReport rep;
    rep.theory = theory;
    rep.mu_used = mu;
    std::set<double> ds, taus;
    for (const auto& r : batch) {
        if (r.d <= opt.d_max) ds.insert(r.d);
        taus.insert(r.tau);
    }
    rep.d_grid.assign(ds.begin(), ds.end());
    rep.tau_grid.assign(taus.begin(), taus.end());

    for (Direction dir : {Direction::Fwd, Direction::Bwd}) {
        std::vector<const LoopResult*> loops;
        std::set<double> dd;
        for (const auto& r : batch) {
            if (r.direction == dir && r.d <= opt.d_max) {
                loops.push_back(&r);
                dd.insert(r.d);
            }
        }
        if (loops.empty()) continue;
        if (static_cast<int>(dd.size()) < opt.min_points ||
            std::log10(*dd.rbegin() / *dd.begin()) < opt.min_decades - 1e-12) {
            std::ostringstream msg;
            msg << to_string(dir) << " batch has " << dd.size() << " distinct d values spanning "
                << std::log10(*dd.rbegin() / *dd.begin()) << " decades; need " << opt.min_points << " over "
                << opt.min_decades;
            throw Error(ErrorCode::InsufficientGrid, msg.str());
        }
        for (const auto& [q, th] : quantities(dir, theory)) {
            ExponentFit e;
            e.name = q.name;
            e.theory = th;
            e.fit = fit_quantity(loops, q);
            e.mu_effective = std::max(mu, 3.0 * e.fit.std_error);
            e.pass = std::abs(e.fit.slope - th) <= e.mu_effective;
            rep.fits.push_back(e);

            if (taus.size() > 1) {
                double lo = INFINITY, hi = -INFINITY;
                for (double tau : taus) {
                    std::vector<const LoopResult*> sub;
                    for (const LoopResult* r : loops)
                        if (r->tau == tau) sub.push_back(r);
                    if (sub.size() < 2) continue;
                    const double s = fit_quantity(sub, q).slope;
                    lo = std::min(lo, s);
                    hi = std::max(hi, s);
                }
                if (hi >= lo) rep.tau_spread[q.name] = hi - lo;
            }
        }
    }
    return rep;
}

std::vector<LoopResult> loop_batch(const LoopMap& map, const std::vector<double>& d_grid,
                                   const std::vector<double>& tau_grid, bool forward, bool backward, int threads,
                                   bool keep_failures) {
    struct Cell {
        Direction dir;
        double tau;
        double d;
    };
    std::vector<Cell> cells;
    for (Direction dir : {Direction::Fwd, Direction::Bwd}) {
        if ((dir == Direction::Fwd && !forward) || (dir == Direction::Bwd && !backward)) continue;
        for (double tau : tau_grid)
            for (double d : d_grid) cells.push_back({dir, tau, d});
    }
    std::vector<LoopResult> out(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                const Cell& c = cells[i];
                out[i] = c.dir == Direction::Fwd ? map.forward(c.d, c.tau) : map.backward(c.d, c.tau);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!errors[i]) continue;
        if (!keep_failures) std::rethrow_exception(errors[i]);
        LoopResult& r = out[i];
        r = LoopResult{};
        r.d = cells[i].d;
        r.tau = cells[i].tau;
        r.direction = cells[i].dir;
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        r.T_half = r.T_one = r.D_half = r.D_one = nan;
        r.segment_times.fill(nan);
        r.segment_disps.fill(nan);
        r.sup_dev_first_half = r.sup_dev_second_half = nan;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            r.status = e.what();
        }
    }
    return out;
}

DeviationReport deviation_suite(const std::vector<LoopResult>& batch, const RateConstants& theory, double mu) {
    DeviationReport rep;
    for (const auto& r : batch) {
        DeviationEntry e;
        e.d = r.d;
        e.tau = r.tau;
        e.direction = r.direction;
        e.dev_first = r.sup_dev_first_half;
        e.dev_second = r.sup_dev_second_half;
        const double sigma = r.direction == Direction::Fwd ? theory.sigma_fwd_plus : theory.sigma_bwd_minus;
        e.bound = std::pow(r.d, sigma - mu);
        if (!e.ok()) ++rep.violations;
        rep.worst_margin = std::max(rep.worst_margin, std::max(e.dev_first, e.dev_second) / e.bound);
        rep.entries.push_back(e);
    }
    return rep;
}

EllMismatchReport ell_mismatch_suite(const LoopMap& map, const std::vector<double>& d_grid, double tau, double mu1,
                                     int arc_samples) {
    EllMismatchReport rep;
    rep.tau = tau;
    rep.delta = map.delta();
    rep.mu1 = mu1;
    const LeafAnchors& anchors = map.anchors();
    std::vector<double> lx, ly;
    for (double d : d_grid) {
        EllMismatchEntry e;
        e.d = d;
        e.mismatch_bound = d * std::pow(rep.delta, -mu1 / 2.0);
        e.arc_bound = d * std::pow(rep.delta, -mu1);
        const LoopResult r = map.forward(d, tau);
        if (r.segments_available) {
            e.measured = true;
            const double t1 = tau + r.segment_times[0];
            e.mismatch = norm(r.P_first - anchors.leaf_point(Leaf::Stable, AnchorSection::L0, tau, t1));
            StopSet stops;
            stops.t_end = t1;
            const Trajectory arc = integrate(anchors.system(), tau, r.start, Direction::Fwd, stops, map.options().tol);
            for (int k = 0; k <= arc_samples; ++k) {
                const double t = tau + (t1 - tau) * k / arc_samples;
                e.arc_deviation = std::max(
                    e.arc_deviation, norm(arc.at(t) - anchors.leaf_point(Leaf::Stable, AnchorSection::L0, tau, t)));
            }
            if (e.mismatch > 0.0) {
                lx.push_back(std::log(d));
                ly.push_back(std::log(e.mismatch));
            }
        }
        if (!e.ok()) ++rep.violations;
        rep.entries.push_back(e);
    }
    if (std::set<double>(lx.begin(), lx.end()).size() >= 2) rep.slope = least_squares(lx, ly).slope;
    return rep;
}

const char* to_string(StabilityPrediction p) {
    switch (p) {
        case StabilityPrediction::StableInside: return "StableInside";
        case StabilityPrediction::UnstableInside: return "UnstableInside";
        case StabilityPrediction::Indeterminate: return "Indeterminate";
    }
    return "?";
}

namespace {

/// ∫ div f^±(γ(t)) ‖γ̇(t)‖ dt, Ω⁻ half for t < 0 and Ω⁺ half for t > 0.
double div_integral(const PiecewiseSystem& sys, const Homoclinic& gamma) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0.0;
    for (Side side : {Side::Minus, Side::Plus}) {
        const double sgn = side == Side::Plus ? 1.0 : -1.0;
        auto f = [&](double s) {
            const double t = sgn * s;
            return sys.jac(side, gamma.gamma(t)).trace() * norm(gamma.gamma_dot(t));
        };
        for (int k = 0; k < 200; ++k) {
            const double piece = GK::integrate(f, k, k + 1.0, 0, 1e-14);
            total += piece;
            if (k > 10 && norm(gamma.gamma(sgn * (k + 1.0))) < 1e-14) break;
        }
    }
    return total;
}

}  // namespace

StabilityProbe dulac_probe(const PiecewiseSystem& sys, const Homoclinic& gamma, int n_loops, double d0,
                           double log_varpi) {
    if (sys.epsilon() != 0.0) throw Error(ErrorCode::DegenerateInput, "the stability probe needs epsilon = 0");
    if (n_loops < 1) throw Error(ErrorCode::DegenerateInput, "the stability probe needs at least one loop");
    StabilityProbe p;
    p.d0 = d0;
    p.div_at_origin_plus = sys.jac(Side::Plus, Point2{}).trace();
    p.div_at_origin_minus = sys.jac(Side::Minus, Point2{}).trace();
    p.div_integral_along_gamma = div_integral(sys, gamma);

    constexpr double zero_tol = 1e-12;
    constexpr double integral_tol = 1e-9;
    const double a = p.div_at_origin_plus, b = p.div_at_origin_minus;
    if (a < -zero_tol && b < -zero_tol) {
        p.prediction = StabilityPrediction::StableInside;
    } else if (a > zero_tol && b > zero_tol) {
        p.prediction = StabilityPrediction::UnstableInside;
    } else if (std::abs(a) <= zero_tol && std::abs(b) <= zero_tol) {
        const double I = p.div_integral_along_gamma;
        p.prediction = I < -integral_tol   ? StabilityPrediction::StableInside
                       : I > integral_tol ? StabilityPrediction::UnstableInside
                                          : StabilityPrediction::Indeterminate;
    } else {
        p.prediction = StabilityPrediction::Indeterminate;
        p.note = "divergence at the saddle changes sign across the switching curve";
    }
    if (p.prediction == StabilityPrediction::Indeterminate && p.note.empty()) {
        p.note = "trace-free saddle with vanishing divergence integral";
    }

    const LeafAnchors anchors(sys, gamma, log_varpi);
    const LoopMap map(anchors, std::max(d0, 1e-2));
    p.displacements.push_back(d0);
    double d = d0;
    for (int k = 0; k < n_loops; ++k) {
        try {
            const LoopResult r = map.forward(d, 0.0);
            // Next start: directed distance of the return point inside P_s.
            d = map.chart().directed_distance(r.P_one, anchors.P_s(0.0));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::LeftRegion && e.code() != ErrorCode::DegenerateInput) throw;
            p.escaped = true;
            p.note = e.what();
            break;
        }
        if (!(d > 0.0) || d > map.delta()) {
            p.escaped = true;
            p.note = "return displacement left (0, delta]";
            break;
        }
        p.displacements.push_back(d);
        ++p.loops_completed;
    }
    if (p.loops_completed > 0) {
        p.empirical_contraction = std::pow(p.displacements.back() / d0, 1.0 / p.loops_completed);
    }
    switch (p.prediction) {
        case StabilityPrediction::StableInside:
            p.consistent = !p.escaped && p.empirical_contraction < 1.05;
            break;
        case StabilityPrediction::UnstableInside:
            p.consistent = p.escaped || p.empirical_contraction > 0.95;
            break;
        case StabilityPrediction::Indeterminate:
            p.consistent = true;
            break;
    }
    return p;
}

double find_connection_parameter(const std::function<PiecewiseSystem(double)>& family, double lo, double hi,
                                 double tol) {
    auto mismatch = [&](double a) {
        const PiecewiseSystem s = family(a);
        return shoot_branches(s, compute_spectrum(s)).mismatch;
    };
    const double f_lo = mismatch(lo);
    const double f_hi = mismatch(hi);
    if (!(f_lo * f_hi < 0.0)) {
        throw Error(ErrorCode::NoConnection, "shooting mismatch does not change sign on the parameter bracket");
    }
    std::uintmax_t it = 100;
    const auto r = boost::math::tools::toms748_solve(
        mismatch, lo, hi, f_lo, f_hi, [tol](double x, double y) { return std::abs(x - y) <= tol; }, it);
    return 0.5 * (r.first + r.second);
}

}  // namespace homloop
