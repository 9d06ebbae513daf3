/// Acceptance run: one PASS/FAIL line per criterion. `--only N` runs a single
/// criterion; the exit status is 0 iff every criterion that ran passed.

#include "homloop/dichotomy.hpp"
#include "homloop/errors.hpp"
#include "homloop/loopmap.hpp"
#include "homloop/melnikov.hpp"
#include "homloop/scaling.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace homloop;

namespace {

constexpr double kMu0 = 1.0 / 16.0;
const std::vector<double> kBatch{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
constexpr double kDelta = 0.0125;  // β/4 with β = 0.05
constexpr double kLogVarpi = 40.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Session {
    PiecewiseSystem sys;
    Homoclinic gamma;
    LeafAnchors anchors;
    RateConstants rates;
    explicit Session(PiecewiseSystem s)
        : sys(std::move(s)), gamma(homoclinic_orbit(sys)), anchors(sys, gamma, kLogVarpi),
          rates(rate_constants(gamma.spectrum())) {}
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

/// Fits of one ε = 0 batch (forward and backward, τ = 0).
struct BatchFit {
    std::vector<LoopResult> loops;
    ScalingReport report;
    double seconds = 0.0;
};

BatchFit duffing_batch(PiecewiseSystem sys) {
    const auto t0 = std::chrono::steady_clock::now();
    const Session s(std::move(sys));
    const LoopMap map(s.anchors, kDelta);
    BatchFit b;
    b.loops = loop_batch(map, kBatch, {0.0}, true, true);
    b.report = fit_exponents(b.loops, s.rates, kMu0);
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return b;
}

double slope(const BatchFit& b, const std::string& name) { return b.report.find(name)->fit.slope; }

Outcome c1() {
    const BatchFit b = duffing_batch(builtin::duffing());
    const double s = slope(b, "sigma_fwd");
    return {within(s, 1.0, kMu0) && b.seconds < 10.0,
            fmt("displacement slope %.6f (target 1 +- 1/16), runtime %.2f s (< 10 s)", s, b.seconds)};
}

Outcome c2() {
    const BatchFit b = duffing_batch(builtin::duffing());
    const double s1 = slope(b, "Sigma_fwd"), sh = slope(b, "Sigma_fwd_plus");
    return {within(s1, 1.0, kMu0) && within(sh, 0.5, kMu0),
            fmt("full-loop time slope %.6f (1 +- 1/16), half-loop time slope %.6f (1/2 +- 1/16)", s1, sh)};
}

Outcome c3() {
    const BatchFit b = duffing_batch(builtin::duffing());
    const double s = slope(b, "sigma_fwd_plus");
    return {within(s, 0.5, kMu0), fmt("half-displacement slope %.6f (1/2 +- 1/16)", s)};
}

Outcome c4() {
    const BatchFit b = duffing_batch(builtin::duffing_rescaled());
    const double tf = slope(b, "Sigma_fwd"), tb = slope(b, "Sigma_bwd");
    const double sf = slope(b, "sigma_fwd"), sb = slope(b, "sigma_bwd");
    return {within(tf, 0.75, kMu0) && within(tb, 0.75, kMu0) && within(sf, 1.0, kMu0) && within(sb, 1.0, kMu0),
            fmt("time slopes fwd %.6f bwd %.6f (3/4 +- 1/16); displacement slopes fwd %.6f bwd %.6f (1 +- 1/16)", tf,
                tb, sf, sb)};
}

Outcome c5() {
    int violations = 0;
    std::size_t loops = 0;
    double worst = 0.0;
    for (auto sys : {builtin::duffing(), builtin::duffing_rescaled()}) {
        const Session s(sys);
        const LoopMap map(s.anchors, kDelta);
        const auto batch = loop_batch(map, kBatch, {0.0}, true, true);
        const DeviationReport k = deviation_suite(batch, s.rates, kMu0);
        violations += k.violations;
        loops += k.entries.size();
        worst = std::max(worst, k.worst_margin);
    }
    return {violations == 0,
            fmt("%zu loops, %d violations, worst deviation/bound %.4f", loops, violations, worst)};
}

Outcome c6() {
    const Session damp(builtin::duffing(perturbations::damping(), 0.0));
    const Melnikov md(damp.sys, damp.gamma);
    double err = 0.0;
    for (double a : default_alpha_grid(damp.sys, 64)) err = std::max(err, std::abs(md(a) + 1.2));

    const Session forced(builtin::duffing(perturbations::x_cos(), 0.0));
    const Melnikov mc(forced.sys, forced.gamma);
    const MelnikovProfile prof = mc.profile(default_alpha_grid(forced.sys, 64));
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < prof.alphas.size(); ++k) {
        num += prof.values[k] * std::sin(prof.alphas[k]);
        den += std::sin(prof.alphas[k]) * std::sin(prof.alphas[k]);
    }
    const double A = num / den;
    double resid = 0.0;
    for (std::size_t k = 0; k < prof.alphas.size(); ++k)
        resid = std::max(resid, std::abs(prof.values[k] - A * std::sin(prof.alphas[k])));
    double zero_err = 0.0;
    bool slopes_ok = prof.degenerate.empty() && !prof.zeros.empty();
    for (const auto& z : prof.zeros) {
        zero_err = std::max(zero_err, std::abs(z.alpha - std::numbers::pi * std::round(z.alpha / std::numbers::pi)));
        slopes_ok = slopes_ok && std::abs(z.slope) > 1e-6 * std::abs(A);
    }
    const bool pass = err < 1e-9 && resid < 1e-6 * std::abs(A) && zero_err < 1e-6 && slopes_ok && prof.zeros.size() == 2;
    return {pass, fmt("damping |M + 6/5| <= %.2e; forcing amplitude %.12f, sinusoid residual %.2e, %zu zeros off "
                      "k*pi by <= %.2e, degenerate %zu",
                      err, A, resid, prof.zeros.size(), zero_err, prof.degenerate.size())};
}

Outcome c7() {
    const PiecewiseSystem base = builtin::duffing(perturbations::x_cos(), 0.0);
    const Homoclinic gamma = homoclinic_orbit(base);
    const double pi = std::numbers::pi;
    const SplittingReport r = splitting_check(base, gamma, {pi / 4, pi / 2, 5 * pi / 4}, {1e-3, 1e-4}, kLogVarpi);
    int sign_ok = 0;
    for (const auto& s : r.samples) sign_ok += s.sign_ok;
    return {r.pass(), fmt("signs %d/%zu match, ratio range [%.6f, %.6f], relative spread %.4f (<= 0.15)", sign_ok,
                          r.samples.size(), r.ratio_min, r.ratio_max, r.relative_spread)};
}

Outcome c8() {
    const Session s(builtin::duffing(perturbations::x_cos(), 1e-3));
    const DichotomyData d = dichotomy_data(s.sys);
    const CocycleReport c = cocycle_check(d, 1000, 20240611);
    const ProjectionReport pp = projection_bound_check(d, Side::Plus, 100, 7);
    const ProjectionReport pm = projection_bound_check(d, Side::Minus, 100, 8);
    const SandwichReport ss = anchor_decay_sandwich(s.anchors, Leaf::Stable, 0.0, 5.0, 15.0);
    const SandwichReport su = anchor_decay_sandwich(s.anchors, Leaf::Unstable, 0.0, 5.0, 15.0);
    const bool pass = c.max_residual < 1e-9 && pp.pass() && pm.pass() && ss.pass() && su.pass();
    return {pass, fmt("cocycle residual %.2e; projection violations %d/%d (k2 = %.4f); sandwich worst "
                      "stable %.3f/%.3f unstable %.3f/%.3f",
                      c.max_residual, pp.violations, pm.violations, d.k2_est, ss.worst_upper, ss.worst_lower,
                      su.worst_upper, su.worst_lower)};
}

Outcome c9() {
    const Session s(builtin::duffing());
    const PrincipalSolutions plus(s.sys, Side::Plus);
    int violations = 0;
    std::ostringstream os;
    for (double d : {1e-3, 1e-4}) {
        const double M = saddle_passage_time(s.anchors, 0.0, d);
        const SaddlePassageDecomposition z = decompose_saddle_passage(s.anchors, plus, 0.0, d, M, kDelta);
        violations += z.pass() ? 0 : 1;
        os << fmt("d=%.0e: M=%.3f weighted %.2e <= %.2e; ", d, M, z.weighted_norm_h, z.bound);
    }
    return {violations == 0, os.str() + fmt("%d violations", violations)};
}

Outcome c10() {
    constexpr double beta = 0.05, mu = 1.0 / 32.0;
    bool pass = true;
    std::ostringstream os;
    for (double eps : {0.0, 1e-4}) {
        const Session s(builtin::duffing(perturbations::x_cos(), eps));
        auto b = std::make_shared<const BarrierSet>(build_barriers(s.sys, beta, mu, s.anchors));
        std::string failed;
        for (const auto& c : b->bands)
            if (!c.ok()) failed += fmt(" %s=%.4f not in [%.4f,%.4f]", c.name.c_str(), c.value, c.lo, c.hi);
        int flow_viol = 0;
        for (const auto& f : b->flow) flow_viol += f.violations;
        const LoopMap map(s.anchors, kDelta, b);
        int outside = 0;
        for (double d : kBatch) {
            try {
                outside += map.forward(d, 0.0).contained ? 0 : 1;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::LeftRegion) throw;
                ++outside;
            }
        }
        pass = pass && b->pass() && outside == 0;
        os << fmt("eps=%g: bands %s%s; flow violations %d; geometry %s; loops outside K %d. ", eps,
                  b->bands_ok() ? "ok" : "FAIL", failed.c_str(), flow_viol, b->geometry_ok() ? "ok" : "FAIL", outside);
    }
    return {pass, os.str()};
}

Outcome c11() {
    const Session s(builtin::duffing());
    const LoopMap map(s.anchors, kDelta);
    double worst = 0.0;
    for (double d : kBatch) worst = std::max(worst, map.roundtrip(d, 0.0) / d);
    return {worst < 1e-6, fmt("max residual/d %.3e (< 1e-6)", worst)};
}

Outcome c12() {
    const Session s(builtin::duffing());
    const Point2 g0 = s.gamma.gamma0();
    double gap = 0.0, off = 0.0;
    for (double tau : {0.0, 1.0, 10.0}) {
        const Point2 ps = s.anchors.P_s(tau), pu = s.anchors.P_u(tau);
        gap = std::max(gap, norm(ps - pu));
        off = std::max({off, norm(ps - g0), norm(pu - g0)});
    }
    return {gap < 1e-8 && off < 1e-8, fmt("max |P_s - P_u| %.2e, max distance to gamma(0) %.2e (< 1e-8)", gap, off)};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
    static const std::vector<std::pair<const char*, std::function<Outcome()>>> list = {
        {"exponent law, smooth case", c1},
        {"time law", c2},
        {"half-displacement law", c3},
        {"discontinuous case", c4},
        {"position deviation suite", c5},
        {"Melnikov exactness", c6},
        {"splitting consistency", c7},
        {"dichotomy properties", c8},
        {"saddle-passage remainder", c9},
        {"barrier integrity", c10},
        {"reversibility", c11},
        {"unperturbed coincidence", c12},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
            return 1;
        }
    }
    const auto& list = criteria();
    if (only < 0 || only > static_cast<int>(list.size())) {
        std::fprintf(stderr, "criterion %d does not exist\n", only);
        return 1;
    }
    bool all = true;
    for (std::size_t k = 0; k < list.size(); ++k) {
        if (only != 0 && static_cast<int>(k + 1) != only) continue;
        Outcome o;
        try {
            o = list[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.pass;
        std::printf("criterion %2zu %s: %s -- %s\n", k + 1, o.pass ? "PASS" : "FAIL", list[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
