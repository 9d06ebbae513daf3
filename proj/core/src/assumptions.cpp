#include "homloop/assumptions.hpp"

#include "homloop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homloop {

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::S1: return "S1";
        case Scenario::S2: return "S2";
        case Scenario::S3: return "S3";
        case Scenario::S4: return "S4";
        case Scenario::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

namespace {

/// Counter-clockwise angle from a to b in [0, 2π).
double ccw_angle(const Point2& a, const Point2& b) {
    double th = std::atan2(wedge(a, b), dot(a, b));
    if (th < 0.0) th += 2.0 * kPi;
    return th;
}

}  // namespace

bool opposite_sectors(const Point2& r1, const Point2& r2, const Point2& w1, const Point2& w2) {
    const double span = ccw_angle(r1, r2);
    const double a1 = ccw_angle(r1, w1);
    const double a2 = ccw_angle(r1, w2);
    if (a1 == 0.0 || a2 == 0.0 || a1 == span || a2 == span) return false;
    return (a1 < span) != (a2 < span);
}

AssumptionReport classify_scenario(const PiecewiseSystem& sys, const SaddleSpectrum& spec, const Homoclinic& gamma,
                                   const ClassifyOptions& opt) {
    AssumptionReport r;
    r.f0_ok = true;  // the spectrum exists, so both pieces are saddles at 0
    r.f1_ok = spec.f1_ok;
    const SystemValidation val = validate(sys.definition());
    r.g_ok = val.g_vanishes_at_origin;
    const Point2 g0 = gamma.gamma0();
    const Point2 n = sys.grad_G(g0);
    r.k_transversality = std::min(dot(n, sys.f(Side::Plus, g0)), dot(n, sys.f(Side::Minus, g0)));
    r.f2_ok = opposite_sectors(spec.v_u_plus, spec.v_u_minus, spec.v_s_plus, spec.v_s_minus);
    r.sliding_near_origin = !r.f2_ok;

    // Membership must be decided, and must agree at d and d/2.
    double d = opt.probe_fraction * gamma.diameter();
    auto decided = [&](double dd) {
        const Point2 a = dd * spec.v_u_plus;
        const Point2 b = dd * spec.v_s_minus;
        const double amb = opt.ambiguity_fraction * dd;
        return gamma.distance(a) > amb && gamma.distance(b) > amb;
    };
    bool ok = false;
    for (int k = 0; k <= opt.max_halvings; ++k, d *= 0.5) {
        if (!decided(d) || !decided(0.5 * d)) continue;
        const bool u1 = gamma.inside(d * spec.v_u_plus);
        const bool s1 = gamma.inside(d * spec.v_s_minus);
        const bool u2 = gamma.inside(0.5 * d * spec.v_u_plus);
        const bool s2 = gamma.inside(0.5 * d * spec.v_s_minus);
        if (u1 != u2 || s1 != s2) continue;
        r.v_u_plus_inside = u1;
        r.v_s_minus_inside = s1;
        r.probe_distance = d;
        ok = true;
        break;
    }
    if (!ok) throw Error(ErrorCode::ProbeAmbiguous, "eigen-direction probes stay on the homoclinic loop");
    if (!r.v_u_plus_inside && !r.v_s_minus_inside) r.scenario = Scenario::S1;
    else if (r.v_u_plus_inside && r.v_s_minus_inside) r.scenario = Scenario::S2;
    else if (r.v_u_plus_inside) r.scenario = Scenario::S3;
    else r.scenario = Scenario::S4;
    // The probes and the sector test must tell the same story.
    const bool needs_f2 = r.scenario == Scenario::S1 || r.scenario == Scenario::S2;
    if (needs_f2 != r.f2_ok) r.scenario = Scenario::Undetermined;
    return r;
}

int perp_orientation(const PiecewiseSystem& sys, const Homoclinic& gamma) {
    const Point2 g0 = gamma.gamma0();
    const Point2 p = rot90(sys.f(Side::Plus, g0));
    const double c = 1e-4 * gamma.diameter() / std::max(norm(p), 1e-300);
    if (gamma.inside(g0 + c * p)) return 1;
    if (gamma.inside(g0 - c * p)) return -1;
    throw Error(ErrorCode::ProbeAmbiguous, "cannot orient the perpendicular field at gamma(0)");
}

Point2 perp_field(const PiecewiseSystem& sys, Side side, const Point2& x, int orientation, double tol) {
    const Point2 f = sys.f(side, x);
    if (norm(f) < tol) throw Error(ErrorCode::ZeroField, "perpendicular field undefined where f vanishes");
    return static_cast<double>(orientation) * rot90(f);
}

double kappa_bound(const PiecewiseSystem& sys, const Homoclinic& gamma, const KappaGrid& grid) {
    if (!sys.perturbation().g) return 0.0;
    const auto& poly = gamma.polyline();
    // Cumulative arclength of the closed polyline.
    std::vector<double> s(poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) s[i + 1] = s[i] + norm(poly[(i + 1) % poly.size()] - poly[i]);
    const double L = s.back();
    std::vector<double> times;
    const double span = sys.period().value_or(8.0 * kPi);
    for (int k = 0; k < grid.times; ++k) times.push_back(span * k / grid.times);

    double best = 0.0;
    std::size_t seg = 0;
    for (int i = 0; i < grid.along; ++i) {
        const double target = L * (i + 0.5) / grid.along;
        while (seg + 1 < s.size() - 1 && s[seg + 1] < target) ++seg;
        const Point2 a = poly[seg];
        const Point2 b = poly[(seg + 1) % poly.size()];
        const double len = s[seg + 1] - s[seg];
        const double lam = len > 0.0 ? (target - s[seg]) / len : 0.0;
        const Point2 p = a + lam * (b - a);
        const Point2 nrm = len > 0.0 ? normalized(rot90(b - a)) : Point2{0.0, 0.0};
        for (int j = 0; j < grid.offsets; ++j) {
            const double off = grid.offsets > 1 ? -grid.radius + 2.0 * grid.radius * j / (grid.offsets - 1) : 0.0;
            const Point2 x = p + off * nrm;
            const double G = sys.G(x);
            for (Side side : {Side::Plus, Side::Minus}) {
                if (side_sign(side) * G < 0.0) continue;
                const double fn = norm(sys.f(side, x));
                if (fn < 1e-12) {
                    std::ostringstream msg;
                    msg << "f vanishes at grid point (" << x.x1 << ", " << x.x2 << ")";
                    throw Error(ErrorCode::FieldVanishesOnGrid, msg.str());
                }
                for (double t : times) best = std::max(best, norm(sys.g(t, x)) / fn);
            }
        }
    }
    return 2.0 * best;
}

}  // namespace homloop
