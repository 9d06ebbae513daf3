#include "homloop/system.hpp"

#include "homloop/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace homloop {

namespace {

double fd_step(const Point2& x) {
    return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + norm(x));
}

/// Fourth-order central difference of a vector-valued function along e.
template <typename F>
Point2 fd_directional(const F& f, const Point2& x, const Point2& e, double h) {
    const Point2 p2 = f(x + 2.0 * h * e);
    const Point2 p1 = f(x + h * e);
    const Point2 m1 = f(x - h * e);
    const Point2 m2 = f(x - 2.0 * h * e);
    return (-1.0 * p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
}

constexpr std::array<double, 5> kSampleTimes{0.0, 0.7, 1.9, 3.3, 5.1};

std::vector<Point2> jacobian_probe_points() {
    std::vector<Point2> pts;
    for (double a : {-0.8, -0.3, 0.2, 0.6, 1.1}) {
        for (double b : {-0.7, -0.2, 0.3, 0.9}) pts.emplace_back(a, b);
    }
    return pts;
}

double jacobian_residual(const VectorField& f, const Jacobian& J) {
    double worst = 0.0;
    for (const Point2& x : jacobian_probe_points()) {
        const Mat2 a = J(x);
        const Mat2 n = fd_jacobian(f, x);
        const double scale = 1.0 + a.max_abs();
        worst = std::max(worst, (a - n).max_abs() / scale);
    }
    return worst;
}

}  // namespace

Mat2 fd_jacobian(const VectorField& f, const Point2& x) {
    const double h = fd_step(x);
    return Mat2::columns(fd_directional(f, x, {1.0, 0.0}, h), fd_directional(f, x, {0.0, 1.0}, h));
}

Point2 fd_gradient(const ScalarField& G, const Point2& x) {
    const double h = fd_step(x);
    auto d = [&](const Point2& e) {
        return (-G(x + 2.0 * h * e) + 8.0 * G(x + h * e) - 8.0 * G(x - h * e) + G(x - 2.0 * h * e)) /
               (12.0 * h);
    };
    return {d({1.0, 0.0}), d({0.0, 1.0})};
}

bool SystemValidation::ok() const {
    constexpr double kJacTol = 1e-6;
    return G_vanishes_at_origin && grad_G_nonzero && f_plus_vanishes && f_minus_vanishes &&
           g_vanishes_at_origin && jac_plus_residual < kJacTol && jac_minus_residual < kJacTol;
}

SystemValidation validate(const SystemDefinition& def) {
    constexpr double kTol = 1e-12;
    const Point2 o{0.0, 0.0};
    SystemValidation v;
    v.G_vanishes_at_origin = std::abs(def.G(o)) < kTol;
    v.grad_G_nonzero = norm(def.grad_G ? def.grad_G(o) : fd_gradient(def.G, o)) > kTol;
    v.f_plus_vanishes = norm(def.f_plus(o)) < kTol;
    v.f_minus_vanishes = norm(def.f_minus(o)) < kTol;
    v.g_vanishes_at_origin = true;
    if (def.perturbation.g) {
        for (double t : kSampleTimes) {
            for (double e : {def.epsilon, 1e-3}) {
                if (norm(def.perturbation.g(t, o, e)) > kTol) v.g_vanishes_at_origin = false;
            }
        }
    }
    v.jac_plus_residual = def.jac_plus ? jacobian_residual(def.f_plus, def.jac_plus) : 0.0;
    v.jac_minus_residual = def.jac_minus ? jacobian_residual(def.f_minus, def.jac_minus) : 0.0;
    return v;
}

PiecewiseSystem::PiecewiseSystem(SystemDefinition def) {
    if (!def.f_plus || !def.f_minus || !def.G) {
        throw Error(ErrorCode::InvalidSystem, "system '" + def.name + "' lacks f_plus, f_minus or G");
    }
    if (!(def.epsilon >= 0.0) || !std::isfinite(def.epsilon)) {
        throw Error(ErrorCode::InvalidSystem, "epsilon must be finite and non-negative");
    }
    if (!(def.holder_alpha > 0.0 && def.holder_alpha <= 1.0)) {
        throw Error(ErrorCode::InvalidSystem, "holder_alpha must lie in (0, 1]");
    }
    if (!(def.r_order > 1.0)) throw Error(ErrorCode::InvalidSystem, "r_order must exceed 1");
    const SystemValidation v = validate(def);
    if (!v.ok()) {
        std::ostringstream msg;
        msg << "system '" << def.name << "' violates standing assumptions:"
            << (v.G_vanishes_at_origin ? "" : " G(0)!=0") << (v.grad_G_nonzero ? "" : " gradG(0)=0")
            << (v.f_plus_vanishes ? "" : " f_plus(0)!=0") << (v.f_minus_vanishes ? "" : " f_minus(0)!=0")
            << (v.g_vanishes_at_origin ? "" : " g(t,0)!=0") << " jac residuals " << v.jac_plus_residual << ","
            << v.jac_minus_residual;
        throw Error(ErrorCode::InvalidSystem, msg.str());
    }
    if (!def.jac_plus) {
        def.jac_plus = [f = def.f_plus](const Point2& x) { return fd_jacobian(f, x); };
    }
    if (!def.jac_minus) {
        def.jac_minus = [f = def.f_minus](const Point2& x) { return fd_jacobian(f, x); };
    }
    if (!def.grad_G) {
        def.grad_G = [G = def.G](const Point2& x) { return fd_gradient(G, x); };
    }
    if (def.perturbation.g && !def.perturbation.g_jac) {
        def.perturbation.g_jac = [g = def.perturbation.g](double t, const Point2& x, double e) {
            return fd_jacobian([&](const Point2& y) { return g(t, y, e); }, x);
        };
    }
    def_ = std::make_shared<const SystemDefinition>(std::move(def));
}

Point2 PiecewiseSystem::f(Side side, const Point2& x) const {
    return side == Side::Plus ? def_->f_plus(x) : def_->f_minus(x);
}

Mat2 PiecewiseSystem::jac(Side side, const Point2& x) const {
    return side == Side::Plus ? def_->jac_plus(x) : def_->jac_minus(x);
}

Point2 PiecewiseSystem::g(double t, const Point2& x) const {
    if (!def_->perturbation.g) return {};
    return def_->perturbation.g(t, x, def_->epsilon);
}

Mat2 PiecewiseSystem::g_jac(double t, const Point2& x) const {
    if (!def_->perturbation.g) return Mat2::zero();
    return def_->perturbation.g_jac(t, x, def_->epsilon);
}

Point2 PiecewiseSystem::field(Side side, double t, const Point2& x) const {
    Point2 v = f(side, x);
    if (def_->epsilon != 0.0 && def_->perturbation.g) v += def_->epsilon * def_->perturbation.g(t, x, def_->epsilon);
    return v;
}

Mat2 PiecewiseSystem::field_jac(Side side, double t, const Point2& x) const {
    Mat2 J = jac(side, x);
    if (def_->epsilon != 0.0 && def_->perturbation.g) J = J + def_->epsilon * def_->perturbation.g_jac(t, x, def_->epsilon);
    return J;
}

PiecewiseSystem PiecewiseSystem::with_epsilon(double eps) const {
    SystemDefinition d = *def_;
    d.epsilon = eps;
    return PiecewiseSystem(std::move(d));
}

PiecewiseSystem PiecewiseSystem::with_perturbation(Perturbation p, double eps) const {
    SystemDefinition d = *def_;
    d.perturbation = std::move(p);
    d.epsilon = eps;
    return PiecewiseSystem(std::move(d));
}

PiecewiseSystem PiecewiseSystem::reversed() const {
    const SystemDefinition& s = *def_;
    SystemDefinition d;
    d.name = s.name + "-reversed";
    d.f_plus = [f = s.f_minus](const Point2& x) { return -f(x); };
    d.f_minus = [f = s.f_plus](const Point2& x) { return -f(x); };
    d.jac_plus = [J = s.jac_minus](const Point2& x) { return -1.0 * J(x); };
    d.jac_minus = [J = s.jac_plus](const Point2& x) { return -1.0 * J(x); };
    d.G = [G = s.G](const Point2& x) { return -G(x); };
    d.grad_G = [g = s.grad_G](const Point2& x) { return -g(x); };
    d.perturbation = s.perturbation;
    d.perturbation.label = s.perturbation.label + "-reversed";
    if (s.perturbation.g) {
        d.perturbation.g = [g = s.perturbation.g](double t, const Point2& x, double e) { return -g(-t, x, e); };
        d.perturbation.g_jac = [J = s.perturbation.g_jac](double t, const Point2& x, double e) {
            return -1.0 * J(-t, x, e);
        };
    }
    d.epsilon = s.epsilon;
    d.holder_alpha = s.holder_alpha;
    d.r_order = s.r_order;
    if (s.gamma) {
        d.gamma = [c = s.gamma](double t) { return c(-t); };
        d.gamma_dot = [c = s.gamma_dot](double t) { return -c(-t); };
    }
    return PiecewiseSystem(std::move(d));
}

PiecewiseSystem rotated_system(const PiecewiseSystem& sys, double coefficient, int orientation) {
    const double c = coefficient * static_cast<double>(orientation);
    // (I + c R) f with R the counter-clockwise quarter turn.
    const Mat2 T{1.0, -c, c, 1.0};
    SystemDefinition d;
    d.name = sys.name() + "-rotated";
    d.f_plus = [sys, T](const Point2& x) { return T * sys.f(Side::Plus, x); };
    d.f_minus = [sys, T](const Point2& x) { return T * sys.f(Side::Minus, x); };
    d.jac_plus = [sys, T](const Point2& x) { return T * sys.jac(Side::Plus, x); };
    d.jac_minus = [sys, T](const Point2& x) { return T * sys.jac(Side::Minus, x); };
    d.G = [sys](const Point2& x) { return sys.G(x); };
    d.grad_G = [sys](const Point2& x) { return sys.grad_G(x); };
    d.holder_alpha = sys.holder_alpha();
    d.r_order = sys.r_order();
    return PiecewiseSystem(std::move(d));
}

namespace perturbations {

Perturbation zero() { return Perturbation{}; }

Perturbation damping(double c) {
    Perturbation p;
    std::ostringstream label;
    label << "damping(" << c << ")";
    p.label = label.str();
    p.g = [c](double, const Point2& x, double) { return Point2{0.0, -c * x.x2}; };
    p.g_jac = [c](double, const Point2&, double) { return Mat2{0.0, 0.0, 0.0, -c}; };
    p.autonomous = true;
    return p;
}

Perturbation x_cos(double omega) {
    Perturbation p;
    std::ostringstream label;
    label << "x_cos(" << omega << ")";
    p.label = label.str();
    p.g = [omega](double t, const Point2& x, double) { return Point2{0.0, x.x1 * std::cos(omega * t)}; };
    p.g_jac = [omega](double t, const Point2&, double) { return Mat2{0.0, 0.0, std::cos(omega * t), 0.0}; };
    p.period = 2.0 * kPi / omega;
    p.autonomous = false;
    return p;
}

}  // namespace perturbations

namespace builtin {

namespace {

Point2 duffing_field(const Point2& x) { return {x.x2, x.x1 - x.x1 * x.x1}; }
Mat2 duffing_jac(const Point2& x) { return {0.0, 1.0, 1.0 - 2.0 * x.x1, 0.0}; }

SystemDefinition duffing_base(const std::string& name, Perturbation p, double eps) {
    SystemDefinition d;
    d.name = name;
    d.f_plus = duffing_field;
    d.f_minus = duffing_field;
    d.jac_plus = duffing_jac;
    d.jac_minus = duffing_jac;
    d.G = [](const Point2& x) { return -x.x2; };
    d.grad_G = [](const Point2&) { return Point2{0.0, -1.0}; };
    d.perturbation = std::move(p);
    d.epsilon = eps;
    d.gamma = duffing_gamma;
    d.gamma_dot = duffing_gamma_dot;
    return d;
}

/// C² smoothstep: 1 for r ≤ r0, 0 for r ≥ r1.
double bump(double r, double r0, double r1) {
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    const double s = (r1 - r) / (r1 - r0);
    return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

}  // namespace

Point2 duffing_gamma(double t) {
    const double c = 1.0 / std::cosh(t / 2.0);
    const double s2 = c * c;
    return {1.5 * s2, -1.5 * s2 * std::tanh(t / 2.0)};
}

Point2 duffing_gamma_dot(double t) { return duffing_field(duffing_gamma(t)); }

PiecewiseSystem duffing(Perturbation p, double eps) {
    return PiecewiseSystem(duffing_base("duffing", std::move(p), eps));
}

PiecewiseSystem duffing_rescaled(Perturbation p, double eps) {
    SystemDefinition d = duffing_base("duffing-rescaled", std::move(p), eps);
    d.f_minus = [](const Point2& x) { return 2.0 * duffing_field(x); };
    d.jac_minus = [](const Point2& x) { return 2.0 * duffing_jac(x); };
    d.gamma = [](double t) { return t < 0.0 ? duffing_gamma(2.0 * t) : duffing_gamma(t); };
    d.gamma_dot = [](double t) { return t < 0.0 ? 2.0 * duffing_gamma_dot(2.0 * t) : duffing_gamma_dot(t); };
    return PiecewiseSystem(std::move(d));
}

PiecewiseSystem sliding_demo(Perturbation p, double eps) {
    SystemDefinition d = duffing_base("sliding-demo", std::move(p), eps);
    // Near the origin add ψ(r)·Φ(x)·(2, −2) with Φ = x2 + x1·sqrt(1 − 2x1/3), which
    // vanishes on the lower branch of the Duffing loop, so the homoclinic is
    // unchanged while the linearization becomes [[2, 3], [−1, −2]]
    // (eigenvalues ±1, unstable eigenvector (3, −1) inside the loop).
    d.f_plus = [](const Point2& x) {
        const double r = norm(x);
        const Point2 base = duffing_field(x);
        const double w = bump(r, 0.3, 0.6);
        if (w == 0.0) return base;
        const double phi = x.x2 + x.x1 * std::sqrt(1.0 - 2.0 * x.x1 / 3.0);
        return base + (w * phi) * Point2{2.0, -2.0};
    };
    d.jac_plus = nullptr;
    return PiecewiseSystem(std::move(d));
}

PiecewiseSystem dulac_family(double a, double b) {
    SystemDefinition d;
    std::ostringstream name;
    name.precision(17);
    name << "dulac(" << a << "," << b << ")";
    d.name = name.str();
    auto f = [a, b](const Point2& x) { return Point2{x.x2, x.x1 - x.x1 * x.x1 + x.x2 * (a + b * x.x1)}; };
    auto J = [a, b](const Point2& x) {
        return Mat2{0.0, 1.0, 1.0 - 2.0 * x.x1 + b * x.x2, a + b * x.x1};
    };
    d.f_plus = f;
    d.f_minus = f;
    d.jac_plus = J;
    d.jac_minus = J;
    d.G = [](const Point2& x) { return -x.x2; };
    d.grad_G = [](const Point2&) { return Point2{0.0, -1.0}; };
    return PiecewiseSystem(std::move(d));
}

std::vector<std::string> names() { return {"duffing", "duffing-rescaled", "sliding-demo"}; }

PiecewiseSystem by_name(const std::string& name, Perturbation p, double eps) {
    if (name == "duffing") return duffing(std::move(p), eps);
    if (name == "duffing-rescaled") return duffing_rescaled(std::move(p), eps);
    if (name == "sliding-demo") return sliding_demo(std::move(p), eps);
    throw Error(ErrorCode::InvalidSystem, "unknown built-in system '" + name + "'");
}

}  // namespace builtin

}  // namespace homloop
