#pragma once

/// Dormand–Prince 5(4) embedded Runge–Kutta pair with its fourth-order
/// continuous extension, templated on the state dimension. Used by the
/// event-driven piecewise integrator and by the smooth linear propagators.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "homloop/errors.hpp"

namespace homloop::rk {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
inline Vec<N> axpy(const Vec<N>& y, double a, const Vec<N>& x) {
    Vec<N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + a * x[i];
    return r;
}

/// Dense output of one step: y(t0 + θh) for θ ∈ [0, 1].
template <std::size_t N>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::array<Vec<N>, 5> r{};

    [[nodiscard]] double t1() const { return t0 + h; }
    [[nodiscard]] Vec<N> at_theta(double th) const {
        const double th1 = 1.0 - th;
        Vec<N> y;
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        return y;
    }
    [[nodiscard]] Vec<N> at(double t) const { return at_theta(h == 0.0 ? 0.0 : (t - t0) / h); }
};

template <std::size_t N>
struct StepResult {
    Vec<N> y1{};
    Vec<N> k7{};    ///< f(t + h, y1), reused as the next first stage
    double err = 0.0;  ///< scaled RMS error estimate; accept iff err ≤ 1
    DenseStep<N> dense{};
};

/// Scaled RMS error norm used by the step controller.
template <std::size_t N>
inline double error_norm(const Vec<N>& e, const Vec<N>& y0, const Vec<N>& y1, double rtol, double atol) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = e[i] / sc;
        s += q * q;
    }
    return std::sqrt(s / static_cast<double>(N));
}

/// One Dormand–Prince step of size h from (t, y) with first stage k1 = f(t, y).
template <std::size_t N, typename Rhs>
StepResult<N> dopri5_step(const Rhs& f, double t, const Vec<N>& y, const Vec<N>& k1, double h, double rtol,
                          double atol) {
    constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                     a65 = -5103.0 / 18656.0;
    constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                     a76 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                     e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    Vec<N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    const Vec<N> k2 = f(t + c2 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    const Vec<N> k3 = f(t + c3 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    const Vec<N> k4 = f(t + c4 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    const Vec<N> k5 = f(t + c5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const Vec<N> k6 = f(t + h, tmp);

    StepResult<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out.y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    out.k7 = f(t + h, out.y1);

    Vec<N> e;
    for (std::size_t i = 0; i < N; ++i)
        e[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
    out.err = error_norm<N>(e, y, out.y1, rtol, atol);

    DenseStep<N>& d = out.dense;
    d.t0 = t;
    d.h = h;
    for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = out.y1[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        d.r[0][i] = y[i];
        d.r[1][i] = ydiff;
        d.r[2][i] = bspl;
        d.r[3][i] = ydiff - h * out.k7[i] - bspl;
        d.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * out.k7[i]);
    }
    return out;
}

/// Standard step-size update factor for a fifth-order pair.
inline double step_factor(double err) {
    if (err == 0.0) return 5.0;
    return std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
}

/// Integrates a smooth ODE y' = f(t, y) from t0 to t1 (either direction),
/// calling observer(dense) after each accepted step. Returns y(t1).
template <std::size_t N, typename Rhs, typename Observer>
Vec<N> integrate_smooth(const Rhs& f, double t0, const Vec<N>& y0, double t1, double rtol, double atol,
                        double h_max, Observer&& observer, long max_steps = 10'000'000) {
    if (t1 == t0) return y0;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    double t = t0;
    Vec<N> y = y0;
    Vec<N> k1 = f(t, y);
    double h = dir * std::min(h_max, std::min(1e-2, std::abs(t1 - t0)));
    for (long n = 0; n < max_steps; ++n) {
        const double remaining = t1 - t;
        if (dir * remaining <= 0.0) break;
        bool last = false;
        if (dir * (h - remaining) >= 0.0 || std::abs(remaining - h) < 1e-14 * std::abs(remaining)) {
            h = remaining;
            last = true;
        }
        StepResult<N> s = dopri5_step<N>(f, t, y, k1, h, rtol, atol);
        if (!std::isfinite(s.err)) s.err = 1e10;
        if (s.err <= 1.0) {
            observer(s.dense);
            t = last ? t1 : t + h;
            y = s.y1;
            k1 = s.k7;
            if (last) return y;
            h *= step_factor(s.err);
        } else {
            h *= std::max(0.1, 0.9 * std::pow(s.err, -0.2));
        }
        if (std::abs(h) > h_max) h = dir * h_max;
        if (std::abs(h) < 1e-15 * (1.0 + std::abs(t))) throw Error(ErrorCode::StepFailure, "step size underflow in smooth propagation");
    }
    if (dir * (t1 - t) > 0.0) throw Error(ErrorCode::StepFailure, "maximum number of steps exceeded in smooth propagation");
    return y;
}

}  // namespace homloop::rk
