#pragma once

/// Small fixed-size linear algebra used throughout the library: planar points,
/// 2x2 matrices, side/direction tags.

#include <algorithm>
#include <cmath>
#include <limits>

namespace homloop {

/// A point or vector of the plane.
struct Point2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Point2() = default;
    constexpr Point2(double a, double b) : x1(a), x2(b) {}

    constexpr Point2& operator+=(const Point2& o) { x1 += o.x1; x2 += o.x2; return *this; }
    constexpr Point2& operator-=(const Point2& o) { x1 -= o.x1; x2 -= o.x2; return *this; }
    constexpr Point2& operator*=(double s) { x1 *= s; x2 *= s; return *this; }

    [[nodiscard]] bool finite() const { return std::isfinite(x1) && std::isfinite(x2); }
};

constexpr Point2 operator+(Point2 a, const Point2& b) { return a += b; }
constexpr Point2 operator-(Point2 a, const Point2& b) { return a -= b; }
constexpr Point2 operator-(const Point2& a) { return {-a.x1, -a.x2}; }
constexpr Point2 operator*(double s, Point2 a) { return a *= s; }
constexpr Point2 operator*(Point2 a, double s) { return a *= s; }
constexpr Point2 operator/(const Point2& a, double s) { return {a.x1 / s, a.x2 / s}; }
constexpr bool operator==(const Point2& a, const Point2& b) { return a.x1 == b.x1 && a.x2 == b.x2; }

constexpr double dot(const Point2& a, const Point2& b) { return a.x1 * b.x1 + a.x2 * b.x2; }
/// Planar wedge product a ∧ b = a1 b2 − a2 b1.
constexpr double wedge(const Point2& a, const Point2& b) { return a.x1 * b.x2 - a.x2 * b.x1; }
inline double norm(const Point2& a) { return std::hypot(a.x1, a.x2); }
inline Point2 normalized(const Point2& a) { return a / norm(a); }
/// Counter-clockwise quarter turn.
constexpr Point2 rot90(const Point2& a) { return {-a.x2, a.x1}; }

/// Row-major 2x2 matrix.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 zero() { return {}; }
    static constexpr Mat2 columns(const Point2& c1, const Point2& c2) { return {c1.x1, c2.x1, c1.x2, c2.x2}; }

    [[nodiscard]] constexpr double trace() const { return a11 + a22; }
    [[nodiscard]] constexpr double det() const { return a11 * a22 - a12 * a21; }
    [[nodiscard]] constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
    [[nodiscard]] constexpr Point2 col1() const { return {a11, a21}; }
    [[nodiscard]] constexpr Point2 col2() const { return {a12, a22}; }
    [[nodiscard]] Mat2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }
    /// Spectral norm (largest singular value).
    [[nodiscard]] double norm2() const {
        const double s = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
        const double d = std::abs(det());
        const double disc = std::sqrt(std::max(0.0, s * s / 4.0 - d * d));
        return std::sqrt(s / 2.0 + disc);
    }
    [[nodiscard]] double max_abs() const {
        return std::max(std::max(std::abs(a11), std::abs(a12)), std::max(std::abs(a21), std::abs(a22)));
    }
};

constexpr Point2 operator*(const Mat2& m, const Point2& v) {
    return {m.a11 * v.x1 + m.a12 * v.x2, m.a21 * v.x1 + m.a22 * v.x2};
}
constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}
constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
}
constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
}
constexpr Mat2 operator*(double s, const Mat2& a) { return {s * a.a11, s * a.a12, s * a.a21, s * a.a22}; }
/// Outer product a bᵀ.
constexpr Mat2 outer(const Point2& a, const Point2& b) { return {a.x1 * b.x1, a.x1 * b.x2, a.x2 * b.x1, a.x2 * b.x2}; }

/// Which smooth piece of the system is active: Plus on {G > 0}, Minus on {G < 0}.
enum class Side { Plus, Minus };

constexpr Side opposite(Side s) { return s == Side::Plus ? Side::Minus : Side::Plus; }
constexpr const char* to_string(Side s) { return s == Side::Plus ? "plus" : "minus"; }
/// +1 for Plus, -1 for Minus.
constexpr int side_sign(Side s) { return s == Side::Plus ? 1 : -1; }

/// Time direction of an integration.
enum class Direction { Fwd, Bwd };

constexpr double direction_sign(Direction d) { return d == Direction::Fwd ? 1.0 : -1.0; }
constexpr const char* to_string(Direction d) { return d == Direction::Fwd ? "fwd" : "bwd"; }

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace homloop
