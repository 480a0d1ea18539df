#pragma once

#include <cmath>

namespace loopaction {

/// Point or vector in the plane.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr Vec2& operator-=(const Vec2& o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    constexpr Vec2& operator*=(double s) {
        x *= s;
        y *= s;
        return *this;
    }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 v) { return v *= s; }
constexpr Vec2 operator*(Vec2 v, double s) { return v *= s; }
constexpr Vec2 operator/(Vec2 v, double s) { return v *= (1.0 / s); }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
constexpr double norm2(const Vec2& v) { return dot(v, v); }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

/// Product of a and b viewed as complex numbers (rotation plus dilation).
constexpr Vec2 complex_mul(const Vec2& a, const Vec2& b) {
    return {a.x * b.x - a.y * b.y, a.x * b.y + a.y * b.x};
}

inline Vec2 rotate(const Vec2& v, double angle) {
    return complex_mul({std::cos(angle), std::sin(angle)}, v);
}

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace loopaction
