#pragma once

// Test-side generators and reference computations. The references evaluate
// series and integrals directly from their definitions (trig calls per node,
// bisection instead of Newton) so they do not share code paths with the
// library under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "loopaction/loop_space.hpp"
#include "loopaction/vec2.hpp"

namespace testsupport {

using loopaction::FourierLoop;
using loopaction::kPi;
using loopaction::kTwoPi;
using loopaction::TripleLoop;
using loopaction::Vec2;

/// splitmix64: small, seedable and independent of the library's generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    /// Uniform in [lo, hi).
    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
    int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
    Vec2 vec(double scale) { return {uniform(-scale, scale), uniform(-scale, scale)}; }

private:
    std::uint64_t state_;
};

/// Circle of radius `radius` traced `winding` times plus coefficient noise
/// decaying like 1/k^2; for noise < 1 the loop keeps its winding.
inline FourierLoop noisy_circle(Rng& rng, int modes, double radius, int winding, double noise) {
    FourierLoop u(modes);
    const int w = std::abs(winding);
    u.cos_coeffs[w - 1] = {radius, 0.0};
    u.sin_coeffs[w - 1] = {0.0, winding > 0 ? radius : -radius};
    // Pointwise perturbation <= amp sqrt(2) (1 + 2 sum 1/k^2) < 6 amp = 0.75 noise radius.
    const double amp = noise * radius / 8.0;
    u.mean = rng.vec(amp);
    for (int k = 1; k <= modes; ++k) {
        const double s = amp / (static_cast<double>(k) * k);
        u.cos_coeffs[k - 1] += rng.vec(s);
        u.sin_coeffs[k - 1] += rng.vec(s);
    }
    return u;
}

/// Rigid triangle with unit sides rotating once, perturbed per body, not yet centred.
inline std::array<FourierLoop, 3> noisy_triangle(Rng& rng, int modes, double side, double noise) {
    const std::array<Vec2, 3> vertices{Vec2{0.0, 0.0}, Vec2{side, 0.0}, Vec2{0.5 * side, std::sqrt(3.0) / 2 * side}};
    std::array<FourierLoop, 3> loops;
    for (int i = 0; i < 3; ++i) {
        FourierLoop u(modes);
        // vertex rotated by angle 2 pi t: (x cos - y sin, x sin + y cos)
        u.cos_coeffs[0] = vertices[i];
        u.sin_coeffs[0] = {-vertices[i].y, vertices[i].x};
        const double amp = noise * side * 0.1;
        u.mean = rng.vec(amp);
        for (int k = 1; k <= modes; ++k) {
            const double s = amp / (static_cast<double>(k) * k);
            u.cos_coeffs[k - 1] += rng.vec(s);
            u.sin_coeffs[k - 1] += rng.vec(s);
        }
        loops[i] = u;
    }
    return loops;
}

/// Direct series evaluation with one trig call per term.
inline Vec2 series_eval(const FourierLoop& u, double t) {
    Vec2 p = u.mean;
    for (int k = 1; k <= u.modes(); ++k) {
        p += std::cos(kTwoPi * k * t) * u.cos_coeffs[k - 1] + std::sin(kTwoPi * k * t) * u.sin_coeffs[k - 1];
    }
    return p;
}

inline Vec2 series_deriv(const FourierLoop& u, double t) {
    Vec2 p;
    for (int k = 1; k <= u.modes(); ++k) {
        const double w = kTwoPi * k;
        p += -w * std::sin(w * t) * u.cos_coeffs[k - 1] + w * std::cos(w * t) * u.sin_coeffs[k - 1];
    }
    return p;
}

/// Fixed-energy two-body action by brute-force quadrature: explicit rescaling
/// onto the constraint set, then 1/2 int |v'|^2 * int (h - V(v)) at n nodes.
inline double brute_action_2body(const FourierLoop& u, double a, double h, int n) {
    double half_v = 0.0;
    for (int j = 0; j < n; ++j) half_v += -0.5 * a / loopaction::norm(series_eval(u, double(j) / n));
    half_v /= n;
    const double lambda = half_v / h;
    double kin = 0.0, pot = 0.0;
    for (int j = 0; j < n; ++j) {
        const double t = double(j) / n;
        kin += 0.5 * loopaction::norm2(lambda * series_deriv(u, t));
        pot += h + a / loopaction::norm(lambda * series_eval(u, t));
    }
    return (kin / n) * (pot / n);
}

/// Same for three bodies with masses m and energy E.
inline double brute_action_3body(const TripleLoop& u, double energy, int n) {
    const auto& m = u.masses;
    auto potential = [&](double t, double scale) {
        std::array<Vec2, 3> q;
        for (int i = 0; i < 3; ++i) q[i] = scale * series_eval(u.loops[i], t);
        double v = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) v -= m[i] * m[j] / loopaction::norm(q[i] - q[j]);
        }
        return v;
    };
    double half_v = 0.0;
    for (int j = 0; j < n; ++j) half_v += 0.5 * potential(double(j) / n, 1.0);
    half_v /= n;
    const double lambda = half_v / energy;
    double kin = 0.0, pot = 0.0;
    for (int j = 0; j < n; ++j) {
        const double t = double(j) / n;
        for (int i = 0; i < 3; ++i) kin += 0.5 * m[i] * loopaction::norm2(lambda * series_deriv(u.loops[i], t));
        pot += energy - potential(t, lambda);
    }
    return (kin / n) * (pot / n);
}

/// Kepler's equation by plain bisection on [M - e, M + e].
inline double bisect_kepler(double mean_anomaly, double e) {
    double lo = mean_anomaly - e, hi = mean_anomaly + e;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid - e * std::sin(mid) - mean_anomaly > 0.0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Kepler position at time t from pericentre on the +x axis.
inline Vec2 kepler_position(double a, double h, double e, double t) {
    const double A = a / (-2.0 * h);
    const double n = std::sqrt(a / (A * A * A));
    const double ea = bisect_kepler(n * t, e);
    return {A * (std::cos(ea) - e), A * std::sqrt(1.0 - e * e) * std::sin(ea)};
}

inline double rel_diff(double x, double y) {
    const double s = std::max(std::abs(x), std::abs(y));
    return s > 0.0 ? std::abs(x - y) / s : 0.0;
}

}  // namespace testsupport
