#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "loopaction/vec2.hpp"

namespace loopaction {

/// Uniform rectangle rule on the circle R/Z: nodes t_j = j/N, weights 1/N.
///
/// Carries cosine/sine tables so that evaluating a Fourier loop at the nodes
/// needs no trigonometric calls.
class QuadratureGrid {
public:
    explicit QuadratureGrid(int sample_count = 512);

    int size() const { return n_; }
    double node(int j) const { return static_cast<double>(j) / n_; }
    double weight() const { return 1.0 / n_; }

    /// cos(2 pi k j / N), indexed by (k*j) mod N.
    double cos_at(std::int64_t k, std::int64_t j) const { return cos_[index(k, j)]; }
    double sin_at(std::int64_t k, std::int64_t j) const { return sin_[index(k, j)]; }

    /// True when the grid resolves all products of pairs of modes up to K.
    bool resolves(int modes) const { return n_ >= 4 * modes + 1; }

    /// Grid with twice as many nodes.
    QuadratureGrid refined() const { return QuadratureGrid(2 * n_); }

private:
    std::size_t index(std::int64_t k, std::int64_t j) const {
        return static_cast<std::size_t>((k * j) % n_);
    }

    int n_;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

/// Truncated Fourier series u(t) = mean + sum_k (a_k cos 2 pi k t + b_k sin 2 pi k t)
/// for k = 1..K, a closed loop in the plane with period 1.
///
/// cos_coeffs[k-1] holds a_k and sin_coeffs[k-1] holds b_k.
struct FourierLoop {
    static constexpr int dimension = 2;

    Vec2 mean;
    std::vector<Vec2> cos_coeffs;
    std::vector<Vec2> sin_coeffs;

    FourierLoop() = default;
    explicit FourierLoop(int modes) : cos_coeffs(modes), sin_coeffs(modes) {}

    int modes() const { return static_cast<int>(cos_coeffs.size()); }

    /// Number of real coefficients: 2 (mean) + 4K.
    std::size_t coefficient_count() const { return 2 + 4 * cos_coeffs.size(); }

    bool is_finite() const;

    /// Radius-R circle traced `winding` times (negative = clockwise).
    static FourierLoop circle(int modes, double radius = 1.0, int winding = 1);
    static FourierLoop constant(int modes, Vec2 point);

    FourierLoop& operator+=(const FourierLoop& o);
    FourierLoop& operator-=(const FourierLoop& o);
    FourierLoop& operator*=(double s);
    /// this += s * o
    FourierLoop& axpy(double s, const FourierLoop& o);

    /// Coefficients in the order mean, then (a_k, b_k) for k = 1..K.
    std::vector<double> flatten() const;
    static FourierLoop unflatten(std::span<const double> values, int modes);
};

FourierLoop operator+(FourierLoop a, const FourierLoop& b);
FourierLoop operator-(FourierLoop a, const FourierLoop& b);
FourierLoop operator*(double s, FourierLoop a);

/// Euclidean inner product of the coefficient vectors.
double coefficient_dot(const FourierLoop& a, const FourierLoop& b);
double coefficient_norm(const FourierLoop& a);

/// W^{1,2} inner product: integral over one period of (u.v + u'.v'), in closed form.
double sobolev_inner(const FourierLoop& u, const FourierLoop& v);
double sobolev_norm(const FourierLoop& u);

Vec2 eval(const FourierLoop& loop, double t);
Vec2 deriv(const FourierLoop& loop, double t);
Vec2 second_deriv(const FourierLoop& loop, double t);

/// u(t_j) at every grid node.
std::vector<Vec2> sample(const FourierLoop& loop, const QuadratureGrid& grid);
/// u'(t_j) at every grid node.
std::vector<Vec2> sample_deriv(const FourierLoop& loop, const QuadratureGrid& grid);
/// u''(t_j) at every grid node.
std::vector<Vec2> sample_second_deriv(const FourierLoop& loop, const QuadratureGrid& grid);

/// Half the integral of |u'|^2 over one period, exact via Parseval.
double kinetic_integral(const FourierLoop& loop);

/// Rectangle-rule value of the same integral; used to cross-check Parseval.
double kinetic_quadrature(const FourierLoop& loop, const QuadratureGrid& grid);

/// Fits a K-mode loop to N time-uniform samples x(j/N) by discrete Fourier
/// projection. Requires N >= 2K+1.
FourierLoop fit_loop(std::span<const Vec2> samples, int modes);

/// Extent of the loop: diagonal of the bounding box of the grid samples.
double loop_diameter(const FourierLoop& loop, const QuadratureGrid& grid);

/// Smallest |u(t)| over the period: grid minimum refined by golden-section search.
double min_radius(const FourierLoop& loop, const QuadratureGrid& grid);

inline constexpr double kNearCollisionRelative = 1e-6;

/// Signed number of turns of u around the origin.
///
/// Throws NearCollision when min |u| < near_collision_rel * diameter and
/// NonIntegerWinding when the accumulated angle is not within 0.01 of a
/// whole turn or changes when the grid is doubled (the grid is too coarse
/// for this loop).
int winding_number(const FourierLoop& loop, const QuadratureGrid& grid,
                   double near_collision_rel = kNearCollisionRelative);

/// A |w|-fold circle of radius 1 plus seeded perturbations on every mode.
///
/// The perturbation is bounded pointwise by min(noise_scale, 0.5), so the
/// winding number of the base circle is preserved.
FourierLoop random_loop(std::uint64_t seed, int modes, int winding, double noise_scale);

FourierLoop scaled(const FourierLoop& loop, double factor);
FourierLoop rotated(const FourierLoop& loop, double angle);
/// u(t + shift).
FourierLoop time_shifted(const FourierLoop& loop, double shift);

/// Three loops sharing a mode count with the mass-weighted centre fixed at 0.
struct TripleLoop {
    std::array<FourierLoop, 3> loops;
    std::array<double, 3> masses{1.0, 1.0, 1.0};

    int modes() const { return loops[0].modes(); }
    double total_mass() const { return masses[0] + masses[1] + masses[2]; }

    /// u_i - u_j
    FourierLoop relative(int i, int j) const;

    TripleLoop& axpy(double s, const TripleLoop& o);
    TripleLoop& operator*=(double s);

    std::vector<double> flatten() const;
    static TripleLoop unflatten(std::span<const double> values, int modes,
                                const std::array<double, 3>& masses);
};

double coefficient_dot(const TripleLoop& a, const TripleLoop& b);
double coefficient_norm(const TripleLoop& a);

/// Sum of m_i u_i as a loop; identically zero on a valid TripleLoop.
FourierLoop weighted_center(const TripleLoop& triple);

/// Removes the mass-weighted mean coefficient-wise: u_i <- u_i - (sum m_j u_j)/M.
TripleLoop com_project(const std::array<FourierLoop, 3>& loops,
                       const std::array<double, 3>& masses);

TripleLoop scaled(const TripleLoop& triple, double factor);
TripleLoop rotated(const TripleLoop& triple, double angle);

/// Rigid equilateral triangle rotating `winding` times per period, body i at
/// vertex_i rotated by 2 pi winding t.
TripleLoop rotating_triangle(int modes, const std::array<Vec2, 3>& vertices,
                             const std::array<double, 3>& masses, int winding = 1);

/// Perturbed rotating triangle with relative windings equal to `winding`.
///
/// Each body's perturbation is bounded by min(noise_scale, 0.25) times the
/// side length, so every pairwise difference keeps its winding.
TripleLoop random_triple(std::uint64_t seed, int modes, const std::array<double, 3>& masses,
                         int winding, double noise_scale);

}  // namespace loopaction
