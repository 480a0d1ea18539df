#pragma once

#include <array>
#include <span>
#include <variant>
#include <vector>

#include "loopaction/loop_space.hpp"

namespace loopaction {

/// Kepler problem x'' = -a x/|x|^3 at fixed energy h < 0.
class TwoBodySystem {
public:
    TwoBodySystem(double coupling, double energy);

    double coupling() const { return coupling_; }
    double energy() const { return energy_; }

private:
    double coupling_;
    double energy_;
};

/// Newtonian three-body problem in the plane (G = 1) at fixed energy E < 0.
class ThreeBodySystem {
public:
    ThreeBodySystem(std::array<double, 3> masses, double energy);

    const std::array<double, 3>& masses() const { return masses_; }
    double energy() const { return energy_; }
    /// M = m1 + m2 + m3
    double total_mass() const { return masses_[0] + masses_[1] + masses_[2]; }
    /// sigma = m1 m2 + m1 m3 + m2 m3
    double pair_sum() const {
        return masses_[0] * masses_[1] + masses_[0] * masses_[2] + masses_[1] * masses_[2];
    }

private:
    std::array<double, 3> masses_;
    double energy_;
};

using System = std::variant<TwoBodySystem, ThreeBodySystem>;

// Pointwise potentials. Both are homogeneous of degree -1.

double potential(const TwoBodySystem& sys, const Vec2& x);
double potential(const ThreeBodySystem& sys, std::span<const Vec2, 3> q);

/// grad V at x, i.e. a x / |x|^3.
Vec2 potential_gradient(const TwoBodySystem& sys, const Vec2& x);
/// dV/dq_i for each body.
std::array<Vec2, 3> potential_gradient(const ThreeBodySystem& sys, std::span<const Vec2, 3> q);

// Uniform helpers over System; the 2-body case is a single body of unit mass.

std::size_t body_count(const System& sys);
std::vector<double> body_masses(const System& sys);
double system_energy(const System& sys);
double potential(const System& sys, std::span<const Vec2> q);
/// q_i'' = -(1/m_i) dV/dq_i
std::vector<Vec2> accelerations(const System& sys, std::span<const Vec2> q);
/// 1/2 sum m_i |v_i|^2 + V(q)
double total_energy(const System& sys, std::span<const Vec2> q, std::span<const Vec2> v);
/// Smallest |x| (2-body) or pairwise distance (3-body).
double min_separation(const System& sys, std::span<const Vec2> q);

/// Smallest separation over the grid samples of a loop.
double min_separation(const FourierLoop& loop, const QuadratureGrid& grid);
double min_separation(const TripleLoop& triple, const QuadratureGrid& grid);

/// Integral of (1/2 V'(u).u + V(u)) over one period, evaluated with the general integrand.
double constraint_value(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid);
double constraint_value(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid);

/// Integral of V(u)/2, equal to constraint_value for degree -1 potentials.
double half_potential_integral(const FourierLoop& loop, const TwoBodySystem& sys,
                               const QuadratureGrid& grid);
double half_potential_integral(const TripleLoop& triple, const ThreeBodySystem& sys,
                               const QuadratureGrid& grid);

/// Mass-weighted kinetic factor 1/2 sum m_i integral |u_i'|^2 (Parseval).
double kinetic_integral(const TripleLoop& triple);

/// Rescales onto the constraint manifold: lambda u with lambda = c(u)/energy.
FourierLoop project_to_manifold(const FourierLoop& loop, const TwoBodySystem& sys,
                                const QuadratureGrid& grid);
TripleLoop project_to_manifold(const TripleLoop& triple, const ThreeBodySystem& sys,
                               const QuadratureGrid& grid);

/// f(u) together with its two factors.
struct ActionValue {
    double value = 0.0;
    /// 1/2 integral |u'|^2 (mass-weighted for three bodies)
    double kinetic_factor = 0.0;
    /// integral (h - V(u))
    double potential_factor = 0.0;
};

/// Relative tolerance on |c(u) - h| accepted by action_full.
inline constexpr double kManifoldTolerance = 1e-9;

/// Fixed-energy action on the constraint manifold. Throws OffManifold otherwise.
ActionValue action_full(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid);
ActionValue action_full(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid);

/// Scale-invariant action K(u) c(u)^2 / (-h): the action of the loop after projection.
double action_reduced(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid);
double action_reduced(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid);

/// action_reduced(u + step) - action_reduced(u), evaluated without cancellation
/// so that changes far below the rounding level of the action itself are
/// resolved. Throws CollisionEncountered if u + step collides.
double action_reduced_change(const FourierLoop& loop, const FourierLoop& step, const TwoBodySystem& sys,
                             const QuadratureGrid& grid);
double action_reduced_change(const TripleLoop& triple, const TripleLoop& step, const ThreeBodySystem& sys,
                             const QuadratureGrid& grid);

/// Exact gradient of action_reduced with respect to every Fourier coefficient.
FourierLoop gradient_reduced(const FourierLoop& loop, const TwoBodySystem& sys,
                             const QuadratureGrid& grid);

/// Gradient of action_reduced for three bodies, projected orthogonally onto
/// the subspace sum m_i u_i = 0.
TripleLoop gradient_reduced(const TripleLoop& triple, const ThreeBodySystem& sys,
                            const QuadratureGrid& grid);

/// Same gradient before the centre-of-mass projection (one entry per coefficient).
TripleLoop gradient_reduced_unprojected(const TripleLoop& triple, const ThreeBodySystem& sys,
                                        const QuadratureGrid& grid);

/// Orthogonal projection of a coefficient vector onto sum m_i c_i = 0.
TripleLoop project_tangent(const TripleLoop& direction);

}  // namespace loopaction
