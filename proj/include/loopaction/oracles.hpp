#pragma once

#include <array>
#include <span>
#include <vector>

#include "loopaction/functionals.hpp"
#include "loopaction/orbit.hpp"

namespace loopaction {

/// Bound Kepler orbit of x'' = -a x/|x|^3 with energy h and eccentricity e.
struct KeplerElements {
    double coupling = 1.0;
    double energy = -0.5;
    double eccentricity = 0.0;

    KeplerElements(double coupling, double energy, double eccentricity);

    /// A = a / (-2h)
    double semi_major_axis() const { return coupling / (-2.0 * energy); }
};

/// Unit equilateral triangle centred on the mass-weighted origin.
struct LagrangeShape {
    std::array<double, 3> masses{};
    std::array<Vec2, 3> vertices{};
};

/// T = 2 pi (-2h)^{-3/2} a
double kepler_period(double coupling, double energy);

/// Minimum of the fixed-period action integral (1/2 |x'|^2 + a/|x|) over
/// loops winding around the origin: (3/2) (2 pi)^{2/3} a^{2/3} T^{1/3}.
double gordon_min_action(double coupling, double period);

/// The claimed two-body minimum 9 pi^2 2^{-13/3} a^2 / (-h).
double claimed_action_2body(double coupling, double energy);

/// Solves Ea - e sin Ea = Ma by safeguarded Newton iteration (|residual| < 1e-13).
double solve_kepler_equation(double mean_anomaly, double eccentricity);

/// Ellipse with the focus at the origin sampled uniformly in time over one
/// period, starting at pericentre.
PhysicalOrbit kepler_orbit(const KeplerElements& elements, std::size_t samples);

/// Unit-period loop u(s) = x(sT) of a Kepler orbit, fitted with (N-1)/4 modes
/// from N = grid.size() time samples.
FourierLoop kepler_loop(const KeplerElements& elements, const QuadratureGrid& grid);

/// Fixed-energy action of the unit-period Kepler loop, by quadrature.
double kepler_loop_action(double coupling, double energy, double eccentricity, const QuadratureGrid& grid);

LagrangeShape lagrange_shape(const std::array<double, 3>& masses);

/// Homographic equilateral solution q_i(t) = x(t) * alpha_i (complex product)
/// where x is the relative Kepler orbit with coupling M and energy M E / sigma.
PhysicalOrbit lagrange_solution(const std::array<double, 3>& masses, double energy, double eccentricity,
                                std::size_t samples);

/// Unit-period TripleLoop of a Lagrange solution, fitted like kepler_loop.
TripleLoop lagrange_loop(const std::array<double, 3>& masses, double energy, double eccentricity,
                         const QuadratureGrid& grid);

/// Candidate periods of the equilateral solution at energy E.
struct LagrangePeriods {
    /// 2 pi (sigma / (-2E))^{3/2}
    double claimed_period = 0.0;
    /// 2 pi (sigma / (-2E))^{3/2} M
    double claimed_period_mass = 0.0;
    /// 2 pi M^{-1/2} (sigma / (-2E))^{3/2}
    double derived = 0.0;
};

LagrangePeriods lagrange_period(const std::array<double, 3>& masses, double energy);

struct LagrangeActions {
    /// 2^{-13/3} (3 pi)^2 sigma^3 / (-E)
    double claimed_action = 0.0;
    /// Quadrature of the action on the unit-period Lagrange loop.
    double derived_lagrange = 0.0;
};

LagrangeActions lagrange_actions(const std::array<double, 3>& masses, double energy,
                                 const QuadratureGrid& grid, double eccentricity = 0.0);

/// Classical fixed-step RK4 over [0, duration] with `steps` steps.
///
/// Throws CollisionEncountered when a separation falls below `collision_floor`,
/// tested along the straight path between consecutive steps.
Trajectory integrate_ode(const System& sys, std::span<const Vec2> positions,
                         std::span<const Vec2> velocities, double duration, int steps,
                         double collision_floor = 1e-9);

/// First time the phase-space state returns to within `tolerance` (relative)
/// of its initial value, refined by Hermite interpolation between samples.
double measure_period(const Trajectory& trajectory, double tolerance = 1e-6);

}  // namespace loopaction
