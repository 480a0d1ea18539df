#pragma once

#include <array>
#include <span>
#include <string>

#include "loopaction/functionals.hpp"
#include "loopaction/orbit.hpp"

namespace loopaction {

/// Outcome of comparing two computed quantities.
struct CheckReport {
    std::string name;
    double left = 0.0;
    double right = 0.0;
    double abs_deviation = 0.0;
    double rel_deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    /// Which relations were compared.
    std::string provenance;
};

/// Builds a report comparing relative deviation |l - r| / max(|l|, |r|) to tolerance.
CheckReport make_report(std::string name, double left, double right, double tolerance,
                        std::string provenance);

/// Report on a single non-negative quantity that must stay below tolerance.
CheckReport make_bound_report(std::string name, double value, double tolerance, std::string provenance);

/// 2 sqrt(f) against the time integral of (1/2 sum m|q'|^2 + 1/2 V'(q).q) over
/// one period; the report fails if the equivalent (... - 1/2 V) form also
/// deviates. Relative deviation is the larger of the two.
CheckReport action_identity(const PhysicalOrbit& orbit, const System& sys, double action_value,
                            double tolerance = 1e-3);

/// sum m_i |v_i|^2 against (1/M) sum_{i<j} m_i m_j |v_i - v_j|^2.
/// Throws MomentumNotZero if |sum m_i v_i| exceeds 1e-12 of the momentum scale.
CheckReport kinetic_identity(std::span<const Vec2, 3> velocities, const std::array<double, 3>& masses,
                             double tolerance = 1e-12);

/// max over the grid of |x'' + grad V(x)| (per body, mass-weighted for three
/// bodies) with x(t) = u(t/T), normalised by max |grad V|.
double ode_residual(const FourierLoop& loop, double period, const TwoBodySystem& sys,
                    const QuadratureGrid& grid);
double ode_residual(const TripleLoop& triple, double period, const ThreeBodySystem& sys,
                    const QuadratureGrid& grid);

/// max over samples of (max pair distance - min pair distance) / mean pair distance.
double equilateral_deviation(const PhysicalOrbit& orbit);

/// Largest relative deviation of the energy from its value at the first sample.
CheckReport energy_conservation(const Trajectory& trajectory, const System& sys, double tolerance = 1e-10);
CheckReport energy_conservation(const PhysicalOrbit& orbit, const System& sys, double tolerance = 1e-10);

}  // namespace loopaction
