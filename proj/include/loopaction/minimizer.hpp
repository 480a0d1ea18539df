#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "loopaction/functionals.hpp"
#include "loopaction/orbit.hpp"

namespace loopaction {

struct MinimizeOptions {
    int max_iters = 20000;
    /// Converged when the coefficient gradient norm is below grad_tol * max(1, action).
    double grad_tol = 1e-8;
    double step_init = 1.0;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    /// Absolute separation floor; 0 selects 1e-5 times the initial loop diameter.
    double collision_floor = 0.0;
    /// Stop once the action changes by less than this (relative) over stall_window iterations.
    double stall_tol = 1e-12;
    int stall_window = 50;
    /// Largest grid the winding check may refine to.
    int max_grid = 8192;

    /// Throws std::invalid_argument naming the first field out of range.
    void validate() const;
};

enum class MinimizeStatus { Converged, MaxIters, NearCollision };

std::string_view to_string(MinimizeStatus status);

template <typename Loop>
struct MinimizeResult {
    /// Last accepted iterate, on the constraint manifold.
    Loop final_loop;
    double action = 0.0;
    double period = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    MinimizeStatus status = MinimizeStatus::MaxIters;
    double min_separation = 0.0;
    /// deg u for two bodies; deg(u1-u2), deg(u1-u3), deg(u2-u3) for three.
    std::vector<int> windings;
    double factor_kinetic = 0.0;
    double factor_potential = 0.0;
    /// Accepted-step action values, starting with the initial loop. Each entry
    /// is the previous one plus the directly evaluated change, so the last
    /// entry agrees with `action` to rounding.
    std::vector<double> action_history;
    /// Grid size in use when the run stopped (may exceed the requested one).
    int grid_size = 0;
};

using TwoBodyResult = MinimizeResult<FourierLoop>;
using ThreeBodyResult = MinimizeResult<TripleLoop>;

/// Descends the scale-invariant action from `start` by H^1-preconditioned
/// gradient steps with Armijo backtracking, keeping iterates on the manifold.
///
/// Throws BadStart when a required winding is zero or the start collides.
/// Reaching the collision floor ends the run with status NearCollision.
TwoBodyResult minimize(const FourierLoop& start, const TwoBodySystem& sys, const QuadratureGrid& grid,
                       const MinimizeOptions& options = {});
ThreeBodyResult minimize(const TripleLoop& start, const ThreeBodySystem& sys,
                         const QuadratureGrid& grid, const MinimizeOptions& options = {});

/// Both forms of the period-scaling relation on a manifold loop.
struct PeriodEstimate {
    /// from 1/T^2 = integral V'(u).u / integral |u'|^2
    double virial_form = 0.0;
    /// from 1/T^2 = integral (h - V) / (1/2 integral |u'|^2)
    double energy_form = 0.0;
};

PeriodEstimate period_forms(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid);
PeriodEstimate period_forms(const TripleLoop& triple, const ThreeBodySystem& sys,
                            const QuadratureGrid& grid);

/// Period recovered from a manifold loop. Throws DegenerateLoop if the kinetic
/// integral vanishes and OffManifold if the two forms disagree beyond 1e-9.
double recover_period(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid);
double recover_period(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid);

/// x(t) = u(t/T), x'(t) = u'(t/T)/T on `samples` uniform times; energy taken at t = 0.
PhysicalOrbit to_physical(const FourierLoop& loop, double period, const TwoBodySystem& sys,
                          std::size_t samples = 256);
PhysicalOrbit to_physical(const TripleLoop& triple, double period, const ThreeBodySystem& sys,
                          std::size_t samples = 256);

}  // namespace loopaction
