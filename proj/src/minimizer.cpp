#include "loopaction/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "loopaction/errors.hpp"

namespace loopaction {

std::string_view to_string(MinimizeStatus status) {
    switch (status) {
        case MinimizeStatus::Converged: return "Converged";
        case MinimizeStatus::MaxIters: return "MaxIters";
        case MinimizeStatus::NearCollision: return "NearCollision";
    }
    return "Unknown";
}

std::string_view to_string(OrbitSource source) {
    switch (source) {
        case OrbitSource::Minimizer: return "Minimizer";
        case OrbitSource::KeplerOracle: return "KeplerOracle";
        case OrbitSource::LagrangeOracle: return "LagrangeOracle";
        case OrbitSource::Integrator: return "Integrator";
    }
    return "Unknown";
}

void MinimizeOptions::validate() const {
    auto fail = [](const char* field) {
        throw std::invalid_argument(std::string("MinimizeOptions: ") + field + " out of range");
    };
    if (max_iters <= 0) fail("max_iters");
    if (!(grad_tol > 0.0)) fail("grad_tol");
    if (!(step_init > 0.0)) fail("step_init");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) fail("backtrack_factor");
    if (!(collision_floor >= 0.0)) fail("collision_floor");
    if (!(stall_tol >= 0.0)) fail("stall_tol");
    if (stall_window <= 0) fail("stall_window");
    if (max_grid <= 0) fail("max_grid");
}

namespace {

// Riesz map of a coefficient gradient under the W^{1,2} inner product, with
// the mean weighted like the first mode: the potential curvature along a
// translation is comparable to the kinetic curvature of mode 1.
FourierLoop sobolev_direction(const FourierLoop& g) {
    FourierLoop d = g;
    d.mean *= 1.0 / (1.0 + kTwoPi * kTwoPi);
    for (int k = 1; k <= g.modes(); ++k) {
        const double w = kTwoPi * k;
        const double inv = 2.0 / (1.0 + w * w);
        d.cos_coeffs[k - 1] *= inv;
        d.sin_coeffs[k - 1] *= inv;
    }
    return d;
}

struct TwoBodyOps {
    using Loop = FourierLoop;
    const TwoBodySystem& sys;

    double action(const Loop& u, const QuadratureGrid& g) const { return action_reduced(u, sys, g); }
    double change(const Loop& u, const Loop& step, const QuadratureGrid& g) const {
        return action_reduced_change(u, step, sys, g);
    }
    Loop gradient(const Loop& u, const QuadratureGrid& g) const { return gradient_reduced(u, sys, g); }
    Loop direction(const Loop& grad) const { return sobolev_direction(grad); }
    Loop project(const Loop& u, const QuadratureGrid& g) const { return project_to_manifold(u, sys, g); }
    std::vector<int> windings(const Loop& u, const QuadratureGrid& g) const { return {winding_number(u, g)}; }
    double separation(const Loop& u, const QuadratureGrid& g) const { return min_separation(u, g); }
    double diameter(const Loop& u, const QuadratureGrid& g) const { return loop_diameter(u, g); }
    ActionValue full(const Loop& u, const QuadratureGrid& g) const { return action_full(u, sys, g); }
    double period(const Loop& u, const QuadratureGrid& g) const { return recover_period(u, sys, g); }
};

struct ThreeBodyOps {
    using Loop = TripleLoop;
    const ThreeBodySystem& sys;

    double action(const Loop& u, const QuadratureGrid& g) const { return action_reduced(u, sys, g); }
    double change(const Loop& u, const Loop& step, const QuadratureGrid& g) const {
        return action_reduced_change(u, step, sys, g);
    }
    Loop gradient(const Loop& u, const QuadratureGrid& g) const { return gradient_reduced(u, sys, g); }
    Loop direction(const Loop& grad) const {
        Loop d = grad;
        for (auto& l : d.loops) l = sobolev_direction(l);
        return d;
    }
    Loop project(const Loop& u, const QuadratureGrid& g) const { return project_to_manifold(u, sys, g); }
    std::vector<int> windings(const Loop& u, const QuadratureGrid& g) const {
        return {winding_number(u.relative(0, 1), g), winding_number(u.relative(0, 2), g),
                winding_number(u.relative(1, 2), g)};
    }
    double separation(const Loop& u, const QuadratureGrid& g) const { return min_separation(u, g); }
    double diameter(const Loop& u, const QuadratureGrid& g) const {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) d = std::max(d, loop_diameter(u.relative(i, j), g));
        }
        return d;
    }
    ActionValue full(const Loop& u, const QuadratureGrid& g) const { return action_full(u, sys, g); }
    double period(const Loop& u, const QuadratureGrid& g) const { return recover_period(u, sys, g); }
};

double step_dot(const FourierLoop& a, const FourierLoop& b) { return coefficient_dot(a, b); }
double step_dot(const TripleLoop& a, const TripleLoop& b) { return coefficient_dot(a, b); }

template <typename Loop>
Loop moved(const Loop& u, double s, const Loop& d) {
    Loop out = u;
    out.axpy(s, d);
    return out;
}

// Windings at the current grid, doubling it while the snap check fails.
template <typename Ops>
std::optional<std::vector<int>> checked_windings(const Ops& ops, const typename Ops::Loop& u,
                                                 QuadratureGrid& grid, int max_grid) {
    for (;;) {
        try {
            return ops.windings(u, grid);
        } catch (const NonIntegerWinding&) {
            if (2 * grid.size() > max_grid) throw;
            grid = grid.refined();
        } catch (const NearCollision&) {
            return std::nullopt;
        }
    }
}

template <typename Ops>
MinimizeResult<typename Ops::Loop> run(const Ops& ops, const typename Ops::Loop& start,
                                       const QuadratureGrid& initial_grid, const MinimizeOptions& opt) {
    using Loop = typename Ops::Loop;
    opt.validate();
    QuadratureGrid grid = initial_grid;

    std::optional<std::vector<int>> windings;
    Loop u;
    try {
        windings = checked_windings(ops, start, grid, opt.max_grid);
        if (!windings) throw BadStart("minimize: start loop is at a collision");
        for (const int w : *windings) {
            if (w == 0) throw BadStart("minimize: start loop has zero winding");
        }
        u = ops.project(start, grid);
    } catch (const CollisionEncountered& e) {
        throw BadStart(std::string("minimize: ") + e.what());
    }

    const double floor = opt.collision_floor > 0.0 ? opt.collision_floor : 1e-5 * ops.diameter(u, grid);

    MinimizeResult<Loop> result;
    double f = ops.action(u, grid);
    Loop g = ops.gradient(u, grid);
    double gnorm = std::sqrt(step_dot(g, g));
    result.action_history.push_back(f);
    std::vector<double> gradient_history{gnorm};
    result.status = MinimizeStatus::MaxIters;

    double step = opt.step_init;
    int it = 0;
    for (; it < opt.max_iters; ++it) {
        if (gnorm <= opt.grad_tol * std::max(1.0, f)) {
            result.status = MinimizeStatus::Converged;
            break;
        }
        const Loop d = [&] {
            Loop dir = ops.direction(g);
            dir *= -1.0;
            return dir;
        }();
        const double slope = step_dot(g, d);

        bool accepted = false;
        bool collided = false;
        bool refined = false;
        double s = std::min(step / opt.backtrack_factor, 1e6 * opt.step_init);
        Loop next;
        double f_next = f;
        std::vector<int> next_windings;
        for (int bt = 0; bt < 200 && s > 1e-300; ++bt, s *= opt.backtrack_factor) {
            Loop trial = moved(u, s, d);
            double df;
            try {
                // The change is evaluated directly: near a minimum it is far
                // below the rounding level of f itself.
                Loop delta = d;
                delta *= s;
                df = ops.change(u, delta, grid);
                if (!(df <= opt.armijo_c * s * slope)) continue;
            } catch (const CollisionEncountered&) {
                continue;
            }

            const int grid_before = grid.size();
            std::optional<std::vector<int>> w;
            try {
                w = checked_windings(ops, trial, grid, opt.max_grid);
            } catch (const NonIntegerWinding&) {
                continue;
            }
            if (grid.size() != grid_before) {
                refined = true;
                break;
            }
            if (!w) {
                // Crossing the near-collision threshold: report the boundary case.
                next = ops.project(trial, grid);
                f_next = f + df;
                collided = true;
                accepted = true;
                break;
            }
            if (*w != *windings) continue;
            next = ops.project(trial, grid);
            f_next = f + df;
            next_windings = *w;
            accepted = true;
            break;
        }

        if (refined) {
            // Re-evaluate on the finer grid and retry the step.
            f = ops.action(u, grid);
            g = ops.gradient(u, grid);
            gnorm = std::sqrt(step_dot(g, g));
            continue;
        }
        if (!accepted) break;  // no descent possible at machine precision

        step = s;
        u = std::move(next);
        f = f_next;
        result.action_history.push_back(f);
        if (collided || ops.separation(u, grid) < floor) {
            result.status = MinimizeStatus::NearCollision;
            ++it;
            break;
        }
        windings = next_windings;
        g = ops.gradient(u, grid);
        gnorm = std::sqrt(step_dot(g, g));

        gradient_history.push_back(gnorm);

        // Stalled: the action is flat and the gradient has stopped shrinking.
        const auto& h = result.action_history;
        if (h.size() > static_cast<std::size_t>(opt.stall_window)) {
            const double old = h[h.size() - 1 - opt.stall_window];
            const double old_g = gradient_history[gradient_history.size() - 1 - opt.stall_window];
            if (std::abs(old - f) <= opt.stall_tol * std::abs(f) && gnorm > 0.5 * old_g) {
                ++it;
                break;
            }
        }
    }
    if (result.status == MinimizeStatus::MaxIters && gnorm <= opt.grad_tol * std::max(1.0, f)) {
        result.status = MinimizeStatus::Converged;
    }

    result.final_loop = u;
    result.action = ops.action(u, grid);
    result.gradient_norm = gnorm;
    result.iterations = it;
    result.min_separation = ops.separation(u, grid);
    result.grid_size = grid.size();
    if (result.status != MinimizeStatus::NearCollision) {
        result.windings = *windings;
        const ActionValue full = ops.full(u, grid);
        result.factor_kinetic = full.kinetic_factor;
        result.factor_potential = full.potential_factor;
        result.period = ops.period(u, grid);
    } else {
        try {
            result.windings = ops.windings(u, grid);
        } catch (const Error&) {
            result.windings.clear();
        }
        try {
            const ActionValue full = ops.full(u, grid);
            result.factor_kinetic = full.kinetic_factor;
            result.factor_potential = full.potential_factor;
            result.period = ops.period(u, grid);
        } catch (const Error&) {
            // Quadrature is meaningless this close to collision.
        }
    }
    return result;
}

}  // namespace

TwoBodyResult minimize(const FourierLoop& start, const TwoBodySystem& sys, const QuadratureGrid& grid,
                       const MinimizeOptions& options) {
    return run(TwoBodyOps{sys}, start, grid, options);
}

ThreeBodyResult minimize(const TripleLoop& start, const ThreeBodySystem& sys, const QuadratureGrid& grid,
                         const MinimizeOptions& options) {
    return run(ThreeBodyOps{sys}, start, grid, options);
}

namespace {

double period_from(double inv_t2) {
    if (!(inv_t2 > 0.0)) throw DegenerateLoop("recover_period: non-positive 1/T^2");
    return 1.0 / std::sqrt(inv_t2);
}

double checked_period(const PeriodEstimate& p) {
    if (std::abs(p.virial_form - p.energy_form) > 1e-9 * std::abs(p.virial_form)) {
        throw OffManifold("recover_period: period forms disagree (" + std::to_string(p.virial_form) +
                          " vs " + std::to_string(p.energy_form) + ")");
    }
    return p.virial_form;
}

}  // namespace

PeriodEstimate period_forms(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid) {
    const double kin = kinetic_integral(loop);
    if (kin < 1e-14) throw DegenerateLoop("recover_period: kinetic integral vanishes");
    double virial = 0.0, mean_v = 0.0;
    for (const auto& p : sample(loop, grid)) {
        virial += dot(potential_gradient(sys, p), p);
        mean_v += potential(sys, p);
    }
    virial *= grid.weight();
    mean_v *= grid.weight();
    return {period_from(virial / (2.0 * kin)), period_from((sys.energy() - mean_v) / kin)};
}

PeriodEstimate period_forms(const TripleLoop& triple, const ThreeBodySystem& sys,
                            const QuadratureGrid& grid) {
    const double kin = kinetic_integral(triple);
    if (kin < 1e-14) throw DegenerateLoop("recover_period: kinetic integral vanishes");
    std::array<std::vector<Vec2>, 3> pts;
    for (int i = 0; i < 3; ++i) pts[i] = sample(triple.loops[i], grid);
    double virial = 0.0, mean_v = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        const std::array<Vec2, 3> q{pts[0][j], pts[1][j], pts[2][j]};
        const auto g = potential_gradient(sys, q);
        for (int i = 0; i < 3; ++i) virial += dot(g[i], q[i]);
        mean_v += potential(sys, q);
    }
    virial *= grid.weight();
    mean_v *= grid.weight();
    return {period_from(virial / (2.0 * kin)), period_from((sys.energy() - mean_v) / kin)};
}

double recover_period(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid) {
    return checked_period(period_forms(loop, sys, grid));
}

double recover_period(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid) {
    return checked_period(period_forms(triple, sys, grid));
}

namespace {

PhysicalOrbit physical_from(std::span<const FourierLoop> loops, double period, const System& sys,
                            std::size_t samples, std::vector<double> masses) {
    if (!(period > 0.0)) throw std::invalid_argument("to_physical: period must be positive");
    PhysicalOrbit orbit;
    orbit.period = period;
    orbit.source = OrbitSource::Minimizer;
    orbit.masses = std::move(masses);
    orbit.times.resize(samples);
    orbit.positions.assign(samples, std::vector<Vec2>(loops.size()));
    orbit.velocities.assign(samples, std::vector<Vec2>(loops.size()));
    for (std::size_t j = 0; j < samples; ++j) {
        const double s = static_cast<double>(j) / static_cast<double>(samples);
        orbit.times[j] = s * period;
        for (std::size_t i = 0; i < loops.size(); ++i) {
            orbit.positions[j][i] = eval(loops[i], s);
            orbit.velocities[j][i] = deriv(loops[i], s) / period;
        }
    }
    orbit.energy = samples > 0 ? total_energy(sys, orbit.positions[0], orbit.velocities[0]) : 0.0;
    return orbit;
}

}  // namespace

PhysicalOrbit to_physical(const FourierLoop& loop, double period, const TwoBodySystem& sys,
                          std::size_t samples) {
    return physical_from(std::span(&loop, 1), period, sys, samples, {1.0});
}

PhysicalOrbit to_physical(const TripleLoop& triple, double period, const ThreeBodySystem& sys,
                          std::size_t samples) {
    return physical_from(triple.loops, period, sys, samples,
                         {triple.masses.begin(), triple.masses.end()});
}

}  // namespace loopaction
