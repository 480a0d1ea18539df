#include "loopaction/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "loopaction/errors.hpp"

namespace loopaction {

CheckReport make_report(std::string name, double left, double right, double tolerance,
                        std::string provenance) {
    CheckReport r;
    r.name = std::move(name);
    r.left = left;
    r.right = right;
    r.abs_deviation = std::abs(left - right);
    const double scale = std::max(std::abs(left), std::abs(right));
    if (!std::isfinite(left) || !std::isfinite(right)) {
        r.rel_deviation = std::numeric_limits<double>::infinity();
    } else {
        r.rel_deviation = scale > 0.0 ? r.abs_deviation / scale : 0.0;
    }
    r.tolerance = tolerance;
    r.pass = std::isfinite(r.rel_deviation) && r.rel_deviation <= tolerance;
    r.provenance = std::move(provenance);
    return r;
}

CheckReport make_bound_report(std::string name, double value, double tolerance, std::string provenance) {
    CheckReport r;
    r.name = std::move(name);
    r.left = value;
    r.right = 0.0;
    r.abs_deviation = std::abs(value);
    r.rel_deviation = std::abs(value);
    r.tolerance = tolerance;
    r.pass = std::isfinite(value) && std::abs(value) <= tolerance;
    r.provenance = std::move(provenance);
    return r;
}

CheckReport action_identity(const PhysicalOrbit& orbit, const System& sys, double action_value,
                            double tolerance) {
    const std::size_t n = orbit.sample_count();
    double virial_form = 0.0, potential_form = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& q = orbit.positions[j];
        const auto& v = orbit.velocities[j];
        double kinetic = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) kinetic += 0.5 * orbit.masses[i] * norm2(v[i]);
        // grad V . q = -(sum m_i a_i . q_i) for a_i = -grad_i V / m_i
        const auto acc = accelerations(sys, q);
        double virial = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) virial -= orbit.masses[i] * dot(acc[i], q[i]);
        virial_form += kinetic + 0.5 * virial;
        potential_form += kinetic - 0.5 * potential(sys, q);
    }
    // Samples are uniform over one period: the rectangle rule is spectrally accurate.
    const double dt = orbit.period / static_cast<double>(n);
    virial_form *= dt;
    potential_form *= dt;

    const double lhs = 2.0 * std::sqrt(action_value);
    CheckReport r = make_report("action_identity", lhs, virial_form, tolerance,
                                "[4f]^(1/2) vs time integral of kinetic + 1/2 V'(q).q");
    const CheckReport alt = make_report("", lhs, potential_form, tolerance, "");
    if (alt.rel_deviation > r.rel_deviation) {
        r.right = alt.right;
        r.abs_deviation = alt.abs_deviation;
        r.rel_deviation = alt.rel_deviation;
    }
    r.pass = r.pass && alt.pass;
    r.provenance += "; also checked against kinetic - 1/2 V";
    return r;
}

CheckReport kinetic_identity(std::span<const Vec2, 3> v, const std::array<double, 3>& m, double tolerance) {
    Vec2 momentum;
    double momentum_scale = 0.0;
    for (int i = 0; i < 3; ++i) {
        momentum += m[i] * v[i];
        momentum_scale += m[i] * norm(v[i]);
    }
    if (norm(momentum) > 1e-12 * std::max(1.0, momentum_scale)) {
        throw MomentumNotZero("kinetic_identity: total momentum is not zero");
    }
    const double total = m[0] + m[1] + m[2];
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < 3; ++i) {
        lhs += m[i] * norm2(v[i]);
        for (int j = i + 1; j < 3; ++j) rhs += m[i] * m[j] * norm2(v[i] - v[j]);
    }
    rhs /= total;
    return make_report("kinetic_identity", lhs, rhs, tolerance,
                       "sum m_i|v_i|^2 vs (1/M) sum m_i m_j |v_i - v_j|^2");
}

double ode_residual(const FourierLoop& loop, double period, const TwoBodySystem& sys,
                    const QuadratureGrid& grid) {
    const auto x = sample(loop, grid);
    const auto acc = sample_second_deriv(loop, grid);
    const double inv_t2 = 1.0 / (period * period);
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (norm(x[j]) < kNearCollisionRelative) throw CollisionEncountered("ode_residual: collision on grid");
        const Vec2 grad = potential_gradient(sys, x[j]);
        worst = std::max(worst, norm(inv_t2 * acc[j] + grad));
        scale = std::max(scale, norm(grad));
    }
    return worst / scale;
}

double ode_residual(const TripleLoop& triple, double period, const ThreeBodySystem& sys,
                    const QuadratureGrid& grid) {
    std::array<std::vector<Vec2>, 3> q, acc;
    for (int i = 0; i < 3; ++i) {
        q[i] = sample(triple.loops[i], grid);
        acc[i] = sample_second_deriv(triple.loops[i], grid);
    }
    const double inv_t2 = 1.0 / (period * period);
    const auto& m = sys.masses();
    double worst = 0.0, scale = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        const std::array<Vec2, 3> pos{q[0][j], q[1][j], q[2][j]};
        if (min_separation(System{sys}, pos) < kNearCollisionRelative) {
            throw CollisionEncountered("ode_residual: collision on grid");
        }
        const auto grad = potential_gradient(sys, pos);
        for (int i = 0; i < 3; ++i) {
            worst = std::max(worst, norm(m[i] * inv_t2 * acc[i][j] + grad[i]));
            scale = std::max(scale, norm(grad[i]));
        }
    }
    return worst / scale;
}

double equilateral_deviation(const PhysicalOrbit& orbit) {
    double worst = 0.0;
    for (const auto& q : orbit.positions) {
        if (q.size() != 3) throw ShapeMismatch("equilateral_deviation: needs a three-body orbit");
        const std::array<double, 3> d{norm(q[0] - q[1]), norm(q[0] - q[2]), norm(q[1] - q[2])};
        const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
        const double mean = (d[0] + d[1] + d[2]) / 3.0;
        worst = std::max(worst, (*hi - *lo) / mean);
    }
    return worst;
}

namespace {

template <typename Samples>
CheckReport energy_drift(const Samples& s, const System& sys, double tolerance) {
    double worst = 0.0, e0 = 0.0, worst_energy = 0.0;
    for (std::size_t j = 0; j < s.positions.size(); ++j) {
        const double e = total_energy(sys, s.positions[j], s.velocities[j]);
        if (j == 0) {
            e0 = e;
            worst_energy = e;
        }
        const double dev = std::abs(e - e0) / std::abs(e0);
        if (dev > worst) {
            worst = dev;
            worst_energy = e;
        }
    }
    CheckReport r = make_report("energy_conservation", e0, worst_energy, tolerance,
                                "1/2 sum m|q'|^2 + V(q) at every sample vs first sample");
    r.rel_deviation = worst;
    r.pass = std::isfinite(worst) && worst <= tolerance;
    return r;
}

}  // namespace

CheckReport energy_conservation(const Trajectory& trajectory, const System& sys, double tolerance) {
    return energy_drift(trajectory, sys, tolerance);
}

CheckReport energy_conservation(const PhysicalOrbit& orbit, const System& sys, double tolerance) {
    return energy_drift(orbit, sys, tolerance);
}

}  // namespace loopaction
