#include "loopaction/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loopaction/errors.hpp"

namespace loopaction {

KeplerElements::KeplerElements(double coupling_, double energy_, double eccentricity_)
    : coupling(coupling_), energy(energy_), eccentricity(eccentricity_) {
    if (!(coupling > 0.0)) throw std::invalid_argument("KeplerElements: coupling must be positive");
    if (!(energy < 0.0)) throw InvalidEnergy("KeplerElements: energy must be negative for a bound orbit");
    if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
        throw std::invalid_argument("KeplerElements: eccentricity must lie in [0, 1)");
    }
}

double kepler_period(double coupling, double energy) {
    if (!(energy < 0.0)) throw InvalidEnergy("kepler_period: energy must be negative");
    return kTwoPi * std::pow(-2.0 * energy, -1.5) * coupling;
}

double gordon_min_action(double coupling, double period) {
    return 1.5 * std::pow(kTwoPi, 2.0 / 3.0) * std::cbrt(coupling * coupling) * std::cbrt(period);
}

double claimed_action_2body(double coupling, double energy) {
    if (!(energy < 0.0)) throw InvalidEnergy("claimed_action_2body: energy must be negative");
    return 9.0 * kPi * kPi * std::pow(2.0, -13.0 / 3.0) * coupling * coupling / (-energy);
}

double solve_kepler_equation(double mean_anomaly, double eccentricity) {
    if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
        throw std::invalid_argument("solve_kepler_equation: eccentricity must lie in [0, 1)");
    }
    // Reduce to [-pi, pi] and restore the whole turns at the end.
    const double turns = std::round(mean_anomaly / kTwoPi);
    const double m = mean_anomaly - turns * kTwoPi;
    auto residual = [&](double ea) { return ea - eccentricity * std::sin(ea) - m; };

    // The root is bracketed by [m - e, m + e]; Newton steps leaving the bracket are bisected.
    double lo = m - eccentricity, hi = m + eccentricity;
    double ea = m + eccentricity * std::sin(m);
    for (int it = 0; it < 100; ++it) {
        const double r = residual(ea);
        if (std::abs(r) < 1e-13) return ea + turns * kTwoPi;
        if (r > 0.0) hi = ea; else lo = ea;
        double next = ea - r / (1.0 - eccentricity * std::cos(ea));
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == ea) return ea + turns * kTwoPi;
        ea = next;
    }
    if (std::abs(residual(ea)) < 1e-13) return ea + turns * kTwoPi;
    throw NoConvergence("solve_kepler_equation: no convergence after 100 iterations");
}

PhysicalOrbit kepler_orbit(const KeplerElements& el, std::size_t samples) {
    const double a = el.coupling;
    const double e = el.eccentricity;
    const double axis = el.semi_major_axis();
    const double period = kepler_period(a, el.energy);
    const double mean_motion = kTwoPi / period;
    const double minor = axis * std::sqrt(1.0 - e * e);

    PhysicalOrbit orbit;
    orbit.period = period;
    orbit.energy = el.energy;
    orbit.source = OrbitSource::KeplerOracle;
    orbit.masses = {1.0};
    orbit.times.resize(samples);
    orbit.positions.assign(samples, std::vector<Vec2>(1));
    orbit.velocities.assign(samples, std::vector<Vec2>(1));
    for (std::size_t j = 0; j < samples; ++j) {
        const double t = period * static_cast<double>(j) / static_cast<double>(samples);
        const double ea = solve_kepler_equation(mean_motion * t, e);
        const double c = std::cos(ea), s = std::sin(ea);
        const double ea_dot = mean_motion / (1.0 - e * c);
        orbit.times[j] = t;
        orbit.positions[j][0] = {axis * (c - e), minor * s};
        orbit.velocities[j][0] = {-axis * s * ea_dot, minor * c * ea_dot};
    }
    return orbit;
}

namespace {

int fitted_modes(const QuadratureGrid& grid) { return std::max(1, (grid.size() - 1) / 4); }

std::vector<Vec2> body_track(const PhysicalOrbit& orbit, std::size_t body) {
    std::vector<Vec2> track(orbit.sample_count());
    for (std::size_t j = 0; j < track.size(); ++j) track[j] = orbit.positions[j][body];
    return track;
}

}  // namespace

FourierLoop kepler_loop(const KeplerElements& elements, const QuadratureGrid& grid) {
    const auto orbit = kepler_orbit(elements, static_cast<std::size_t>(grid.size()));
    return fit_loop(body_track(orbit, 0), fitted_modes(grid));
}

double kepler_loop_action(double coupling, double energy, double eccentricity, const QuadratureGrid& grid) {
    const KeplerElements el(coupling, energy, eccentricity);
    return action_full(kepler_loop(el, grid), TwoBodySystem(coupling, energy), grid).value;
}

LagrangeShape lagrange_shape(const std::array<double, 3>& masses) {
    for (const double m : masses) {
        if (!(m > 0.0)) throw std::invalid_argument("lagrange_shape: masses must be positive");
    }
    LagrangeShape shape;
    shape.masses = masses;
    shape.vertices = {Vec2{1.0, 0.0}, Vec2{0.0, 0.0}, Vec2{0.5, std::sqrt(3.0) / 2.0}};
    Vec2 center;
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        center += masses[i] * shape.vertices[i];
        total += masses[i];
    }
    center = center / total;
    for (auto& v : shape.vertices) v -= center;
    return shape;
}

PhysicalOrbit lagrange_solution(const std::array<double, 3>& masses, double energy, double eccentricity,
                                std::size_t samples) {
    const ThreeBodySystem sys(masses, energy);
    const double relative_energy = sys.total_mass() * energy / sys.pair_sum();
    const auto relative = kepler_orbit(KeplerElements(sys.total_mass(), relative_energy, eccentricity), samples);
    const auto shape = lagrange_shape(masses);

    PhysicalOrbit orbit;
    orbit.period = relative.period;
    orbit.times = relative.times;
    orbit.source = OrbitSource::LagrangeOracle;
    orbit.masses = {masses.begin(), masses.end()};
    orbit.positions.assign(samples, std::vector<Vec2>(3));
    orbit.velocities.assign(samples, std::vector<Vec2>(3));
    for (std::size_t j = 0; j < samples; ++j) {
        for (int i = 0; i < 3; ++i) {
            orbit.positions[j][i] = complex_mul(relative.positions[j][0], shape.vertices[i]);
            orbit.velocities[j][i] = complex_mul(relative.velocities[j][0], shape.vertices[i]);
        }
    }
    orbit.energy = samples > 0 ? total_energy(sys, orbit.positions[0], orbit.velocities[0]) : energy;
    return orbit;
}

TripleLoop lagrange_loop(const std::array<double, 3>& masses, double energy, double eccentricity,
                         const QuadratureGrid& grid) {
    const auto orbit = lagrange_solution(masses, energy, eccentricity, static_cast<std::size_t>(grid.size()));
    std::array<FourierLoop, 3> loops;
    for (int i = 0; i < 3; ++i) loops[i] = fit_loop(body_track(orbit, i), fitted_modes(grid));
    return com_project(loops, masses);
}

LagrangePeriods lagrange_period(const std::array<double, 3>& masses, double energy) {
    const ThreeBodySystem sys(masses, energy);
    const double base = kTwoPi * std::pow(sys.pair_sum() / (-2.0 * energy), 1.5);
    return {base, base * sys.total_mass(), base / std::sqrt(sys.total_mass())};
}

LagrangeActions lagrange_actions(const std::array<double, 3>& masses, double energy,
                                   const QuadratureGrid& grid, double eccentricity) {
    const ThreeBodySystem sys(masses, energy);
    const double sigma = sys.pair_sum();
    LagrangeActions out;
    out.claimed_action = std::pow(2.0, -13.0 / 3.0) * 9.0 * kPi * kPi * sigma * sigma * sigma / (-energy);
    out.derived_lagrange = action_full(lagrange_loop(masses, energy, eccentricity, grid), sys, grid).value;
    return out;
}

namespace {

struct State {
    std::vector<Vec2> q;
    std::vector<Vec2> v;
};

State add_scaled(const State& s, double h, const std::vector<Vec2>& dq, const std::vector<Vec2>& dv) {
    State out = s;
    for (std::size_t i = 0; i < s.q.size(); ++i) {
        out.q[i] += h * dq[i];
        out.v[i] += h * dv[i];
    }
    return out;
}

// Distance from the origin to the segment [a, b].
double segment_clearance(const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double len2 = norm2(d);
    const double s = len2 > 0.0 ? std::clamp(-dot(a, d) / len2, 0.0, 1.0) : 0.0;
    return norm(a + s * d);
}

// Smallest separation along the straight path between two consecutive states,
// so a step that jumps across a collision is still caught.
double swept_separation(const System& sys, const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
    if (std::holds_alternative<TwoBodySystem>(sys)) return segment_clearance(from[0], to[0]);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            best = std::min(best, segment_clearance(from[i] - from[j], to[i] - to[j]));
        }
    }
    return best;
}

}  // namespace

Trajectory integrate_ode(const System& sys, std::span<const Vec2> positions, std::span<const Vec2> velocities,
                         double duration, int steps, double collision_floor) {
    const std::size_t bodies = body_count(sys);
    if (positions.size() != bodies || velocities.size() != bodies) {
        throw ShapeMismatch("integrate_ode: state size does not match the system");
    }
    if (steps < 1) throw std::invalid_argument("integrate_ode: steps must be positive");
    if (!(duration >= 0.0)) throw std::invalid_argument("integrate_ode: duration must be non-negative");

    auto check = [&](const std::vector<Vec2>& from, const std::vector<Vec2>& q, double t) {
        const bool finite = std::all_of(q.begin(), q.end(), [](const Vec2& p) {
            return std::isfinite(p.x) && std::isfinite(p.y);
        });
        if (!finite || swept_separation(sys, from, q) < collision_floor) {
            throw CollisionEncountered("integrate_ode: collision at t = " + std::to_string(t));
        }
    };

    State s{{positions.begin(), positions.end()}, {velocities.begin(), velocities.end()}};
    check(s.q, s.q, 0.0);

    Trajectory traj;
    const int count = duration == 0.0 ? 0 : steps;
    const double h = count == 0 ? 0.0 : duration / count;
    traj.times.reserve(count + 1);
    auto record = [&](double t, const std::vector<Vec2>& acc) {
        traj.times.push_back(t);
        traj.positions.push_back(s.q);
        traj.velocities.push_back(s.v);
        traj.accelerations.push_back(acc);
        traj.energies.push_back(total_energy(sys, s.q, s.v));
    };

    std::vector<Vec2> a1 = accelerations(sys, s.q);
    record(0.0, a1);
    for (int n = 0; n < count; ++n) {
        const State s2 = add_scaled(s, 0.5 * h, s.v, a1);
        const auto a2 = accelerations(sys, s2.q);
        const State s3 = add_scaled(s, 0.5 * h, s2.v, a2);
        const auto a3 = accelerations(sys, s3.q);
        const State s4 = add_scaled(s, h, s3.v, a3);
        const auto a4 = accelerations(sys, s4.q);
        const std::vector<Vec2> before = s.q;
        for (std::size_t i = 0; i < bodies; ++i) {
            s.q[i] += (h / 6.0) * (s.v[i] + 2.0 * s2.v[i] + 2.0 * s3.v[i] + s4.v[i]);
            s.v[i] += (h / 6.0) * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        const double t = (n + 1) * h;
        check(before, s.q, t);
        a1 = accelerations(sys, s.q);
        record(t, a1);
    }

    const double e0 = traj.energies.front();
    for (const double e : traj.energies) {
        traj.max_energy_drift = std::max(traj.max_energy_drift, std::abs(e - e0) / std::abs(e0));
    }
    return traj;
}

namespace {

double state_norm2(const std::vector<Vec2>& q, const std::vector<Vec2>& v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) sum += norm2(q[i]) + norm2(v[i]);
    return sum;
}

// Squared phase-space distance to the initial state on [t_a, t_b], cubic Hermite in time.
struct HermiteGap {
    const Trajectory& tr;
    std::size_t a;

    double operator()(double tau) const {
        const std::size_t b = a + 1;
        const double h = tr.times[b] - tr.times[a];
        const double t2 = tau * tau, t3 = t2 * tau;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tau;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        double sum = 0.0;
        for (std::size_t i = 0; i < tr.positions[a].size(); ++i) {
            const Vec2 q = h00 * tr.positions[a][i] + (h10 * h) * tr.velocities[a][i] +
                           h01 * tr.positions[b][i] + (h11 * h) * tr.velocities[b][i];
            const Vec2 v = h00 * tr.velocities[a][i] + (h10 * h) * tr.accelerations[a][i] +
                           h01 * tr.velocities[b][i] + (h11 * h) * tr.accelerations[b][i];
            sum += norm2(q - tr.positions[0][i]) + norm2(v - tr.velocities[0][i]);
        }
        return sum;
    }
};

// Minimises the interpolated gap over [t_lo, t_hi] spanning samples lo..hi.
std::pair<double, double> refine_return(const Trajectory& tr, std::size_t lo, std::size_t hi) {
    // Golden-section over the concatenated intervals, parametrised by global time.
    auto gap_at = [&](double t) {
        std::size_t a = lo;
        while (a + 1 < hi && tr.times[a + 1] < t) ++a;
        const double tau = (t - tr.times[a]) / (tr.times[a + 1] - tr.times[a]);
        return HermiteGap{tr, a}(std::clamp(tau, 0.0, 1.0));
    };
    constexpr double inv_phi = 0.6180339887498949;
    double x0 = tr.times[lo], x1 = tr.times[hi];
    double c = x1 - inv_phi * (x1 - x0), d = x0 + inv_phi * (x1 - x0);
    double fc = gap_at(c), fd = gap_at(d);
    for (int it = 0; it < 200 && x1 - x0 > 1e-15 * std::max(1.0, std::abs(x1)); ++it) {
        if (fc < fd) {
            x1 = d; d = c; fd = fc;
            c = x1 - inv_phi * (x1 - x0);
            fc = gap_at(c);
        } else {
            x0 = c; c = d; fc = fd;
            d = x0 + inv_phi * (x1 - x0);
            fd = gap_at(d);
        }
    }
    const double t = 0.5 * (x0 + x1);
    return {t, gap_at(t)};
}

}  // namespace

double measure_period(const Trajectory& tr, double tolerance) {
    const std::size_t n = tr.sample_count();
    if (n < 3) throw NoReturn("measure_period: trajectory too short");
    const double scale2 = state_norm2(tr.positions[0], tr.velocities[0]);
    if (!(scale2 > 0.0)) throw NoReturn("measure_period: zero initial state");

    std::vector<double> gap(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < tr.positions[j].size(); ++i) {
            sum += norm2(tr.positions[j][i] - tr.positions[0][i]) + norm2(tr.velocities[j][i] - tr.velocities[0][i]);
        }
        gap[j] = std::sqrt(sum / scale2);
    }

    // Leave the neighbourhood of the start before looking for a return.
    constexpr double leave = 1e-2;
    std::size_t j = 1;
    while (j < n && gap[j] < leave) ++j;
    for (; j < n; ++j) {
        const bool local_min = gap[j] <= gap[j - 1] && (j + 1 == n || gap[j] <= gap[j + 1]);
        if (!local_min || gap[j] > 10 * leave) continue;
        const std::size_t lo = j - 1, hi = std::min(j + 1, n - 1);
        const auto [t, g2] = refine_return(tr, lo, hi);
        if (std::sqrt(g2 / scale2) <= tolerance) return t;
    }
    throw NoReturn("measure_period: state does not return within the integrated duration");
}

}  // namespace loopaction
