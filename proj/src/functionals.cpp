#include "loopaction/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "loopaction/compensated_sum.hpp"
#include "loopaction/errors.hpp"

namespace loopaction {

TwoBodySystem::TwoBodySystem(double coupling, double energy) : coupling_(coupling), energy_(energy) {
    if (!(coupling > 0.0) || !std::isfinite(coupling)) {
        throw std::invalid_argument("TwoBodySystem: coupling a must be positive");
    }
    if (!(energy < 0.0) || !std::isfinite(energy)) {
        throw InvalidEnergy("TwoBodySystem: energy h must be negative");
    }
}

ThreeBodySystem::ThreeBodySystem(std::array<double, 3> masses, double energy)
    : masses_(masses), energy_(energy) {
    for (const double m : masses) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw std::invalid_argument("ThreeBodySystem: masses must be positive");
        }
    }
    if (!(energy < 0.0) || !std::isfinite(energy)) {
        throw InvalidEnergy("ThreeBodySystem: energy E must be negative");
    }
}

double potential(const TwoBodySystem& sys, const Vec2& x) {
    const double r = norm(x);
    if (r == 0.0) throw CollisionEncountered("potential: body at the origin");
    return -sys.coupling() / r;
}

double potential(const ThreeBodySystem& sys, std::span<const Vec2, 3> q) {
    const auto& m = sys.masses();
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double r = norm(q[i] - q[j]);
            if (r == 0.0) throw CollisionEncountered("potential: two bodies coincide");
            v -= m[i] * m[j] / r;
        }
    }
    return v;
}

Vec2 potential_gradient(const TwoBodySystem& sys, const Vec2& x) {
    const double r = norm(x);
    if (r == 0.0) throw CollisionEncountered("potential_gradient: body at the origin");
    return (sys.coupling() / (r * r * r)) * x;
}

std::array<Vec2, 3> potential_gradient(const ThreeBodySystem& sys, std::span<const Vec2, 3> q) {
    const auto& m = sys.masses();
    std::array<Vec2, 3> g{};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const Vec2 d = q[i] - q[j];
            const double r = norm(d);
            if (r == 0.0) throw CollisionEncountered("potential_gradient: two bodies coincide");
            const Vec2 f = (m[i] * m[j] / (r * r * r)) * d;
            g[i] += f;
            g[j] -= f;
        }
    }
    return g;
}

std::size_t body_count(const System& sys) {
    return std::holds_alternative<TwoBodySystem>(sys) ? 1 : 3;
}

std::vector<double> body_masses(const System& sys) {
    if (const auto* three = std::get_if<ThreeBodySystem>(&sys)) {
        return {three->masses().begin(), three->masses().end()};
    }
    return {1.0};
}

double system_energy(const System& sys) {
    return std::visit([](const auto& s) { return s.energy(); }, sys);
}

namespace {

std::span<const Vec2, 3> as_triple(std::span<const Vec2> q) {
    if (q.size() != 3) throw ShapeMismatch("three-body system needs exactly three positions");
    return std::span<const Vec2, 3>(q.data(), 3);
}

}  // namespace

double potential(const System& sys, std::span<const Vec2> q) {
    if (const auto* two = std::get_if<TwoBodySystem>(&sys)) {
        if (q.size() != 1) throw ShapeMismatch("two-body system needs exactly one position");
        return potential(*two, q[0]);
    }
    return potential(std::get<ThreeBodySystem>(sys), as_triple(q));
}

std::vector<Vec2> accelerations(const System& sys, std::span<const Vec2> q) {
    if (const auto* two = std::get_if<TwoBodySystem>(&sys)) {
        if (q.size() != 1) throw ShapeMismatch("two-body system needs exactly one position");
        return {-potential_gradient(*two, q[0])};
    }
    const auto& three = std::get<ThreeBodySystem>(sys);
    const auto g = potential_gradient(three, as_triple(q));
    std::vector<Vec2> acc(3);
    for (int i = 0; i < 3; ++i) acc[i] = (-1.0 / three.masses()[i]) * g[i];
    return acc;
}

double total_energy(const System& sys, std::span<const Vec2> q, std::span<const Vec2> v) {
    const auto masses = body_masses(sys);
    if (v.size() != masses.size()) throw ShapeMismatch("total_energy: velocity count mismatch");
    double kinetic = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) kinetic += 0.5 * masses[i] * norm2(v[i]);
    return kinetic + potential(sys, q);
}

double min_separation(const System& sys, std::span<const Vec2> q) {
    if (std::holds_alternative<TwoBodySystem>(sys)) return norm(q[0]);
    return std::min({norm(q[0] - q[1]), norm(q[0] - q[2]), norm(q[1] - q[2])});
}

double min_separation(const FourierLoop& loop, const QuadratureGrid& grid) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : sample(loop, grid)) best = std::min(best, norm(p));
    return best;
}

double min_separation(const TripleLoop& triple, const QuadratureGrid& grid) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) best = std::min(best, min_separation(triple.relative(i, j), grid));
    }
    return best;
}

namespace {

// Grid samples of the bodies, checked against the near-collision threshold.
struct Samples2 {
    std::vector<Vec2> x;
};

struct Samples3 {
    std::array<std::vector<Vec2>, 3> q;
    std::array<Vec2, 3> at(std::size_t j) const { return {q[0][j], q[1][j], q[2][j]}; }
};

double bounding_extent(std::span<const std::vector<Vec2>> bodies) {
    double lox = std::numeric_limits<double>::infinity(), loy = lox;
    double hix = -lox, hiy = -lox;
    for (const auto& pts : bodies) {
        for (const auto& p : pts) {
            lox = std::min(lox, p.x);
            loy = std::min(loy, p.y);
            hix = std::max(hix, p.x);
            hiy = std::max(hiy, p.y);
        }
    }
    return std::hypot(hix - lox, hiy - loy);
}

Samples2 sample_checked(const FourierLoop& loop, const QuadratureGrid& grid) {
    Samples2 s{sample(loop, grid)};
    const double floor = kNearCollisionRelative * bounding_extent(std::span(&s.x, 1));
    for (const auto& p : s.x) {
        if (!(norm(p) > floor)) {
            throw CollisionEncountered("loop passes within " + std::to_string(norm(p)) + " of the origin");
        }
    }
    return s;
}

Samples3 sample_checked(const TripleLoop& triple, const QuadratureGrid& grid) {
    Samples3 s;
    for (int i = 0; i < 3; ++i) s.q[i] = sample(triple.loops[i], grid);
    const double floor = kNearCollisionRelative * bounding_extent(s.q);
    for (std::size_t j = 0; j < s.q[0].size(); ++j) {
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                const double r = norm(s.q[a][j] - s.q[b][j]);
                if (!(r > floor)) {
                    throw CollisionEncountered("bodies " + std::to_string(a + 1) + " and " +
                                               std::to_string(b + 1) + " collide on the grid");
                }
            }
        }
    }
    return s;
}

double constraint_from(const Samples2& s, const TwoBodySystem& sys, const QuadratureGrid& grid) {
    CompensatedSum sum;
    for (const auto& p : s.x) {
        sum += 0.5 * dot(potential_gradient(sys, p), p) + potential(sys, p);
    }
    return sum.value() * grid.weight();
}

double constraint_from(const Samples3& s, const ThreeBodySystem& sys, const QuadratureGrid& grid) {
    CompensatedSum sum;
    for (std::size_t j = 0; j < s.q[0].size(); ++j) {
        const auto q = s.at(j);
        const auto g = potential_gradient(sys, q);
        double virial = 0.0;
        for (int i = 0; i < 3; ++i) virial += dot(g[i], q[i]);
        sum += 0.5 * virial + potential(sys, q);
    }
    return sum.value() * grid.weight();
}

// Coefficient-space adjoint of grid sampling scaled by 1/N: maps nodal vectors
// G_j to the gradient of (1/N) sum_j G_j . u(t_j) with respect to each coefficient.
FourierLoop nodal_adjoint(std::span<const Vec2> nodal, int modes, const QuadratureGrid& grid) {
    FourierLoop out(modes);
    const double w = grid.weight();
    for (std::size_t j = 0; j < nodal.size(); ++j) out.mean += nodal[j];
    out.mean = w * out.mean;
    for (int k = 1; k <= modes; ++k) {
        Vec2 a, b;
        for (std::size_t j = 0; j < nodal.size(); ++j) {
            a += grid.cos_at(k, static_cast<std::int64_t>(j)) * nodal[j];
            b += grid.sin_at(k, static_cast<std::int64_t>(j)) * nodal[j];
        }
        out.cos_coeffs[k - 1] = w * a;
        out.sin_coeffs[k - 1] = w * b;
    }
    return out;
}

// d/d(coeff) of 1/2 integral |u'|^2: (2 pi k)^2 / 2 times the coefficient.
FourierLoop kinetic_gradient(const FourierLoop& loop) {
    FourierLoop g(loop.modes());
    for (int k = 1; k <= loop.modes(); ++k) {
        const double w = kTwoPi * k;
        g.cos_coeffs[k - 1] = (0.5 * w * w) * loop.cos_coeffs[k - 1];
        g.sin_coeffs[k - 1] = (0.5 * w * w) * loop.sin_coeffs[k - 1];
    }
    return g;
}

double scale_to_manifold(double c, double energy) {
    const double lambda = c / energy;
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw CollisionEncountered("project_to_manifold: constraint value is not negative");
    }
    return lambda;
}

void require_on_manifold(double c, double energy) {
    if (std::abs(c - energy) > kManifoldTolerance * std::abs(energy)) {
        throw OffManifold("constraint value " + std::to_string(c) + " differs from energy " +
                          std::to_string(energy));
    }
}

}  // namespace

double constraint_value(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid) {
    return constraint_from(sample_checked(loop, grid), sys, grid);
}

double constraint_value(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid) {
    return constraint_from(sample_checked(triple, grid), sys, grid);
}

double half_potential_integral(const FourierLoop& loop, const TwoBodySystem& sys,
                               const QuadratureGrid& grid) {
    CompensatedSum sum;
    for (const auto& p : sample_checked(loop, grid).x) sum += 0.5 * potential(sys, p);
    return sum.value() * grid.weight();
}

double half_potential_integral(const TripleLoop& triple, const ThreeBodySystem& sys,
                               const QuadratureGrid& grid) {
    const auto s = sample_checked(triple, grid);
    CompensatedSum sum;
    for (std::size_t j = 0; j < s.q[0].size(); ++j) sum += 0.5 * potential(sys, s.at(j));
    return sum.value() * grid.weight();
}

double kinetic_integral(const TripleLoop& triple) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += triple.masses[i] * kinetic_integral(triple.loops[i]);
    return sum;
}

FourierLoop project_to_manifold(const FourierLoop& loop, const TwoBodySystem& sys,
                                const QuadratureGrid& grid) {
    return scaled(loop, scale_to_manifold(constraint_value(loop, sys, grid), sys.energy()));
}

TripleLoop project_to_manifold(const TripleLoop& triple, const ThreeBodySystem& sys,
                               const QuadratureGrid& grid) {
    return scaled(triple, scale_to_manifold(constraint_value(triple, sys, grid), sys.energy()));
}

ActionValue action_full(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid) {
    const auto s = sample_checked(loop, grid);
    require_on_manifold(constraint_from(s, sys, grid), sys.energy());
    CompensatedSum potential_sum;
    for (const auto& p : s.x) potential_sum += potential(sys, p);
    const double mean_potential = potential_sum.value() * grid.weight();
    ActionValue out;
    out.kinetic_factor = kinetic_integral(loop);
    out.potential_factor = sys.energy() - mean_potential;
    out.value = out.kinetic_factor * out.potential_factor;
    return out;
}

ActionValue action_full(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid) {
    const auto s = sample_checked(triple, grid);
    require_on_manifold(constraint_from(s, sys, grid), sys.energy());
    CompensatedSum potential_sum;
    for (std::size_t j = 0; j < s.q[0].size(); ++j) potential_sum += potential(sys, s.at(j));
    const double mean_potential = potential_sum.value() * grid.weight();
    ActionValue out;
    out.kinetic_factor = kinetic_integral(triple);
    out.potential_factor = sys.energy() - mean_potential;
    out.value = out.kinetic_factor * out.potential_factor;
    return out;
}

double action_reduced(const FourierLoop& loop, const TwoBodySystem& sys, const QuadratureGrid& grid) {
    const double c = constraint_value(loop, sys, grid);
    return kinetic_integral(loop) * c * c / (-sys.energy());
}

double action_reduced(const TripleLoop& triple, const ThreeBodySystem& sys, const QuadratureGrid& grid) {
    const double c = constraint_value(triple, sys, grid);
    return kinetic_integral(triple) * c * c / (-sys.energy());
}

namespace {

// 1/|x| - 1/|x + d| without subtracting nearly equal reciprocals.
double reciprocal_drop(const Vec2& x, const Vec2& d) {
    const double r0 = norm(x);
    const double r1 = norm(x + d);
    return (2.0 * dot(x, d) + norm2(d)) / (r0 * r1 * (r0 + r1));
}

// K(u + d) - K(u) = 2 B(u, d) + K(d) with B the Parseval bilinear form.
double kinetic_change(const FourierLoop& u, const FourierLoop& d) {
    double cross_term = 0.0;
    for (int k = 1; k <= u.modes(); ++k) {
        const double w = kTwoPi * k;
        cross_term += w * w * (dot(u.cos_coeffs[k - 1], d.cos_coeffs[k - 1]) +
                               dot(u.sin_coeffs[k - 1], d.sin_coeffs[k - 1]));
    }
    return 0.5 * cross_term + kinetic_integral(d);
}

// (K1 c1^2 - K0 c0^2) / (-h) from K0, c0 and the exact increments.
double reduced_change(double kin, double c, double dkin, double dc, double energy) {
    const double c1 = c + dc;
    return (dkin * c1 * c1 + kin * dc * (2.0 * c + dc)) / (-energy);
}

}  // namespace

double action_reduced_change(const FourierLoop& loop, const FourierLoop& step, const TwoBodySystem& sys,
                             const QuadratureGrid& grid) {
    const auto s0 = sample_checked(loop, grid);
    (void)sample_checked(loop + step, grid);
    const auto ds = sample(step, grid);
    CompensatedSum dc;
    for (std::size_t j = 0; j < ds.size(); ++j) dc += 0.5 * sys.coupling() * reciprocal_drop(s0.x[j], ds[j]);
    return reduced_change(kinetic_integral(loop), constraint_from(s0, sys, grid), kinetic_change(loop, step),
                          dc.value() * grid.weight(), sys.energy());
}

double action_reduced_change(const TripleLoop& triple, const TripleLoop& step, const ThreeBodySystem& sys,
                             const QuadratureGrid& grid) {
    const auto s0 = sample_checked(triple, grid);
    TripleLoop moved = triple;
    moved.axpy(1.0, step);
    (void)sample_checked(moved, grid);
    std::array<std::vector<Vec2>, 3> ds;
    for (int i = 0; i < 3; ++i) ds[i] = sample(step.loops[i], grid);
    const auto& m = sys.masses();
    CompensatedSum dc;
    double dkin = 0.0;
    for (int i = 0; i < 3; ++i) dkin += m[i] * kinetic_change(triple.loops[i], step.loops[i]);
    for (std::size_t j = 0; j < ds[0].size(); ++j) {
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                dc += 0.5 * m[a] * m[b] * reciprocal_drop(s0.q[a][j] - s0.q[b][j], ds[a][j] - ds[b][j]);
            }
        }
    }
    return reduced_change(kinetic_integral(triple), constraint_from(s0, sys, grid), dkin,
                          dc.value() * grid.weight(), sys.energy());
}

FourierLoop gradient_reduced(const FourierLoop& loop, const TwoBodySystem& sys,
                             const QuadratureGrid& grid) {
    const auto s = sample_checked(loop, grid);
    const double c = constraint_from(s, sys, grid);
    const double kin = kinetic_integral(loop);
    std::vector<Vec2> nodal(s.x.size());
    for (std::size_t j = 0; j < s.x.size(); ++j) nodal[j] = 0.5 * potential_gradient(sys, s.x[j]);
    // f = K c^2 / (-h)  =>  df = (c^2 dK + 2 K c dc) / (-h)
    FourierLoop g = kinetic_gradient(loop);
    g *= c * c;
    g.axpy(2.0 * kin * c, nodal_adjoint(nodal, loop.modes(), grid));
    g *= 1.0 / (-sys.energy());
    return g;
}

TripleLoop gradient_reduced_unprojected(const TripleLoop& triple, const ThreeBodySystem& sys,
                                        const QuadratureGrid& grid) {
    const auto s = sample_checked(triple, grid);
    const double c = constraint_from(s, sys, grid);
    const double kin = kinetic_integral(triple);
    const std::size_t n = s.q[0].size();
    std::array<std::vector<Vec2>, 3> nodal;
    for (auto& v : nodal) v.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto g = potential_gradient(sys, s.at(j));
        for (int i = 0; i < 3; ++i) nodal[i][j] = 0.5 * g[i];
    }
    TripleLoop out;
    out.masses = triple.masses;
    for (int i = 0; i < 3; ++i) {
        FourierLoop g = kinetic_gradient(triple.loops[i]);
        g *= triple.masses[i] * c * c;
        g.axpy(2.0 * kin * c, nodal_adjoint(nodal[i], triple.modes(), grid));
        g *= 1.0 / (-sys.energy());
        out.loops[i] = std::move(g);
    }
    return out;
}

TripleLoop project_tangent(const TripleLoop& direction) {
    const auto& m = direction.masses;
    const double m2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
    const FourierLoop center = weighted_center(direction);
    TripleLoop out = direction;
    for (int i = 0; i < 3; ++i) out.loops[i].axpy(-m[i] / m2, center);
    return out;
}

TripleLoop gradient_reduced(const TripleLoop& triple, const ThreeBodySystem& sys,
                            const QuadratureGrid& grid) {
    return project_tangent(gradient_reduced_unprojected(triple, sys, grid));
}

}  // namespace loopaction
