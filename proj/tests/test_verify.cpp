#include <doctest.h>

#include <cmath>

#include "loopaction/errors.hpp"
#include "loopaction/minimizer.hpp"
#include "loopaction/oracles.hpp"
#include "loopaction/verify.hpp"
#include "support.hpp"

using namespace loopaction;

namespace {

const double kPi2 = kPi * kPi;

std::span<const Vec2, 3> three(const std::array<Vec2, 3>& v) { return std::span<const Vec2, 3>(v); }

}  // namespace

TEST_CASE("make_report and make_bound_report") {
    const auto r = make_report("x", 1.0, 1.001, 1e-2, "a vs b");
    CHECK(r.pass);
    CHECK(r.abs_deviation == doctest::Approx(1e-3));
    CHECK(r.rel_deviation == doctest::Approx(1e-3 / 1.001));
    CHECK(r.provenance == "a vs b");
    CHECK_FALSE(make_report("x", 1.0, 1.1, 1e-2, "").pass);
    CHECK(make_report("zero", 0.0, 0.0, 1e-12, "").pass);
    CHECK(make_bound_report("b", 0.5, 1.0, "").pass);
    CHECK_FALSE(make_bound_report("b", 2.0, 1.0, "").pass);
    CHECK_FALSE(make_report("nan", std::nan(""), 1.0, 1.0, "").pass);
}

TEST_CASE("action_identity examples") {
    const TwoBodySystem sys(1.0, -0.5);
    const auto circle = kepler_orbit(KeplerElements(1.0, -0.5, 0.0), 512);
    const auto r = action_identity(circle, sys, kPi2, 1e-8);
    CHECK(r.left == doctest::Approx(kTwoPi).epsilon(1e-14));
    CHECK(r.right == doctest::Approx(kTwoPi).epsilon(1e-10));
    CHECK(r.rel_deviation < 1e-8);
    CHECK(r.pass);

    // converged minimizer output
    const QuadratureGrid grid(512);
    const auto m = minimize(random_loop(4, 16, 1, 0.3), sys, grid);
    REQUIRE(m.status == MinimizeStatus::Converged);
    CHECK(action_identity(to_physical(m.final_loop, m.period, sys, 512), sys, m.action).rel_deviation < 1e-3);

    // A loop that is not critical: an off-centre circle traversed in the
    // circular period does not satisfy the identity.
    auto shifted = FourierLoop::circle(4);
    shifted.mean = {0.6, 0.0};
    const auto bad = action_identity(to_physical(shifted, kTwoPi, sys, 512), sys,
                                     action_reduced(shifted, sys, grid));
    CHECK_FALSE(bad.pass);
}

TEST_CASE("property: action identity holds on every oracle loop") {
    for (const double e : {0.0, 0.3, 0.6}) {
        const TwoBodySystem sys(1.0, -0.5);
        const auto orbit = kepler_orbit(KeplerElements(1.0, -0.5, e), 4096);
        const double f = kepler_loop_action(1.0, -0.5, e, QuadratureGrid(4096));
        CHECK(action_identity(orbit, sys, f, 1e-8).pass);
    }
    for (const double e : {0.0, 0.5}) {
        const std::array<double, 3> m{1.0, 2.0, 3.0};
        const ThreeBodySystem sys(m, -1.0);
        const auto orbit = lagrange_solution(m, -1.0, e, 4096);
        const double f = lagrange_actions(m, -1.0, QuadratureGrid(4096), e).derived_lagrange;
        CHECK(action_identity(orbit, sys, f, 1e-8).pass);
    }
}

TEST_CASE("kinetic_identity examples") {
    const std::array<Vec2, 3> v{Vec2{1.0, 0.0}, Vec2{-1.0, 0.0}, Vec2{0.0, 0.0}};
    const auto r = kinetic_identity(three(v), {1.0, 1.0, 1.0});
    CHECK(r.left == doctest::Approx(2.0));
    CHECK(r.right == doctest::Approx(2.0));
    CHECK(r.pass);
    const std::array<Vec2, 3> drift{Vec2{1.0, 0.0}, Vec2{1.0, 0.0}, Vec2{0.0, 0.0}};
    CHECK_THROWS_AS(kinetic_identity(three(drift), {1.0, 1.0, 1.0}), MomentumNotZero);
}

TEST_CASE("property: kinetic identity on random momentum-free velocities") {
    testsupport::Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::array<double, 3> m{rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)};
        std::array<Vec2, 3> v{rng.vec(3.0), rng.vec(3.0), Vec2{}};
        v[2] = -(m[0] * v[0] + m[1] * v[1]) / m[2];
        CHECK(kinetic_identity(three(v), m).rel_deviation < 1e-12);
    }
}

TEST_CASE("property: kinetic identity on every Lagrange oracle sample") {
    const std::array<double, 3> m{1.0, 2.0, 3.0};
    const auto orbit = lagrange_solution(m, -1.0, 0.5, 256);
    for (const auto& vel : orbit.velocities) {
        const std::array<Vec2, 3> v{vel[0], vel[1], vel[2]};
        CHECK(kinetic_identity(three(v), m).rel_deviation < 1e-12);
    }
}

TEST_CASE("ode_residual examples") {
    const QuadratureGrid grid(512);
    const TwoBodySystem sys(1.0, -0.5);
    KeplerElements el(1.0, -0.5, 0.3);
    const auto fitted = fit_loop(std::span<const Vec2>(
                                     [&] {
                                         std::vector<Vec2> x;
                                         for (const auto& p : kepler_orbit(el, 512).positions) x.push_back(p[0]);
                                         return x;
                                     }()),
                                 32);
    CHECK(ode_residual(fitted, kTwoPi, sys, grid) < 1e-6);
    CHECK(ode_residual(FourierLoop::circle(4), kTwoPi, sys, grid) < 1e-13);

    // a random loop is nowhere near a solution
    const auto r = random_loop(5, 8, 1, 0.4);
    CHECK(ode_residual(r, kTwoPi, sys, grid) > 0.1);

    auto through = FourierLoop::circle(4);
    through.mean = {1.0, 0.0};
    CHECK_THROWS_AS(ode_residual(through, kTwoPi, sys, QuadratureGrid(64)), CollisionEncountered);
}

TEST_CASE("property: ode residual decreases with the number of fitted modes") {
    const QuadratureGrid grid(1024);
    const TwoBodySystem sys(1.0, -0.5);
    std::vector<Vec2> x;
    for (const auto& p : kepler_orbit(KeplerElements(1.0, -0.5, 0.3), 1024).positions) x.push_back(p[0]);
    const double r8 = ode_residual(fit_loop(x, 8), kTwoPi, sys, grid);
    const double r32 = ode_residual(fit_loop(x, 32), kTwoPi, sys, grid);
    CHECK(r32 < r8);
}

TEST_CASE("ode residual of Lagrange solutions") {
    for (const double e : {0.0, 0.5}) {
        const std::array<double, 3> m{1.0, 1.0, 1.0};
        const QuadratureGrid grid(1024);
        const auto loop = lagrange_loop(m, -0.5, e, grid);
        CHECK(ode_residual(loop, lagrange_period(m, -0.5).derived, ThreeBodySystem(m, -0.5), grid) < 1e-6);
    }
}

TEST_CASE("equilateral_deviation examples") {
    CHECK(equilateral_deviation(lagrange_solution({1.0, 1.0, 1.0}, -0.5, 0.0, 128)) < 1e-12);
    CHECK(equilateral_deviation(lagrange_solution({3.0, 1.0, 0.5}, -2.0, 0.7, 128)) < 1e-12);

    // collinear, equally spaced: distances 1, 1, 2
    PhysicalOrbit line;
    line.masses = {1.0, 1.0, 1.0};
    line.times = {0.0};
    line.positions = {{Vec2{-1.0, 0.0}, Vec2{0.0, 0.0}, Vec2{1.0, 0.0}}};
    line.velocities = {{Vec2{}, Vec2{}, Vec2{}}};
    CHECK(equilateral_deviation(line) == doctest::Approx(0.75));
    CHECK(equilateral_deviation(line) > 0.3);
}

TEST_CASE("energy_conservation examples") {
    const TwoBodySystem sys(1.0, -0.5);
    const auto traj = integrate_ode(sys, std::vector<Vec2>{{1.0, 0.0}}, std::vector<Vec2>{{0.0, 1.0}}, kTwoPi, 10000);
    CHECK(energy_conservation(traj, sys).rel_deviation < 1e-10);
    CHECK(energy_conservation(traj, sys).pass);

    auto orbit = kepler_orbit(KeplerElements(1.0, -0.5, 0.5), 256);
    CHECK(energy_conservation(orbit, sys).pass);

    // Injected velocity error of eps: energy moves by eps + eps^2/2 on |h| = 1/2.
    const double eps = 1e-3;
    auto circle = kepler_orbit(KeplerElements(1.0, -0.5, 0.0), 64);
    circle.velocities[10][0] *= 1.0 + eps;
    const auto r = energy_conservation(circle, sys);
    CHECK(r.rel_deviation == doctest::Approx(2 * eps + eps * eps).epsilon(1e-9));
    CHECK_FALSE(r.pass);
}

TEST_CASE("property: checks are pure") {
    const TwoBodySystem sys(1.0, -0.5);
    const auto orbit = kepler_orbit(KeplerElements(1.0, -0.5, 0.4), 300);
    const auto a = action_identity(orbit, sys, kPi2);
    const auto b = action_identity(orbit, sys, kPi2);
    CHECK(a.left == b.left);
    CHECK(a.right == b.right);
    CHECK(a.rel_deviation == b.rel_deviation);
}
