// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "loopaction/minimizer.hpp"
#include "loopaction/oracles.hpp"
#include "loopaction/report.hpp"
#include "loopaction/verify.hpp"

using namespace loopaction;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double rel(double x, double y) { return std::abs(x - y) / std::max(std::abs(x), std::abs(y)); }

template <typename Loop, typename Sys, typename Unflatten>
double fd_error(const Loop& u, const Loop& g, const Sys& sys, const QuadratureGrid& grid, Unflatten unflatten) {
    auto x = u.flatten();
    const auto gv = g.flatten();
    double gnorm = 0.0, worst = 0.0;
    for (const double v : gv) gnorm += v * v;
    const double step = 1e-5;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x[k];
        x[k] = keep + step;
        const double fp = action_reduced(unflatten(x), sys, grid);
        x[k] = keep - step;
        const double fm = action_reduced(unflatten(x), sys, grid);
        x[k] = keep;
        worst = std::max(worst, std::abs((fp - fm) / (2 * step) - gv[k]));
    }
    return worst / std::sqrt(gnorm);
}

std::vector<Vec2> first_sample(const std::vector<std::vector<Vec2>>& v) { return v.front(); }

// Shared runs, computed once.
struct Runs {
    std::vector<TwoBodyResult> two;
    std::vector<double> two_seconds;
    std::vector<ThreeBodyResult> three;
};

const Runs& runs() {
    static const Runs r = [] {
        Runs out;
        const TwoBodySystem sys(1.0, -0.5);
        const QuadratureGrid grid(512);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto t0 = std::chrono::steady_clock::now();
            out.two.push_back(minimize(random_loop(seed, 16, 1, 0.3), sys, grid));
            out.two_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        const ThreeBodySystem s3({1.0, 1.0, 1.0}, -0.5);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            out.three.push_back(minimize(random_triple(seed, 16, {1.0, 1.0, 1.0}, 1, 0.3), s3, grid));
        }
        return out;
    }();
    return r;
}

const FormulaRow* find_row(const std::vector<FormulaRow>& rows, const std::string& label) {
    for (const auto& r : rows) {
        if (r.label == label) return &r;
    }
    return nullptr;
}

Verdict two_body_minimization() {
    Verdict v;
    const double oracle = kepler_loop_action(1.0, -0.5, 0.0, QuadratureGrid(4096));
    double worst = 0.0, slowest = 0.0;
    for (std::size_t i = 0; i < runs().two.size(); ++i) {
        const auto& r = runs().two[i];
        v.require(r.status == MinimizeStatus::Converged, "seed " + std::to_string(i + 1) + " " +
                                                             std::string(to_string(r.status)));
        worst = std::max(worst, rel(r.action, oracle));
        slowest = std::max(slowest, runs().two_seconds[i]);
    }
    v.require(worst < 5e-3, "action gap " + num(worst));
    v.require(slowest < 60.0, "slowest seed " + num(slowest) + " s");
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("max gap to ") + num(oracle) + " = " + num(worst) +
                ", slowest seed " + num(slowest) + " s";
    return v;
}

Verdict period_law() {
    Verdict v;
    const TwoBodySystem sys(1.0, -0.5);
    const double T = kepler_period(1.0, -0.5);
    double worst_recovered = 0.0, worst_measured = 0.0;
    for (const auto& r : runs().two) {
        worst_recovered = std::max(worst_recovered, rel(r.period, T));
        const auto orbit = to_physical(r.final_loop, r.period, sys, 256);
        const auto traj = integrate_ode(sys, first_sample(orbit.positions), first_sample(orbit.velocities),
                                        1.5 * r.period, 15000);
        worst_measured = std::max(worst_measured, rel(measure_period(traj), T));
    }
    v.require(worst_recovered < 5e-3, "recovered period gap " + num(worst_recovered));
    v.require(worst_measured < 1e-4, "measured period gap " + num(worst_measured));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("recovered gap ") + num(worst_recovered) +
                ", measured gap " + num(worst_measured);
    return v;
}

Verdict claimed_bound() {
    Verdict v;
    const double bound = claimed_action_2body(1.0, -0.5);
    for (const auto& r : runs().two) v.require(r.action >= bound - 1e-9, "action " + num(r.action) + " below bound");
    RunConfig c;
    const auto rows = formula_table(c);
    const auto* claimed = find_row(rows, "claimed_min_action");
    const double expected = 9.0 * std::pow(2.0, -13.0 / 3.0) / 0.5 - 1.0;
    v.require(claimed != nullptr, "formula table lacks the claimed row");
    if (claimed) {
        v.require(claimed->reference == "kepler_loop_quadrature", "gap not measured against the quadrature");
        v.require(std::abs(claimed->rel_gap - expected) < 1e-6, "reported gap " + num(claimed->rel_gap));
        v.detail += (v.detail.empty() ? "" : "; ") + std::string("bound ") + num(bound) + ", reported gap " +
                    num(100 * claimed->rel_gap) + "%";
    }
    return v;
}

Verdict eccentricity_degeneracy() {
    Verdict v;
    const QuadratureGrid grid(4096);
    const double base = kepler_loop_action(1.0, -0.5, 0.0, grid);
    double worst = 0.0;
    for (const double e : {0.3, 0.6, 0.9}) worst = std::max(worst, rel(kepler_loop_action(1.0, -0.5, e, grid), base));
    v.require(worst < 1e-6, "spread " + num(worst));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("max spread ") + num(worst);
    return v;
}

Verdict gradient_correctness() {
    Verdict v;
    const QuadratureGrid grid(256);
    double worst2 = 0.0, worst3 = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const TwoBodySystem sys(1.0, -0.5);
        const auto u = random_loop(100 + seed, 8, 1, 0.4);
        worst2 = std::max(worst2, fd_error(u, gradient_reduced(u, sys, grid), sys, grid, [](const std::vector<double>& x) {
                              return FourierLoop::unflatten(x, 8);
                          }));
        const std::array<double, 3> m{1.0, 2.0, 3.0};
        const ThreeBodySystem s3(m, -0.5);
        const auto t = random_triple(200 + seed, 4, m, 1, 0.3);
        worst3 = std::max(worst3, fd_error(t, gradient_reduced_unprojected(t, s3, grid), s3, grid,
                                           [&](const std::vector<double>& x) { return TripleLoop::unflatten(x, 4, m); }));
    }
    v.require(worst2 <= 1e-6, "two-body error " + num(worst2));
    v.require(worst3 <= 1e-6, "three-body error " + num(worst3));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("two-body ") + num(worst2) + ", three-body " + num(worst3);
    return v;
}

Verdict kinetic_identity_check() {
    Verdict v;
    std::uint64_t state = 12345;
    auto uniform = [&](double lo, double hi) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return lo + (hi - lo) * static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::array<double, 3> m{uniform(0.1, 5.0), uniform(0.1, 5.0), uniform(0.1, 5.0)};
        std::array<Vec2, 3> vel{Vec2{uniform(-3, 3), uniform(-3, 3)}, Vec2{uniform(-3, 3), uniform(-3, 3)}, Vec2{}};
        vel[2] = -(m[0] * vel[0] + m[1] * vel[1]) / m[2];
        worst = std::max(worst, kinetic_identity(std::span<const Vec2, 3>(vel), m).rel_deviation);
    }
    for (const double e : {0.0, 0.5}) {
        const std::array<double, 3> m{1.0, 1.0, 1.0};
        for (const auto& s : lagrange_solution(m, -0.5, e, 512).velocities) {
            const std::array<Vec2, 3> vel{s[0], s[1], s[2]};
            worst = std::max(worst, kinetic_identity(std::span<const Vec2, 3>(vel), m).rel_deviation);
        }
    }
    v.require(worst < 1e-12, "residual " + num(worst));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("max residual ") + num(worst);
    return v;
}

Verdict lagrange_validity() {
    Verdict v;
    const std::array<double, 3> m{1.0, 1.0, 1.0};
    const ThreeBodySystem sys(m, -0.5);
    const double T = lagrange_period(m, -0.5).derived;
    double res = 0.0, eq = 0.0, drift = 0.0;
    for (const double e : {0.0, 0.5}) {
        const QuadratureGrid grid(1024);
        res = std::max(res, ode_residual(lagrange_loop(m, -0.5, e, grid), T, sys, grid));
        const auto orbit = lagrange_solution(m, -0.5, e, 512);
        eq = std::max(eq, equilateral_deviation(orbit));
        const auto traj = integrate_ode(sys, first_sample(orbit.positions), first_sample(orbit.velocities), T, 10000);
        drift = std::max(drift, traj.max_energy_drift);
    }
    v.require(res < 1e-6, "ode residual " + num(res));
    v.require(eq < 1e-12, "equilateral deviation " + num(eq));
    v.require(drift < 1e-8, "energy drift " + num(drift));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("residual ") + num(res) + ", equilateral " + num(eq) +
                ", drift " + num(drift);
    return v;
}

Verdict period_adjudication() {
    Verdict v;
    RunConfig c;
    c.problem = ProblemKind::ThreeBody;
    const auto rows = formula_table(c);
    const auto* measured = find_row(rows, "measured");
    v.require(measured != nullptr, "no measured period row");
    if (!measured) return v;
    int matches = 0;
    std::string named, gaps;
    for (const char* label : {"claimed_period", "claimed_period_mass", "derived_period"}) {
        const auto* r = find_row(rows, label);
        v.require(r != nullptr, std::string("missing ") + label);
        if (!r) continue;
        if (r->matches_reference) {
            ++matches;
            named = label;
        }
        gaps += std::string(gaps.empty() ? "" : ", ") + label + " " + num(100 * r->rel_gap) + "%";
        v.require(r->matches_reference == (rel(r->value, measured->value) < 1e-4), std::string("flag on ") + label);
    }
    v.require(matches == 1, std::to_string(matches) + " candidates match");
    v.require(named == "derived_period", "matching candidate " + named);
    v.require(rel(measured->value, 6 * kPi) < 1e-6, "measured " + num(measured->value));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("measured ") + num(measured->value) + ", match " + named +
                " (" + gaps + ")";
    return v;
}

Verdict three_body_minimization() {
    Verdict v;
    const std::array<double, 3> m{1.0, 1.0, 1.0};
    const ThreeBodySystem sys(m, -0.5);
    const double oracle = lagrange_actions(m, -0.5, QuadratureGrid(4096)).derived_lagrange;
    double worst = 0.0, eq = 0.0;
    for (const auto& r : runs().three) {
        v.require(r.status == MinimizeStatus::Converged, std::string("status ") + std::string(to_string(r.status)));
        worst = std::max(worst, rel(r.action, oracle));
        eq = std::max(eq, equilateral_deviation(to_physical(r.final_loop, r.period, sys, 512)));
    }
    v.require(worst < 1e-2, "action gap " + num(worst));
    v.require(eq < 1e-2, "equilateral deviation " + num(eq));
    RunConfig c;
    c.problem = ProblemKind::ThreeBody;
    const auto rows = formula_table(c);
    const auto* claimed = find_row(rows, "claimed_action");
    v.require(claimed != nullptr && claimed->reference == "lagrange_loop_quadrature", "claimed action row");
    if (claimed) {
        v.detail += (v.detail.empty() ? "" : "; ") + std::string("gap to ") + num(oracle) + " = " + num(worst) +
                    ", equilateral " + num(eq) + ", claimed " + num(claimed->value) + " (gap " +
                    num(100 * claimed->rel_gap) + "%)";
    }
    return v;
}

Verdict critical_point_identity() {
    Verdict v;
    const TwoBodySystem sys(1.0, -0.5);
    double worst_run = 0.0, worst_oracle = 0.0;
    for (const auto& r : runs().two) {
        worst_run = std::max(worst_run,
                             action_identity(to_physical(r.final_loop, r.period, sys, 1024), sys, r.action).rel_deviation);
    }
    const std::array<double, 3> m{1.0, 1.0, 1.0};
    const ThreeBodySystem s3(m, -0.5);
    for (const auto& r : runs().three) {
        worst_run = std::max(worst_run,
                             action_identity(to_physical(r.final_loop, r.period, s3, 1024), s3, r.action).rel_deviation);
    }
    const QuadratureGrid grid(4096);
    for (const double e : {0.0, 0.3, 0.6, 0.9}) {
        const auto orbit = kepler_orbit(KeplerElements(1.0, -0.5, e), 4096);
        worst_oracle = std::max(worst_oracle,
                                action_identity(orbit, sys, kepler_loop_action(1.0, -0.5, e, grid)).rel_deviation);
    }
    for (const double e : {0.0, 0.5}) {
        const auto orbit = lagrange_solution(m, -0.5, e, 4096);
        worst_oracle = std::max(
            worst_oracle, action_identity(orbit, s3, lagrange_actions(m, -0.5, grid, e).derived_lagrange).rel_deviation);
    }
    v.require(worst_run < 1e-3, "converged runs " + num(worst_run));
    v.require(worst_oracle < 1e-8, "oracle loops " + num(worst_oracle));
    v.detail += (v.detail.empty() ? "" : "; ") + std::string("runs ") + num(worst_run) + ", oracles " + num(worst_oracle);
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"1 two-body minimization reaches the Kepler-loop action", two_body_minimization},
        {"2 period law and measured period", period_law},
        {"3 claimed two-body bound and its gap", claimed_bound},
        {"4 eccentricity degeneracy", eccentricity_degeneracy},
        {"5 gradient vs central differences", gradient_correctness},
        {"6 kinetic identity", kinetic_identity_check},
        {"7 Lagrange solution validity", lagrange_validity},
        {"8 Lagrange period adjudication", period_adjudication},
        {"9 three-body minimization reaches the Lagrange action", three_body_minimization},
        {"10 critical-point identity", critical_point_identity},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        failed += !v.pass;
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
