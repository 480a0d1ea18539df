import math

import pytest

import loopaction as la

PI2 = math.pi ** 2


def test_circle_action_and_period():
    grid = la.QuadratureGrid(256)
    sys = la.TwoBodySystem(1.0, -0.5)
    u = la.FourierLoop.circle(4)
    assert la.action_reduced(u, sys, grid) == pytest.approx(PI2, rel=1e-13)
    assert la.recover_period(u, sys, grid) == pytest.approx(2 * math.pi, rel=1e-13)
    assert la.winding_number(u, grid) == 1


def test_vec2_accepts_tuples():
    u = la.FourierLoop.constant(2, (1.0, 2.0))
    assert tuple(u.mean) == (1.0, 2.0)
    assert la.eval(u, 0.3) == la.Vec2(1.0, 2.0)


def test_two_body_minimization():
    res = la.minimize(la.random_loop(1, 16, 1, 0.3), la.TwoBodySystem(1.0, -0.5), la.QuadratureGrid(512))
    assert res.status == la.MinimizeStatus.Converged
    assert res.action == pytest.approx(PI2, rel=5e-3)
    assert res.period == pytest.approx(la.kepler_period(1.0, -0.5), rel=5e-3)
    assert all(b <= a for a, b in zip(res.action_history, res.action_history[1:]))
    orbit = la.to_physical(res.final_loop, res.period, la.TwoBodySystem(1.0, -0.5))
    report = la.action_identity(orbit, la.TwoBodySystem(1.0, -0.5), res.action)
    assert report.passed


def test_three_body_minimization():
    masses = [1.0, 1.0, 1.0]
    sys = la.ThreeBodySystem(masses, -0.5)
    res = la.minimize(la.random_triple(1, 16, masses, 1, 0.3), sys, la.QuadratureGrid(512))
    assert res.status == la.MinimizeStatus.Converged
    assert res.action == pytest.approx(9 * PI2, rel=1e-2)
    assert res.windings == [1, 1, 1]
    orbit = la.to_physical(res.final_loop, res.period, sys)
    assert la.equilateral_deviation(orbit) < 1e-2


def test_oracles():
    assert la.solve_kepler_equation(1.0, 0.5) == pytest.approx(1.49870, abs=1e-5)
    assert la.claimed_action_2body(1.0, -0.5) == pytest.approx(8.8127, rel=1e-4)
    periods = la.lagrange_period([1.0, 1.0, 1.0], -0.5)
    assert periods.derived == pytest.approx(6 * math.pi)
    orbit = la.lagrange_solution([1.0, 1.0, 1.0], -0.5, 0.0, 64)
    traj = la.integrate_ode(la.ThreeBodySystem([1.0, 1.0, 1.0], -0.5), orbit.positions[0], orbit.velocities[0],
                            1.25 * periods.derived, 12500)
    assert la.measure_period(traj) == pytest.approx(periods.derived, rel=1e-6)


def test_errors_map_to_python_exceptions():
    with pytest.raises(la.InvalidEnergy):
        la.TwoBodySystem(1.0, 0.5)
    with pytest.raises(la.BadStart):
        la.minimize(la.FourierLoop.constant(4, (3.0, 0.0)), la.TwoBodySystem(1.0, -0.5), la.QuadratureGrid(64))
    with pytest.raises(la.MomentumNotZero):
        la.kinetic_identity([(1.0, 0.0), (1.0, 0.0), (0.0, 0.0)], [1.0, 1.0, 1.0])
    assert issubclass(la.ConfigError, la.LoopactionError)
    with pytest.raises(la.ConfigError, match="h must be negative"):
        la.RunConfig(h=0.5).validate()


def test_run_writes_outputs(tmp_path):
    cfg = la.RunConfig(modes=8, grid=256, seeds="1,2", out=str(tmp_path))
    code, log = la.run(cfg)
    assert code == 0, log
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert len(rows) == 3
    assert (tmp_path / "run_seed2.json").exists()


def test_run_config_accepts_python_values():
    cfg = la.RunConfig(seeds=[3, 4], sweep=(-0.5, -1.0), plots=True)
    assert list(cfg.seeds) == [3, 4]
    assert list(cfg.sweep) == [-0.5, -1.0]
    assert cfg.emit_plots


def test_formula_table_names_the_matching_period():
    cfg = la.RunConfig(problem="three_body")
    rows = {r.label: r for r in la.formula_table(cfg)}
    assert rows["derived_period"].matches_reference
    assert not rows["claimed_period"].matches_reference
    assert rows["claimed_action"].value == pytest.approx(237.94, rel=1e-4)
