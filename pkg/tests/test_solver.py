import dataclasses
import math

import numpy as np
import pytest

from logsp import energy as en
from logsp.energy import Params
from logsp.errors import Condition32Violated, NonConvergence
from logsp.fieldio import write_field
from logsp.grid import Grid2D
from logsp.potentials import constant, power
from logsp.solver import (InitialProfile, SolveConfig, fiber_sup, lambda_family_study,
                          minimize_on_nehari, minimize_on_nehari_pohozaev, random_bumps, sign_check,
                          sign_violations, solve, verify_ground_state)

V2 = power(2.0)
GRID = Grid2D(8.0, 65)


@pytest.fixture(scope="module")
def nehari_rep():
    return solve(V2, Params(1.0, 4.0), SolveConfig(), GRID)


@pytest.fixture(scope="module")
def np_rep():
    return solve(V2, Params(1.0, 3.0), SolveConfig(manifold="nehari_pohozaev"), GRID)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(manifold="sphere")
    with pytest.raises(ValueError):
        SolveConfig(grad_tol=0.0)
    with pytest.raises(ValueError):
        SolveConfig(max_iters=0)
    with pytest.raises(ValueError):
        SolveConfig(shrink=1.0)


def test_initial_profiles(tmp_path):
    u = InitialProfile().build(GRID)
    assert GRID.h**2 * np.sum(u.values**2) == pytest.approx(4.0)
    v = InitialProfile(amplitude=3.0, width=1.0).build(GRID)
    assert v.values.max() == pytest.approx(3.0)
    r1 = InitialProfile(kind="random", seed=5).build(GRID)
    r2 = InitialProfile(kind="random", seed=5).build(GRID)
    assert np.array_equal(r1.values, r2.values) and r1.values.min() >= 0
    path = tmp_path / "u.lspf"
    write_field(path, v)
    assert np.array_equal(InitialProfile(kind="file", path=str(path)).build(GRID).values, v.values)
    with pytest.raises(ValueError):
        InitialProfile(kind="file", path=str(path)).build(Grid2D(8.0, 33))
    with pytest.raises(ValueError):
        InitialProfile(kind="file").build(GRID)
    with pytest.raises(ValueError):
        InitialProfile(kind="spiral").build(GRID)


def test_nehari_solution(nehari_rep):
    rep = nehari_rep
    scale = rep.norm_V_sq + 1
    assert rep.converged and rep.message == "converged"
    assert rep.constraint_residual <= 1e-8 * scale
    assert rep.projected_grad_norm <= 1e-6 * math.sqrt(rep.norm_V_sq)
    assert rep.sign_definite
    assert all(c["passed"] for c in rep.checks.values())
    assert rep.energy >= 0.25 * rep.norm_V_sq
    assert np.all(np.diff(rep.history) <= 0)
    assert rep.boundary_mass < 1e-6
    s = rep.scalars()
    assert s["energy"] == rep.energy and "field" not in s


def test_restart_from_minimizer_is_fixed_point(nehari_rep, tmp_path):
    path = tmp_path / "u.lspf"
    write_field(path, nehari_rep.field)
    cfg = SolveConfig(initial=InitialProfile(kind="file", path=str(path)))
    rep = solve(V2, Params(1.0, 4.0), cfg, GRID)
    assert rep.iterations <= 2
    assert rep.energy == pytest.approx(nehari_rep.energy, abs=1e-10)


def test_seed_determinism():
    cfg = SolveConfig(initial=InitialProfile(kind="random", seed=3))
    a = solve(V2, Params(1.0, 4.0), cfg, GRID).scalars()
    b = solve(V2, Params(1.0, 4.0), cfg, GRID).scalars()
    a.pop("elapsed_seconds"), b.pop("elapsed_seconds")
    assert a == b


def test_translation_sanity():
    cfg = SolveConfig(initial=InitialProfile(center=(1.5, -1.0), width=1.0))
    rep = solve(V2, Params(1.0, 4.0), cfg, GRID)
    assert rep.converged
    assert math.hypot(*rep.center_of_mass) <= 2 * GRID.h


def test_pure_choquard_constant_potential():
    rep = solve(constant(1.0), Params(0.0, 4.0), SolveConfig(), GRID)
    assert rep.converged and rep.sign_definite
    assert rep.constraint_residual <= 1e-8 * rep.norm_V_sq
    # on the Nehari set with b = 0: I = ||u||_V^2 / 4
    assert rep.energy == pytest.approx(0.25 * rep.norm_V_sq, rel=1e-8)


def test_np_solution(np_rep):
    rep = np_rep
    scale = rep.norm_V_sq + 1
    assert rep.converged
    assert rep.constraint_residual <= 1e-6 * scale
    assert rep.checks["pohozaev_recombination"]["relative"] <= 1e-6
    assert rep.checks["mass_lower_bound"]["passed"]
    assert rep.sign_definite
    assert np.all(np.diff(rep.history) <= 0)


def test_np_power_15():
    rep = solve(power(1.5), Params(1.0, 3.5), SolveConfig(manifold="nehari_pohozaev"), GRID)
    assert rep.converged and rep.sign_definite


def test_preconditions():
    with pytest.raises(ValueError, match="p >= 4"):
        minimize_on_nehari(V2, Params(1.0, 3.0), SolveConfig(), GRID)
    with pytest.raises(ValueError, match="p ≥ 3"):
        minimize_on_nehari_pohozaev(V2, Params(1.0, 2.5), SolveConfig(), GRID)
    with pytest.raises(ValueError, match="V2"):
        minimize_on_nehari_pohozaev(power(3.0), Params(1.0, 3.0), SolveConfig(), GRID)


def test_nehari_condition_violation_reported():
    cfg = SolveConfig(initial=InitialProfile(width=2.5))
    with pytest.raises(Condition32Violated):
        solve(V2, Params(0.0, 4.0), cfg, GRID)


def test_nonconvergence_carries_report():
    with pytest.raises(NonConvergence) as info:
        solve(V2, Params(1.0, 4.0), SolveConfig(max_iters=2), GRID)
    rep = info.value.report
    assert rep is not None and not rep.converged and "max_iters" in rep.message
    rep2 = solve(V2, Params(1.0, 4.0), SolveConfig(max_iters=2), GRID, raise_on_failure=False)
    assert not rep2.converged


def test_verify_ground_state(nehari_rep):
    summary = verify_ground_state(nehari_rep, V2, Params(1.0, 4.0), probes=12, seed=1,
                                  pohozaev_tol=0.1)
    assert summary.passed, summary.failures
    assert abs(summary.t_max - 1) <= 1e-6
    assert all(v >= nehari_rep.energy for v in summary.probe_values)
    assert nehari_rep.minimax_crosscheck == summary.probe_values
    assert summary.to_dict()["sign_violation_count"] == 0


def test_verify_np_ground_state(np_rep):
    summary = verify_ground_state(np_rep, V2, Params(1.0, 3.0), probes=8, seed=2,
                                  pohozaev_tol=0.1)
    assert summary.checks["minimax"]["passed"]
    assert abs(summary.t_max - 1) <= 1e-6


def test_verify_flags_sign_change(nehari_rep):
    X, _ = GRID.mesh
    bad = GRID.field(nehari_rep.field.values * np.where(X > 2.0, -1.0, 1.0) - 0.1 * (X > 2.0))
    rep = dataclasses.replace(nehari_rep, field=bad, checks={}, minimax_crosscheck=[])
    summary = verify_ground_state(rep, V2, Params(1.0, 4.0), probes=2, seed=0, pohozaev_tol=0.1)
    assert not summary.passed and "sign_definite" in summary.failures
    assert summary.sign_violations and all(x > 2.0 for x, _, _ in summary.sign_violations)


def test_verify_flags_low_probe(nehari_rep):
    # an inflated reference energy makes every probe fall below the floor
    rep = dataclasses.replace(nehari_rep, energy=1e9, checks={}, minimax_crosscheck=[])
    summary = verify_ground_state(rep, V2, Params(1.0, 4.0), probes=3, seed=0, pohozaev_tol=0.1)
    assert "minimax" in summary.failures


def test_sign_helpers():
    f = GRID.sample(lambda X, Y: np.exp(-(X**2 + Y**2)))
    assert sign_check(f)[0] and sign_violations(f) == []
    g = GRID.sample(lambda X, Y: X * np.exp(-(X**2 + Y**2)))
    ok, lo, hi = sign_check(g)
    assert not ok and lo < 0 < hi
    assert sign_violations(g)


def test_fiber_sup_unbounded_probe():
    wide = GRID.sample(lambda X, Y: np.exp(-(X**2 + Y**2) / 12))
    assert fiber_sup(wide.values, GRID, V2, Params(0.0, 4.0), "nehari") == math.inf


def test_lambda_family_example(nehari_rep):
    study = lambda_family_study(V2, Params(1.0, 4.0), [0.5, 0.75, 1.0], probes=20, seed=3,
                                grid=GRID)
    c = [r["c_hat"] for r in study.rows]
    assert c[0] > c[1] > c[2]
    assert study.passed
    single = lambda_family_study(V2, Params(1.0, 4.0), [1.0], probes=0, grid=GRID,
                                 extra_probes=[nehari_rep.field])
    c1 = single.rows[0]["c_hat"]
    assert nehari_rep.energy - 1e-3 <= c1 <= nehari_rep.energy + 1e-10
    assert study.to_dict()["passed"] is True


def test_lambda_grid_validation():
    with pytest.raises(ValueError):
        lambda_family_study(V2, Params(), [0.4, 1.0], probes=1, grid=GRID)
    with pytest.raises(ValueError):
        lambda_family_study(V2, Params(), [1.0, 0.5], probes=1, grid=GRID)


def test_random_bumps_reproducible():
    a = random_bumps(GRID, np.random.default_rng(9))
    b = random_bumps(GRID, np.random.default_rng(9))
    assert np.array_equal(a.values, b.values)


def test_energy_of_report_matches_field(nehari_rep):
    assert en.energy_I(nehari_rep.field, V2, Params(1.0, 4.0)) == pytest.approx(nehari_rep.energy,
                                                                               rel=1e-12)
