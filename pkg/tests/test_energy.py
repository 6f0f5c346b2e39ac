import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logsp import energy as en
from logsp import logkernel as lk
from logsp.energy import Params
from logsp.grid import Grid2D, grad_sq_norm
from logsp.potentials import checkerboard, constant, power
from logsp.solver import random_bumps

V2 = power(2.0)


@pytest.fixture(scope="module")
def grid():
    return Grid2D(6.0, 41)


def _pair(grid, seed):
    rng = np.random.default_rng(seed)
    return random_bumps(grid, rng), random_bumps(grid, rng)


def test_params_validation():
    assert Params().p == 4.0
    for kw in ({"b": -1.0}, {"p": 2.0}, {"lam": 0.4}, {"lam": 1.1}):
        with pytest.raises(ValueError):
            Params(**kw)
    assert Params(1.0, 3.0).with_lambda(0.7) == Params(1.0, 3.0, 0.7)


def test_gaussian_closed_forms():
    grid = Grid2D(10.0, 257)
    u = grid.sample(lambda X, Y: np.exp(-(X**2 + Y**2) / 2))
    s = en.scalars(u, V2, Params())
    assert s.grad_sq == pytest.approx(math.pi, rel=1e-3)
    assert s.v_int == pytest.approx(2 * math.pi, rel=1e-6)
    assert s.radial_int == pytest.approx(2 * math.pi, rel=1e-6)
    assert s.l2_sq == pytest.approx(math.pi, rel=1e-10)
    assert s.lp == pytest.approx(math.pi / 2, rel=1e-10)
    assert en.norm_V_sq(u, V2) == pytest.approx(s.norm_V_sq)


def test_breakdown_keys_and_split(grid):
    u, _ = _pair(grid, 0)
    prm = Params(1.0, 4.0, 0.7)
    d = en.breakdown(u, V2, prm).to_json_dict()
    for key in ("norm_V_sq", "star_sq", "n0", "n1", "n2", "lp", "l2_sq",
                "I", "I_lambda", "J", "J_lambda", "P_lambda"):
        assert key in d
    assert d["I_lambda"] == pytest.approx(d["a_part"] - 0.7 * d["b_part"], rel=1e-12)
    assert d["n0"] == pytest.approx(d["n1"] - d["n2"], rel=1e-10)
    assert d["norm_E_sq"] == pytest.approx(d["norm_V_sq"] + d["star_sq"])
    assert en.norm_E_sq(u, V2) == pytest.approx(d["norm_E_sq"])
    assert d["n0"] == pytest.approx(lk.N0(u), rel=1e-12)


def test_lambda_one_reduces_to_I(grid):
    u, _ = _pair(grid, 1)
    prm = Params(1.0, 3.5)
    assert en.energy_I_lambda(u, V2, prm) == en.energy_I(u, V2, prm)
    assert en.functional_J_lambda(u, V2, prm) == en.functional_J(u, V2, prm)
    assert en.functional_P(u, V2, prm) == en.functional_P_lambda(u, V2, prm)


def test_I_lambda_monotone_in_lambda(grid):
    u, _ = _pair(grid, 2)
    vals = [en.energy_I_lambda(u, V2, Params(1.0, 4.0, lam)) for lam in (0.5, 0.75, 1.0)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("lam", [1.0, 0.6])
@pytest.mark.parametrize("p", [3.0, 4.0, 5.5])
def test_pohozaev_nehari_relation(grid, lam, p):
    # J_lambda(u) = 2 I_lambda'(u) u - P_lambda(u) for every u
    u, _ = _pair(grid, 3)
    prm = Params(0.8, p, lam)
    g = en.grad_I_lambda(u, V2, prm)
    pair = grid.h**2 * float(np.sum(g.values * u.values))
    lhs = en.functional_J_lambda(u, V2, prm)
    rhs = 2 * pair - en.functional_P_lambda(u, V2, prm)
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)
    if lam == 1.0:
        assert pair == pytest.approx(en.nehari_pairing(u, V2, prm), rel=1e-11)


@pytest.mark.parametrize("p", [3.0, 4.0])
def test_recombination_identity(grid, p):
    u, _ = _pair(grid, 4)
    prm = Params(1.0, p)
    I = en.energy_I(u, V2, prm)
    J = en.functional_J(u, V2, prm)
    assert I - 0.25 * J == pytest.approx(en.pohozaev_energy_rhs(u, V2, prm), rel=1e-12)


def _fd_error(f, u, v, g, eps):
    return abs((f(u + v * eps) - f(u - v * eps)) / (2 * eps) - g)


@pytest.mark.parametrize("lam", [1.0, 0.6])
def test_gradient_matches_central_difference(grid, lam):
    u, v = _pair(grid, 5)
    prm = Params(1.0, 4.0, lam)
    g = en.grad_I_lambda(u, V2, prm)
    slope = grid.h**2 * float(np.sum(g.values * v.values))
    e1 = _fd_error(lambda w: en.energy_I_lambda(w, V2, prm), u, v, slope, 1e-2)
    e2 = _fd_error(lambda w: en.energy_I_lambda(w, V2, prm), u, v, slope, 1e-3)
    assert e2 < e1 / 50 or e2 < 1e-11


def test_grad_J_matches_central_difference(grid):
    u, v = _pair(grid, 6)
    prm = Params(1.0, 3.0)
    g = en.grad_J(u, V2, prm)
    slope = grid.h**2 * float(np.sum(g.values * v.values))
    e1 = _fd_error(lambda w: en.functional_J(w, V2, prm), u, v, slope, 1e-2)
    e2 = _fd_error(lambda w: en.functional_J(w, V2, prm), u, v, slope, 1e-3)
    assert e2 < e1 / 50 or e2 < 1e-11


def test_gradients_vanish_on_boundary(grid):
    u, _ = _pair(grid, 7)
    for g in (en.grad_I(u, V2, Params()), en.grad_J(u, V2, Params())):
        assert np.all(g.values[0] == 0) and np.all(g.values[:, -1] == 0)


def test_b_zero_drops_power_term(grid):
    u, _ = _pair(grid, 8)
    s = en.scalars(u, V2, Params(0.0, 4.0))
    assert en.energy_I(u, V2, Params(0.0, 4.0)) == pytest.approx(0.5 * s.norm_V_sq + 0.25 * s.n0)


def test_checkerboard_energy_finite(grid):
    u, _ = _pair(grid, 9)
    val = en.energy_I(u, checkerboard(), Params())
    assert math.isfinite(val)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**20), t=st.floats(0.05, 5.0))
def test_amplitude_scaling(seed, t):
    grid = Grid2D(5.0, 25)
    u = random_bumps(grid, np.random.default_rng(seed))
    prm = Params(1.0, 3.5, 0.8)
    s = en.scalars(u, constant(1.0), prm)
    a = s.norm_V_sq + 0.2 * s.star_sq
    expect = 0.5 * a * t**2 + 0.25 * s.n0 * t**4 - 0.8 * prm.b / prm.p * s.lp * t**prm.p
    got = en.energy_I_lambda(u * t, constant(1.0), prm)
    scale = 0.5 * abs(a) * t**2 + 0.25 * abs(s.n0) * t**4 + s.lp * t**prm.p + 1e-300
    assert got == pytest.approx(expect, abs=1e-11 * scale)


def test_grad_sq_consistent_with_scalars(grid):
    u, _ = _pair(grid, 10)
    assert en.scalars(u, V2, Params()).grad_sq == grad_sq_norm(u)
