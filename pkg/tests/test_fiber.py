import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logsp import energy as en
from logsp.energy import Params
from logsp.errors import Condition32Violated, NoInteriorMax
from logsp.fiber import (AmplitudeFiber, GaussianProfile, ScaledFiber, amplitude_fiber,
                         amplitude_scan, nehari_condition, lemma55_check, nehari_scale, pohozaev_scale,
                         rescale_Q, scaled_fiber)
from logsp.grid import Grid2D
from logsp.potentials import constant, power
from logsp.solver import random_bumps

V2 = power(2.0)


@pytest.fixture(scope="module")
def grid():
    return Grid2D(8.0, 65)


@pytest.fixture
def bump(grid):
    return GaussianProfile(2.0, 0.6).on(grid)


def test_amplitude_fiber_formula(bump):
    prm = Params(1.0, 4.0)
    for t in (0.3, 1.0, 2.5):
        assert amplitude_fiber(bump, V2, prm, t) == pytest.approx(en.energy_I(bump * t, V2, prm),
                                                                  rel=1e-12)
    with pytest.raises(ValueError):
        amplitude_fiber(bump, V2, prm, 0.0)


def test_p4_closed_form(bump):
    prm = Params(1.0, 4.0)
    s = en.scalars(bump, V2, prm)
    assert nehari_condition(s, prm)
    expect = math.sqrt(s.norm_V_sq / (s.lp - s.n0))
    assert nehari_scale(bump, V2, prm) == pytest.approx(expect, rel=1e-12)
    on = bump * nehari_scale(bump, V2, prm)
    assert abs(en.nehari_pairing(on, V2, prm)) <= 1e-10 * en.norm_V_sq(on, V2)


@pytest.mark.parametrize("p", [4.5, 6.0])
def test_maximizer_general_p(bump, p):
    prm = Params(1.0, p)
    fib = AmplitudeFiber.from_scalars(en.scalars(bump, V2, prm), prm)
    t = fib.maximizer()
    assert abs(fib.derivative(t)) <= 1e-9 * fib.a * t
    assert fib.sup() == pytest.approx(float(fib.value(t)))
    assert fib.value(t) > fib.value(0.9 * t) and fib.value(t) > fib.value(1.1 * t)


def test_case_ii_increasing_fiber(grid):
    wide = GaussianProfile(1.0, 2.5).on(grid)
    prm = Params(0.0, 4.0)
    s = en.scalars(wide, V2, prm)
    assert s.n0 > 0 and not nehari_condition(s, prm)
    fib = AmplitudeFiber.from_scalars(s, prm)
    assert not fib.has_interior_max() and fib.sup() == math.inf
    with pytest.raises(Condition32Violated):
        fib.maximizer()
    with pytest.raises(Condition32Violated):
        nehari_scale(wide, V2, prm)
    scan = amplitude_scan(wide, V2, prm, np.geomspace(1e-2, 1e2, 50))
    assert scan.sign_changes == 0 and scan.t_max is None and scan.bracket is None


def test_nehari_condition_cases():
    s = dataclasses.make_dataclass("S", ["n0", "lp"])
    assert nehari_condition(s(1.0, 2.0), Params(1.0, 4.0))
    assert not nehari_condition(s(3.0, 2.0), Params(1.0, 4.0))
    assert nehari_condition(s(3.0, 2.0), Params(1.0, 5.0))
    assert not nehari_condition(s(3.0, 2.0), Params(0.0, 5.0))
    assert nehari_condition(s(-3.0, 2.0), Params(0.0, 5.0))
    with pytest.raises(ValueError):
        nehari_condition(s(-3.0, 2.0), Params(1.0, 3.0))
    with pytest.raises(ValueError):
        nehari_scale(Grid2D(2.0, 9).zeros(), V2, Params())


def test_amplitude_scan_rows(bump):
    scan = amplitude_scan(bump, V2, Params(), np.geomspace(0.1, 10, 40))
    rows = list(scan.rows())
    assert len(rows) == 40 and rows[0][2] == 1 and rows[-1][2] == -1
    assert scan.sign_changes == 1
    lo, hi = scan.bracket
    assert lo <= scan.t_max <= hi


@pytest.mark.parametrize("lam", [1.0, 0.7])
def test_scaled_fiber_at_one(bump, lam):
    prm = Params(1.0, 3.0, lam)
    fib = ScaledFiber(bump.values, bump.grid, V2, prm)
    assert fib.value(1.0) == pytest.approx(en.energy_I_lambda(bump, V2, prm), rel=1e-13)
    assert fib.derivative(1.0) == pytest.approx(en.functional_J_lambda(bump, V2, prm),
                                                rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("lam", [1.0, 0.6])
@pytest.mark.parametrize("V", [V2, power(1.5), constant(2.0)])
def test_scaled_derivative_matches_value(bump, V, lam):
    fib = ScaledFiber(bump.values, bump.grid, V, Params(1.0, 3.5, lam))
    for t in (0.5, 1.3, 2.0):
        d = 1e-5 * t
        fd = (fib.value(t + d) - fib.value(t - d)) / (2 * d)
        assert fib.derivative(t) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_generic_potential_path_matches_closed_form(bump):
    generic = dataclasses.replace(V2, kind="custom")
    fast = ScaledFiber(bump.values, bump.grid, V2, Params(1.0, 3.0))
    slow = ScaledFiber(bump.values, bump.grid, generic, Params(1.0, 3.0))
    for t in (0.6, 1.0, 1.7):
        assert slow.value(t) == pytest.approx(fast.value(t), rel=1e-12)
        assert slow.derivative(t) == pytest.approx(fast.derivative(t), rel=1e-12)


def test_scaled_fiber_matches_rescaled_profile():
    grid = Grid2D(8.0, 257)
    prof = GaussianProfile(1.0, 1.0)
    u = prof.on(grid)
    prm = Params(1.0, 3.0)
    for t in (0.8, 1.25, 1.5):
        direct = en.energy_I(rescale_Q(u, t, profile=prof).field, V2, prm)
        assert scaled_fiber(u, V2, prm, t) == pytest.approx(direct, rel=1e-3)


def test_rescale_Q_interpolated_vs_analytic():
    grid = Grid2D(8.0, 129)
    prof = GaussianProfile(1.5, 1.2, (0.5, -0.3))
    u = prof.on(grid)
    a = rescale_Q(u, 1.3, profile=prof)
    b = rescale_Q(u, 1.3)
    assert a.method == "analytic-profile" and b.method == "interpolated"
    assert np.abs(a.field.values - b.field.values).max() < 2e-2 * a.field.values.max()
    # |Q(t, u)|_2^2 = t^2 |u|_2^2
    l2 = lambda f: grid.h**2 * np.sum(f.values**2)
    assert l2(a.field) == pytest.approx(1.3**2 * l2(u), rel=1e-6)


def test_rescale_Q_warns_and_validates(grid, bump):
    with pytest.warns(RuntimeWarning):
        rescale_Q(bump, 100.0)
    with pytest.raises(ValueError):
        rescale_Q(bump, -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rescale_Q(bump, 1.1)


def test_pohozaev_scale_lands_on_J_zero(bump):
    prm = Params(1.0, 3.0)
    t = pohozaev_scale(bump, V2, prm)
    fib = ScaledFiber(bump.values, bump.grid, V2, prm)
    assert abs(fib.derivative(t)) <= 1e-10 * (1 + abs(fib.value(t)))
    assert fib.value(t) >= fib.value(0.9 * t) and fib.value(t) >= fib.value(1.1 * t)
    with pytest.raises(ValueError):
        pohozaev_scale(bump, V2, Params(1.0, 2.5))


def test_no_interior_max_in_narrow_window(bump):
    fib = ScaledFiber(bump.values, bump.grid, V2, Params(1.0, 3.0))
    t = fib.maximizer()
    with pytest.raises(NoInteriorMax):
        fib.maximizer(window=(math.log(t) + 0.5, math.log(t) + 1.0), points=16)
    with pytest.raises(NoInteriorMax):
        fib.maximizer(window=(math.log(t) + 0.5, math.log(t) + 1.0), guess=t * 2)


def test_scan_has_one_sign_change(bump):
    fib = ScaledFiber(bump.values, bump.grid, power(1.5), Params(1.0, 3.0, 0.7))
    scan = fib.scan(np.geomspace(1e-2, 1e6, 300))
    assert scan.sign_changes == 1


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**20))
def test_dilation_gap_nonpositive(seed):
    grid = Grid2D(6.0, 33)
    u = random_bumps(grid, np.random.default_rng(seed))
    prm = Params(1.0, 3.0)
    assert lemma55_check(u, V2, prm, [1.0]) == pytest.approx(0.0, abs=1e-12)
    worst = lemma55_check(u, V2, prm, np.geomspace(0.1, 10, 16))
    assert worst <= 1e-8 * (1 + abs(en.energy_I(u, V2, prm)))
