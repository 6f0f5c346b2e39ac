"""External potentials and box-limited validators for the hypotheses on them.

A :class:`PotentialSpec` bundles ``V``, the radial derivative ``(grad V(x), x)``
and the reduced potential ``V - (grad V, x)/2``.  The validators sample these
on finite boxes; their verdicts are evidence on that box, never proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid2D, interpolate_array

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Evaluatable potential.

    ``value(X, Y)`` and ``grad(X, Y) -> (Vx, Vy)`` act elementwise on arrays.
    ``grad`` is ``None`` for potentials without a usable gradient; ``smooth``
    is ``False`` for discontinuous ones (validators then skip gradient checks).
    """

    kind: str
    label: str
    value: Callable[[Array, Array], Array]
    grad: Callable[[Array, Array], tuple[Array, Array]] | None
    V0: float
    smooth: bool = True
    params: dict = field(default_factory=dict)
    _radial: Callable[[Array, Array], Array] | None = None
    _reduced: Callable[[Array, Array], Array] | None = None

    def radial_derivative(self, X, Y) -> Array:
        """``(grad V(x), x)``, taken as 0 at the origin."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self._radial is not None:
            out = np.asarray(self._radial(X, Y), dtype=float)
        elif self.grad is None:
            raise ValueError(f"potential {self.label!r} has no gradient")
        else:
            gx, gy = self.grad(X, Y)
            out = gx * X + gy * Y
        return np.where((X == 0) & (Y == 0), 0.0, out)

    def reduced(self, X, Y) -> Array:
        """``V(x) - (grad V(x), x) / 2``."""
        if self._reduced is not None:
            return np.asarray(self._reduced(np.asarray(X, float), np.asarray(Y, float)), dtype=float)
        return self.value(X, Y) - 0.5 * self.radial_derivative(X, Y)

    def __repr__(self):
        return f"PotentialSpec({self.label})"


def constant(c: float = 1.0) -> PotentialSpec:
    if not c > 0:
        raise ValueError("constant potential must be positive")
    c = float(c)

    def value(X, Y):
        return np.full(np.broadcast(X, Y).shape, c)

    def grad(X, Y):
        z = np.zeros(np.broadcast(X, Y).shape)
        return z, z

    return PotentialSpec("constant", f"constant:{c:g}", value, grad, V0=c, params={"c": c},
                         _radial=lambda X, Y: np.zeros(np.broadcast(X, Y).shape),
                         _reduced=value)


def power(q: float) -> PotentialSpec:
    """``V(x) = 1 + |x|^q``."""
    if not q > 0:
        raise ValueError("power potential needs q > 0")
    q = float(q)

    def value(X, Y):
        return 1.0 + np.hypot(X, Y) ** q

    def grad(X, Y):
        r = np.hypot(X, Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(r > 0, q * r ** (q - 2.0), 0.0)
        return fac * X, fac * Y

    def radial(X, Y):
        return q * np.hypot(X, Y) ** q

    def reduced(X, Y):
        return 1.0 + (1.0 - 0.5 * q) * np.hypot(X, Y) ** q

    return PotentialSpec("power", f"power:{q:g}", value, grad, V0=1.0, params={"q": q},
                         _radial=radial, _reduced=reduced)


def _in_squares(X, Y) -> Array:
    # D_n = [n, n + 1/(2n)]^2 for n = 1, 2, ...
    k = np.floor(X)
    kk = np.maximum(k, 1.0)
    hit = (k >= 1) & (np.floor(Y) == k) & (X - k <= 0.5 / kk) & (Y - k <= 0.5 / kk)
    # closed squares: the right/top edges n + 1/(2n) have floor n as well for n >= 1
    return hit


def checkerboard() -> PotentialSpec:
    """Non-coercive example: ``1`` on the squares ``D_n``, ``1 + |x|^2`` elsewhere."""

    def value(X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return np.where(_in_squares(X, Y), 1.0, 1.0 + X * X + Y * Y)

    def grad(X, Y):
        # a.e. gradient: zero inside the squares
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        inside = _in_squares(X, Y)
        return np.where(inside, 0.0, 2.0 * X), np.where(inside, 0.0, 2.0 * Y)

    return PotentialSpec("checkerboard", "checkerboard", value, grad, V0=1.0, smooth=False)


def tabulated(grid: Grid2D, table, V0: float | None = None) -> PotentialSpec:
    """Potential given by nodal values; bilinear inside the box, the edge value outside."""
    tab = np.array(table, dtype=float)
    if tab.shape != (grid.n, grid.n):
        raise ValueError("table shape does not match grid")
    if V0 is None:
        V0 = float(tab.min())
    if not V0 > 0:
        raise ValueError("tabulated potential must be positive")
    gx_tab, gy_tab = np.gradient(tab, grid.h, grid.h)
    L = grid.L

    def _interp(t, X, Y):
        X = np.clip(np.asarray(X, dtype=float), -L, L)
        Y = np.clip(np.asarray(Y, dtype=float), -L, L)
        return interpolate_array(t, grid, X, Y)

    return PotentialSpec("tabulated", "tabulated", lambda X, Y: _interp(tab, X, Y),
                         lambda X, Y: (_interp(gx_tab, X, Y), _interp(gy_tab, X, Y)),
                         V0=float(V0), smooth=False)


def parse_potential(text: str) -> PotentialSpec:
    """``power:2``, ``constant:1``, ``constant``, ``checkerboard``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    try:
        if name == "power":
            return power(float(arg))
        if name == "constant":
            return constant(float(arg) if arg else 1.0)
    except ValueError as exc:
        raise ValueError(f"bad potential {text!r}: {exc}") from None
    if name == "checkerboard" and not arg:
        return checkerboard()
    raise ValueError(f"unknown potential {text!r}; use power:Q, constant:C or checkerboard")


# --- validators -----------------------------------------------------------------------

@dataclass
class SublevelReport:
    M: float
    boxes: list[float]
    areas: list[float]
    stabilized: bool
    fills_box: bool
    verdict: str


@dataclass
class V0Report:
    sublevels: list[SublevelReport]
    min_value: float
    declared_V0: float
    min_ok: bool
    verdict: str
    spacing: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "min_value": self.min_value,
            "declared_V0": self.declared_V0,
            "min_ok": self.min_ok,
            "spacing": self.spacing,
            "sublevels": [vars(s) for s in self.sublevels],
        }


def _sublevel_area(spec: PotentialSpec, M: float, R: float, spacing: float) -> tuple[float, float]:
    # cell-centred node counting, row-chunked to bound memory
    k = max(1, int(math.ceil(2 * R / spacing)))
    d = 2 * R / k
    centers = -R + (np.arange(k) + 0.5) * d
    count = 0
    vmin = math.inf
    chunk = max(1, 2_000_000 // k)
    for start in range(0, k, chunk):
        X, Y = np.meshgrid(centers[start:start + chunk], centers, indexing="ij")
        V = spec.value(X, Y)
        count += int(np.count_nonzero(V <= M))
        vmin = min(vmin, float(V.min()))
    return count * d * d, vmin


def check_V0(spec: PotentialSpec, M_list, box_list, spacing: float = 0.02) -> V0Report:
    """Sublevel-set areas ``|{V <= M} cap [-R, R]^2|`` by node counting.

    An area is "stabilized" when it changes by less than 1% between the two
    largest boxes; a sublevel set that fills every box is a definite failure.
    """
    M_list = [float(m) for m in M_list]
    boxes = sorted(float(b) for b in box_list)
    if not M_list or any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ValueError("M_list must be nonempty and increasing")
    if len(boxes) < 2:
        raise ValueError("need at least two box sizes")
    vmin = math.inf
    subs = []
    for M in M_list:
        areas = []
        for R in boxes:
            a, vm = _sublevel_area(spec, M, R, spacing)
            areas.append(a)
            vmin = min(vmin, vm)
        big, prev = areas[-1], areas[-2]
        stabilized = big > 0 and abs(big - prev) <= 0.01 * big or big == prev == 0.0
        fills = all(abs(a - (2 * R) ** 2) <= 1e-9 * (2 * R) ** 2 for a, R in zip(areas, boxes))
        if stabilized:
            verdict = "passes"
        elif fills:
            verdict = "fails (V0) sublevel condition"
        else:
            verdict = "inconclusive"
        subs.append(SublevelReport(M, boxes, areas, stabilized, fills, verdict))
    min_ok = vmin >= spec.V0 - 1e-12 * max(1.0, abs(spec.V0))
    if any(s.verdict.startswith("fails") for s in subs) or not min_ok:
        verdict = "fails"
    elif all(s.verdict == "passes" for s in subs):
        verdict = "passes"
    else:
        verdict = "inconclusive"
    return V0Report(subs, vmin, spec.V0, min_ok, verdict, spacing)


def _sample_mask(grid: Grid2D) -> Array:
    return grid.radius > 3 * grid.h


def check_V1(spec: PotentialSpec, sample_grid: Grid2D) -> tuple[float, float] | None:
    """``(alpha_hat, beta_hat)`` over the sample nodes with ``|x| > 3h``.

    Returns ``None`` for non-smooth potentials (left unchecked).
    """
    if not spec.smooth or spec.grad is None:
        return None
    X, Y = sample_grid.mesh
    mask = _sample_mask(sample_grid)
    V = spec.value(X, Y)[mask]
    D = spec.radial_derivative(X, Y)[mask]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = np.abs(D) / V
    if not np.all(np.isfinite(ratio)):
        alpha = math.inf
    else:
        alpha = float(ratio.max()) if ratio.size else 0.0
    beta = max(0.0, -float(np.min(2 * V + D))) if V.size else 0.0
    return alpha, beta


@dataclass
class V2Report:
    verdict: str
    violation: tuple | None = None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "violation": self.violation}


def check_V2(spec: PotentialSpec, rays: int = 16, t_samples: int = 64) -> V2Report:
    """Monotonicity of ``t -> reduced(t x)`` along ``rays`` unit directions."""
    if rays < 8 or t_samples < 16:
        raise ValueError("need rays >= 8 and t_samples >= 16")
    if not spec.smooth:
        return V2Report("unchecked")
    t = np.geomspace(1e-2, 1e2, t_samples)
    for k in range(rays):
        th = 2 * math.pi * k / rays
        vals = spec.reduced(t * math.cos(th), t * math.sin(th))
        drop = vals[:-1] - vals[1:]
        tol = 1e-12 * (1 + np.abs(vals[:-1]))
        bad = np.nonzero(drop > tol)[0]
        if bad.size:
            i = int(bad[0])
            return V2Report("fails", (th, float(t[i]), float(t[i + 1]),
                                      float(vals[i]), float(vals[i + 1])))
    return V2Report("passes")


@dataclass
class Lemma51Report:
    verdict: str
    radial_nonnegative: bool
    reduced_above_V0: bool
    radial_below_2V: bool
    violation: tuple | None = None

    def to_dict(self) -> dict:
        return dict(vars(self))


def check_lemma51(spec: PotentialSpec, sample_grid: Grid2D) -> Lemma51Report:
    """``0 <= (grad V, x) <= 2 V`` and ``reduced >= V0`` on every sample node."""
    if not spec.smooth or spec.grad is None:
        return Lemma51Report("unchecked", False, False, False)
    X, Y = sample_grid.mesh
    V = spec.value(X, Y)
    D = spec.radial_derivative(X, Y)
    W = spec.reduced(X, Y)
    checks = [
        ("radial_nonnegative", D >= -1e-12),
        ("reduced_above_V0", W >= spec.V0 - 1e-12 * (1 + np.abs(W))),
        ("radial_below_2V", D <= 2 * V + 1e-12 * (1 + np.abs(V))),
    ]
    flags = {}
    first = None
    for name, ok in checks:
        flags[name] = bool(ok.all())
        if first is None and not flags[name]:
            i, j = np.unravel_index(np.argmin(ok), ok.shape)
            first = (name, float(X[i, j]), float(Y[i, j]))
    verdict = "passes" if all(flags.values()) else "fails"
    return Lemma51Report(verdict, violation=first, **flags)
