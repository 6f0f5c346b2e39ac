"""Fibering maps through a field and their maximizers.

Two one-parameter families are used:

* amplitude fibers ``t -> I(t u)``, whose maximizer puts ``t u`` on the Nehari set;
* dilations ``t -> I(Q(t, u))`` with ``Q(t, u)(x) = t^2 u(t x)``,
  whose maximizer puts ``Q(t, u)`` on the set ``J = 0``.

Both are evaluated from closed formulas in the invariant integrals of ``u``
(one convolution per field); only the potential term of the dilation fiber
needs a fresh quadrature of ``V(x / t) u^2`` per ``t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .energy import EIGHT_PI, FieldScalars, I_from, J_lambda_from, Params, field_scalars
from .errors import Condition32Violated, FiberStructureError, NoInteriorMax
from .grid import Field2D, Grid2D, interpolate_array
from .potentials import PotentialSpec


# --- amplitude fiber ------------------------------------------------------------------

@dataclass(frozen=True)
class AmplitudeFiber:
    """``t -> I_lambda(t u) = a t^2/2 + c t^4/4 - d t^p/p``."""

    a: float  # ||u||_V^2 (+ (1 - lambda) |u|_*^2)
    c: float  # N0(u)
    d: float  # lambda * b * |u|_p^p
    p: float

    @classmethod
    def from_scalars(cls, s: FieldScalars, prm: Params) -> "AmplitudeFiber":
        a = s.norm_V_sq + (1.0 - prm.lam) * s.star_sq
        return cls(a, s.n0, prm.lam * prm.b * s.lp, prm.p)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * self.a * t**2 + 0.25 * self.c * t**4 - self.d / self.p * t**self.p

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return self.a * t + self.c * t**3 - self.d * t ** (self.p - 1.0)

    def reduced_derivative(self, t):
        """``h'(t) / t = a + c t^2 - d t^(p-2)``."""
        t = np.asarray(t, dtype=float)
        return self.a + self.c * t**2 - self.d * t ** (self.p - 2.0)

    def has_interior_max(self) -> bool:
        """Whether ``h'`` eventually turns negative (the sup is finite)."""
        if self.p > 4:
            return self.d > 0 or self.c < 0
        if self.p == 4:
            return self.c - self.d < 0
        return self.c < 0 or (self.c == 0 and self.d > 0)

    def maximizer(self) -> float:
        if not self.has_interior_max():
            raise Condition32Violated("amplitude fiber is increasing on (0, inf)")
        phi = self.reduced_derivative
        hi = 1.0
        while phi(hi) > 0:
            hi *= 2.0
            if hi > 1e150:
                raise Condition32Violated("no sign change of the amplitude fiber derivative")
        lo = hi / 2.0
        while phi(lo) <= 0:
            lo /= 2.0
        return optimize.brentq(phi, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    def sup(self) -> float:
        if not self.has_interior_max():
            return math.inf
        return float(self.value(self.maximizer()))


def amplitude_fiber(u: Field2D, V: PotentialSpec, prm: Params, t: float) -> float:
    if not t > 0:
        raise ValueError("t must be positive")
    s = field_scalars(u.values, u.grid, V, prm.p)
    return float(AmplitudeFiber.from_scalars(s, prm).value(t))


def nehari_condition(s: FieldScalars, prm: Params) -> bool:
    if prm.p == 4:
        return s.n0 - prm.b * s.lp < 0
    if prm.p > 4:
        return s.n0 < 0 or prm.b > 0
    raise ValueError("the Nehari fiber projection needs p >= 4")


def nehari_scale_from(s: FieldScalars, prm: Params) -> float:
    if not nehari_condition(s, prm):
        raise Condition32Violated(
            f"Nehari existence condition fails: N0={s.n0:.6g}, b|u|_p^p={prm.b * s.lp:.6g}, p={prm.p}")
    return AmplitudeFiber.from_scalars(s, prm.with_lambda(1.0)).maximizer()


def nehari_scale(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    """Unique ``t_u`` with ``t_u u`` on the Nehari set (``p >= 4``)."""
    if not np.any(u.values):
        raise ValueError("u must be nonzero")
    return nehari_scale_from(field_scalars(u.values, u.grid, V, prm.p), prm)


@dataclass
class FiberScan:
    t_values: np.ndarray
    h_values: np.ndarray
    derivative_sign: np.ndarray
    t_max: float | None = None
    bracket: tuple[float, float] | None = None

    @property
    def sign_changes(self) -> int:
        sg = self.derivative_sign[self.derivative_sign != 0]
        return int(np.count_nonzero(np.diff(sg)))

    def rows(self):
        for t, h, sg in zip(self.t_values, self.h_values, self.derivative_sign):
            yield float(t), float(h), int(sg)


def _locate(t_values, sign) -> tuple[float, float] | None:
    idx = np.nonzero((sign[:-1] > 0) & (sign[1:] <= 0))[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    return float(t_values[i]), float(t_values[i + 1])


def amplitude_scan(u: Field2D, V: PotentialSpec, prm: Params, t_values) -> FiberScan:
    s = field_scalars(u.values, u.grid, V, prm.p)
    fib = AmplitudeFiber.from_scalars(s, prm)
    t = np.asarray(t_values, dtype=float)
    sign = np.sign(fib.reduced_derivative(t)).astype(int)
    scan = FiberScan(t, fib.value(t), sign, bracket=_locate(t, sign))
    if fib.has_interior_max():
        scan.t_max = fib.maximizer()
    return scan


# --- dilation fiber -------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianProfile:
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""

    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __call__(self, X, Y):
        cx, cy = self.center
        return self.amplitude * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * self.width**2))

    def rescaled(self, t: float) -> "GaussianProfile":
        """Profile of ``t^2 u(t x)``."""
        cx, cy = self.center
        return GaussianProfile(t * t * self.amplitude, self.width / t, (cx / t, cy / t))

    def on(self, grid: Grid2D) -> Field2D:
        return grid.sample(self)


@dataclass
class RescaleResult:
    field: Field2D
    method: str


def rescale_Q(u: Field2D, t: float, profile: GaussianProfile | None = None) -> RescaleResult:
    """``Q(t, u)(x) = t^2 u(t x)`` on the same grid.

    With ``profile`` the analytic profile is re-evaluated at scale ``t``;
    otherwise ``u`` is interpolated bilinearly (zero outside the box).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    grid = u.grid
    if t < 10 * grid.h / grid.L or t > grid.L / (10 * grid.h):
        warnings.warn(f"rescaling by t={t:g} moves the profile outside the grid resolution",
                      RuntimeWarning, stacklevel=2)
    if profile is not None:
        return RescaleResult(profile.rescaled(t).on(grid), "analytic-profile")
    X, Y = grid.mesh
    vals = (t * t) * interpolate_array(u.values, grid, t * X, t * Y)
    return RescaleResult(Field2D(grid, vals), "interpolated")


class ScaledFiber:
    """``t -> I_lambda(Q(t, u))`` from the closed dilation formula.

    ``derivative(t)`` equals ``J_lambda(Q(t, u)) / t`` for the same discrete
    integrals, so ``derivative(1) == J_lambda(u)``.
    """

    def __init__(self, u: np.ndarray, grid: Grid2D, V: PotentialSpec, prm: Params,
                 s: FieldScalars | None = None):
        self.grid = grid
        self.V = V
        self.prm = prm
        self.s = s if s is not None else field_scalars(u, grid, V, prm.p)
        self.usq = u * u
        self._h2 = grid.h**2
        X, Y = grid.mesh
        self._X, self._Y = X, Y
        self._r = grid.radius
        self._power_q = None
        if V.kind == "power":
            q = V.params["q"]
            self._power_q = q
            self._rq_int = self._h2 * float(np.sum(self._r**q * self.usq))
        elif V.kind == "constant":
            self._power_q = 0.0
            self._rq_int = 0.0

    def _v_int(self, t: float) -> float:
        # int V(x / t) u^2
        if self._power_q is not None:
            if self.V.kind == "constant":
                return self.V.params["c"] * self.s.l2_sq
            return self.s.l2_sq + t ** (-self._power_q) * self._rq_int
        return self._h2 * float(np.sum(self.V.value(self._X / t, self._Y / t) * self.usq))

    def _reduced_int(self, t: float) -> float:
        # int reduced(x / t) u^2
        if self._power_q is not None:
            if self.V.kind == "constant":
                return self.V.params["c"] * self.s.l2_sq
            q = self._power_q
            return self.s.l2_sq + (1.0 - 0.5 * q) * t ** (-q) * self._rq_int
        return self._h2 * float(np.sum(self.V.reduced(self._X / t, self._Y / t) * self.usq))

    def _star_terms(self, t: float) -> tuple[float, float]:
        rt = self._r / t
        log_int = self._h2 * float(np.sum(np.log1p(rt) * self.usq))
        frac_int = self._h2 * float(np.sum(rt / (1.0 + rt) * self.usq))
        return log_int, frac_int

    def value(self, t: float) -> float:
        s, b, p, lam = self.s, self.prm.b, self.prm.p, self.prm.lam
        t4 = t**4
        val = (0.5 * t4 * s.grad_sq + 0.5 * t * t * self._v_int(t) + 0.25 * t4 * s.n0
               - t4 * math.log(t) / EIGHT_PI * s.l2_sq**2
               - lam * b / p * t ** (2 * p - 2) * s.lp)
        if lam != 1.0:
            val += 0.5 * (1.0 - lam) * t * t * self._star_terms(t)[0]
        return val

    def derivative(self, t: float) -> float:
        s, b, p, lam = self.s, self.prm.b, self.prm.p, self.prm.lam
        t3 = t**3
        val = (2.0 * t3 * s.grad_sq + t * self._reduced_int(t) + t3 * s.n0
               - t3 * (4.0 * math.log(t) + 1.0) / EIGHT_PI * s.l2_sq**2
               - lam * b * (2 * p - 2) / p * t ** (2 * p - 3) * s.lp)
        if lam != 1.0:
            log_int, frac_int = self._star_terms(t)
            val += 0.5 * (1.0 - lam) * t * (2.0 * log_int - frac_int)
        return val

    def scan(self, t_values) -> FiberScan:
        t = np.asarray(t_values, dtype=float)
        h = np.array([self.value(x) for x in t])
        d = np.array([self.derivative(x) for x in t])
        sign = np.sign(d).astype(int)
        return FiberScan(t, h, sign, bracket=_locate(t, sign))

    def maximizer(self, window: tuple[float, float] = (-6.0, 6.0), points: int = 241,
                  guess: float | None = None) -> float:
        """Unique stationary point, a maximum by the sign pattern of the derivative.

        With ``guess`` the bracket is grown geometrically around it (cheap,
        used inside solvers); otherwise the whole log-window is scanned and
        any second sign change is reported as an error.
        """
        if guess is not None:
            lo, hi = self._grow_bracket(guess, window)
        else:
            s_grid = np.linspace(window[0], window[1], points)
            t = np.exp(s_grid)
            d = np.array([self.derivative(x) for x in t])
            sign = np.sign(d)
            nz = sign[sign != 0]
            changes = int(np.count_nonzero(np.diff(nz)))
            if changes == 0:
                raise NoInteriorMax(
                    f"derivative keeps sign {int(nz[0]) if nz.size else 0} on log t in {window}")
            if changes > 1 or not (nz[0] > 0 and nz[-1] < 0):
                raise FiberStructureError(f"dilation fiber derivative changes sign {changes} times")
            k = int(np.nonzero((sign[:-1] > 0) & (sign[1:] <= 0))[0][0])
            lo, hi = float(t[k]), float(t[k + 1])
            if sign[k + 1] == 0:
                return hi
        return optimize.brentq(self.derivative, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)

    def _grow_bracket(self, guess: float, window) -> tuple[float, float]:
        tmin, tmax = math.exp(window[0]), math.exp(window[1])
        d0 = self.derivative(guess)
        if d0 == 0:
            return guess, guess * (1 + 1e-15)
        step = 1.02
        t = guess
        while True:
            nxt = t * step if d0 > 0 else t / step
            if not tmin <= nxt <= tmax:
                raise NoInteriorMax(f"no sign change of the dilation derivative inside {window}")
            d = self.derivative(nxt)
            if (d <= 0) if d0 > 0 else (d >= 0):
                return (t, nxt) if d0 > 0 else (nxt, t)
            t = nxt
            step = step * step


def scaled_fiber(u: Field2D, V: PotentialSpec, prm: Params, t: float) -> float:
    """``I(Q(t, u))`` (or ``I_lambda`` for ``prm.lam < 1``) without resampling ``u``."""
    if not t > 0:
        raise ValueError("t must be positive")
    return ScaledFiber(u.values, u.grid, V, prm).value(t)


def pohozaev_scale(u: Field2D, V: PotentialSpec, prm: Params,
                   window: tuple[float, float] = (-6.0, 6.0)) -> float:
    """Unique ``t_u`` maximizing ``t -> I(Q(t, u))`` (so ``J(Q(t_u, u)) = 0``); ``p >= 3``."""
    if prm.p < 3:
        raise ValueError("the dilation fiber projection needs p >= 3")
    if not np.any(u.values):
        raise ValueError("u must be nonzero")
    return ScaledFiber(u.values, u.grid, V, prm.with_lambda(1.0)).maximizer(window)


def lemma55_check(u: Field2D, V: PotentialSpec, prm: Params, t_list) -> float:
    """Largest value of ``I(Q(t,u)) - I(u) + (1 - t^4) J(u) / 4`` over ``t_list`` (should be <= 0)."""
    prm1 = prm.with_lambda(1.0)
    fib = ScaledFiber(u.values, u.grid, V, prm1)
    I_u = I_from(fib.s, prm.b, prm.p)
    J_u = J_lambda_from(fib.s, prm.b, prm.p, 1.0)
    worst = -math.inf
    for t in t_list:
        worst = max(worst, fib.value(float(t)) - I_u + 0.25 * (1.0 - float(t) ** 4) * J_u)
    return worst
