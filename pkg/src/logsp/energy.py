"""Energy functionals and their gradients on the grid.

All scalars of one field come from a single pass (:func:`field_scalars`) with
one log-kernel convolution.  Gradients are Riesz representers for the
discrete inner product ``integrate(g * v)``; they vanish on the boundary ring.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import logkernel
from .grid import Field2D, Grid2D, grad_sq_array, laplacian_array
from .potentials import PotentialSpec

TWO_PI = 2.0 * math.pi
EIGHT_PI = 8.0 * math.pi


@dataclass(frozen=True)
class Params:
    b: float = 1.0
    p: float = 4.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.b >= 0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if not self.p > 2:
            raise ValueError(f"p must be > 2, got {self.p}")
        if not 0.5 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [1/2, 1], got {self.lam}")

    def with_lambda(self, lam: float) -> "Params":
        return Params(self.b, self.p, lam)


@dataclass(frozen=True)
class PotentialArrays:
    V: np.ndarray
    radial: np.ndarray  # (grad V(x), x)
    reduced: np.ndarray
    log1p_r: np.ndarray
    r_frac: np.ndarray  # |x| / (1 + |x|)


@lru_cache(maxsize=16)
def potential_arrays(V: PotentialSpec, grid: Grid2D) -> PotentialArrays:
    X, Y = grid.mesh
    r = grid.radius
    arrs = PotentialArrays(
        V=np.asarray(V.value(X, Y), dtype=float),
        radial=np.asarray(V.radial_derivative(X, Y), dtype=float),
        reduced=np.asarray(V.reduced(X, Y), dtype=float),
        log1p_r=np.log1p(r),
        r_frac=r / (1.0 + r),
    )
    for a in vars(arrs).values():
        a.flags.writeable = False
    return arrs


@dataclass(frozen=True)
class FieldScalars:
    """Invariant integrals of one field plus its convolution potential ``w``."""

    grad_sq: float
    v_int: float  # int V u^2
    radial_int: float  # int (grad V, x) u^2
    star_sq: float
    r_frac_int: float
    lp: float
    l2_sq: float
    n0: float
    w: np.ndarray

    @property
    def norm_V_sq(self) -> float:
        return self.grad_sq + self.v_int

    @property
    def reduced_int(self) -> float:
        return self.v_int - 0.5 * self.radial_int


def field_scalars(u: np.ndarray, grid: Grid2D, V: PotentialSpec, p: float) -> FieldScalars:
    pa = potential_arrays(V, grid)
    h2 = grid.h**2
    usq = u * u
    w = logkernel.convolve_array(usq, logkernel.build_kernel(grid, "log"))
    return FieldScalars(
        grad_sq=grad_sq_array(u),
        v_int=h2 * float(np.sum(pa.V * usq)),
        radial_int=h2 * float(np.sum(pa.radial * usq)),
        star_sq=h2 * float(np.sum(pa.log1p_r * usq)),
        r_frac_int=h2 * float(np.sum(pa.r_frac * usq)),
        lp=h2 * float(np.sum(np.abs(u) ** p)),
        l2_sq=h2 * float(np.sum(usq)),
        n0=h2 * float(np.sum(w * usq)),
        w=w,
    )


# --- scalar formulas ------------------------------------------------------------------

def I_lambda_from(s: FieldScalars, b: float, p: float, lam: float) -> float:
    a_part = 0.5 * (s.norm_V_sq + s.star_sq) + 0.25 * s.n0
    b_part = 0.5 * s.star_sq + b / p * s.lp
    if lam == 1.0:
        # exact reduction to I, no cancellation of the star terms
        return 0.5 * s.norm_V_sq + 0.25 * s.n0 - b / p * s.lp
    return a_part - lam * b_part


def I_from(s: FieldScalars, b: float, p: float) -> float:
    return 0.5 * s.norm_V_sq + 0.25 * s.n0 - b / p * s.lp


def J_lambda_from(s: FieldScalars, b: float, p: float, lam: float) -> float:
    val = (2.0 * s.grad_sq + s.v_int - 0.5 * s.radial_int + s.n0 - s.l2_sq**2 / EIGHT_PI
           - (2.0 * p - 2.0) / p * b * lam * s.lp)
    if lam != 1.0:
        val += 0.5 * (1.0 - lam) * (2.0 * s.star_sq - s.r_frac_int)
    return val


def P_lambda_from(s: FieldScalars, b: float, p: float, lam: float) -> float:
    val = (s.v_int + 0.5 * s.radial_int + s.n0 + s.l2_sq**2 / EIGHT_PI
           - 2.0 * b * lam / p * s.lp)
    if lam != 1.0:
        val += 0.5 * (1.0 - lam) * (2.0 * s.star_sq + s.r_frac_int)
    return val


def nehari_pairing_from(s: FieldScalars, b: float) -> float:
    """``I'(u) u = ||u||_V^2 + N0(u) - b |u|_p^p``."""
    return s.norm_V_sq + s.n0 - b * s.lp


# --- gradients ------------------------------------------------------------------------

def _signed_power(u: np.ndarray, p: float) -> np.ndarray:
    # |u|^(p-2) u = sign(u) |u|^(p-1), continuous for p > 2
    return np.sign(u) * np.abs(u) ** (p - 1.0)


def _zero_ring(g: np.ndarray) -> np.ndarray:
    g[0, :] = g[-1, :] = 0.0
    g[:, 0] = g[:, -1] = 0.0
    return g


def grad_I_lambda_array(u: np.ndarray, grid: Grid2D, V: PotentialSpec, prm: Params,
                        w: np.ndarray | None = None) -> np.ndarray:
    pa = potential_arrays(V, grid)
    if w is None:
        w = logkernel.convolve_array(u * u, logkernel.build_kernel(grid, "log"))
    g = -laplacian_array(u, grid.h) + (pa.V + w) * u
    if prm.b:
        g -= prm.lam * prm.b * _signed_power(u, prm.p)
    if prm.lam != 1.0:
        g += (1.0 - prm.lam) * pa.log1p_r * u
    return _zero_ring(g)


def grad_J_array(u: np.ndarray, grid: Grid2D, V: PotentialSpec, prm: Params,
                 s: FieldScalars | None = None) -> np.ndarray:
    """Gradient of ``J`` (``lambda = 1``); the normal direction of the constraint ``J = 0``."""
    pa = potential_arrays(V, grid)
    if s is None:
        s = field_scalars(u, grid, V, prm.p)
    g = (-4.0 * laplacian_array(u, grid.h) + 2.0 * pa.reduced * u + 4.0 * s.w * u
         - (s.l2_sq / TWO_PI) * u)
    if prm.b:
        g -= 2.0 * prm.b * (prm.p - 1.0) * _signed_power(u, prm.p)
    return _zero_ring(g)


# --- public field-level API -----------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    norm_V_sq: float
    star_sq: float
    norm_E_sq: float
    n0: float
    n1: float
    n2: float
    lp: float
    l2_sq: float
    value_I: float
    value_I_lambda: float
    value_J: float
    value_J_lambda: float
    value_P_lambda: float
    a_part: float
    b_part: float

    def to_json_dict(self) -> dict:
        """Stable key names used by the CLI report."""
        return {
            "norm_V_sq": self.norm_V_sq,
            "star_sq": self.star_sq,
            "norm_E_sq": self.norm_E_sq,
            "n0": self.n0,
            "n1": self.n1,
            "n2": self.n2,
            "lp": self.lp,
            "l2_sq": self.l2_sq,
            "I": self.value_I,
            "I_lambda": self.value_I_lambda,
            "J": self.value_J,
            "J_lambda": self.value_J_lambda,
            "P_lambda": self.value_P_lambda,
            "a_part": self.a_part,
            "b_part": self.b_part,
        }

    def as_dict(self) -> dict:
        return asdict(self)


def scalars(u: Field2D, V: PotentialSpec, prm: Params) -> FieldScalars:
    return field_scalars(u.values, u.grid, V, prm.p)


def breakdown(u: Field2D, V: PotentialSpec, prm: Params) -> EnergyBreakdown:
    s = scalars(u, V, prm)
    b, p, lam = prm.b, prm.p, prm.lam
    return EnergyBreakdown(
        norm_V_sq=s.norm_V_sq,
        star_sq=s.star_sq,
        norm_E_sq=s.norm_V_sq + s.star_sq,
        n0=s.n0,
        n1=logkernel.N1(u),
        n2=logkernel.N2(u),
        lp=s.lp,
        l2_sq=s.l2_sq,
        value_I=I_from(s, b, p),
        value_I_lambda=I_lambda_from(s, b, p, lam),
        value_J=J_lambda_from(s, b, p, 1.0),
        value_J_lambda=J_lambda_from(s, b, p, lam),
        value_P_lambda=P_lambda_from(s, b, p, lam),
        a_part=0.5 * (s.norm_V_sq + s.star_sq) + 0.25 * s.n0,
        b_part=0.5 * s.star_sq + b / p * s.lp,
    )


def norm_V_sq(u: Field2D, V: PotentialSpec) -> float:
    h2 = u.grid.h**2
    return grad_sq_array(u.values) + h2 * float(np.sum(potential_arrays(V, u.grid).V * u.values**2))


def norm_E_sq(u: Field2D, V: PotentialSpec) -> float:
    h2 = u.grid.h**2
    pa = potential_arrays(V, u.grid)
    return norm_V_sq(u, V) + h2 * float(np.sum(pa.log1p_r * u.values**2))


def energy_I(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    """``I(u) = ||u||_V^2 / 2 + N0(u) / 4 - (b/p) |u|_p^p``."""
    return I_from(scalars(u, V, prm), prm.b, prm.p)


def energy_I_lambda(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    return I_lambda_from(scalars(u, V, prm), prm.b, prm.p, prm.lam)


def grad_I(u: Field2D, V: PotentialSpec, prm: Params) -> Field2D:
    return Field2D(u.grid, grad_I_lambda_array(u.values, u.grid, V, prm.with_lambda(1.0)))


def grad_I_lambda(u: Field2D, V: PotentialSpec, prm: Params) -> Field2D:
    return Field2D(u.grid, grad_I_lambda_array(u.values, u.grid, V, prm))


def grad_J(u: Field2D, V: PotentialSpec, prm: Params) -> Field2D:
    return Field2D(u.grid, grad_J_array(u.values, u.grid, V, prm))


def functional_J(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    return J_lambda_from(scalars(u, V, prm), prm.b, prm.p, 1.0)


def functional_J_lambda(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    return J_lambda_from(scalars(u, V, prm), prm.b, prm.p, prm.lam)


def functional_P_lambda(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    return P_lambda_from(scalars(u, V, prm), prm.b, prm.p, prm.lam)


def functional_P(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    return P_lambda_from(scalars(u, V, prm), prm.b, prm.p, 1.0)


def nehari_pairing(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    return nehari_pairing_from(scalars(u, V, prm), prm.b)


def pohozaev_energy_rhs(u: Field2D, V: PotentialSpec, prm: Params) -> float:
    """Energy of a point of ``J = 0`` rewritten without gradient or kernel terms."""
    s = scalars(u, V, prm)
    return (0.25 * (s.v_int + 0.5 * s.radial_int) + s.l2_sq**2 / (32.0 * math.pi)
            + prm.b * (prm.p - 3.0) / (2.0 * prm.p) * s.lp)
