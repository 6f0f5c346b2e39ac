"""Uniform square grids, grid functions and the quadrature/difference operators on them.

The box is ``[-L, L]^2`` with ``n`` nodes per axis (corners included).  Grid
functions carry homogeneous Dirichlet data: the outer ring of nodes is zero.
Every node gets the weight ``h**2``, which coincides with the trapezoid rule
because the boundary values vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class Grid2D:
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 8:
            raise ValueError(f"points_per_axis must be an integer >= 8, got {self.points_per_axis}")
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "points_per_axis", int(self.points_per_axis))

    @property
    def L(self) -> float:
        return self.half_width

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.points_per_axis - 1)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def axis(self) -> np.ndarray:
        ax = np.linspace(-self.half_width, self.half_width, self.points_per_axis)
        ax.flags.writeable = False
        return ax

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(X, Y)`` with ``X[i, j] = axis[i]``, ``Y[i, j] = axis[j]``."""
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    @cached_property
    def radius(self) -> np.ndarray:
        X, Y = self.mesh
        r = np.hypot(X, Y)
        r.flags.writeable = False
        return r

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.zeros((self.n, self.n), dtype=bool)
        mask[1:-1, 1:-1] = True
        mask.flags.writeable = False
        return mask

    def zeros(self) -> "Field2D":
        return Field2D(self, np.zeros((self.n, self.n)))

    def field(self, values) -> "Field2D":
        return Field2D(self, values)

    def sample(self, func) -> "Field2D":
        """Evaluate ``func(X, Y)`` on the nodes; the boundary ring is forced to zero."""
        X, Y = self.mesh
        return Field2D(self, np.asarray(func(X, Y), dtype=float))


class Field2D:
    """Real grid function with zero boundary ring.

    ``values`` is a read-only ``(n, n)`` array.  Construction copies the input
    and zeroes the boundary ring; non-finite input is rejected.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values):
        arr = np.array(values, dtype=float, copy=True)
        if arr.shape != (grid.n, grid.n):
            raise ValueError(f"expected shape {(grid.n, grid.n)}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr[0, :] = 0.0
        arr[-1, :] = 0.0
        arr[:, 0] = 0.0
        arr[:, -1] = 0.0
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    def __repr__(self):
        return f"Field2D(L={self.grid.L}, n={self.grid.n}, max|u|={np.abs(self.values).max():.3g})"

    def _check(self, other: "Field2D"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "Field2D") -> "Field2D":
        self._check(other)
        return Field2D(self.grid, self.values + other.values)

    def __sub__(self, other: "Field2D") -> "Field2D":
        self._check(other)
        return Field2D(self.grid, self.values - other.values)

    def __neg__(self) -> "Field2D":
        return Field2D(self.grid, -self.values)

    def __mul__(self, scalar: float) -> "Field2D":
        return Field2D(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def squared(self) -> "Field2D":
        return Field2D(self.grid, self.values**2)

    def product(self, other: "Field2D") -> "Field2D":
        self._check(other)
        return Field2D(self.grid, self.values * other.values)


def _as_array(f) -> tuple[np.ndarray, float]:
    return f.values, f.grid.h


def integrate(f: Field2D) -> float:
    """``h^2 * sum(f)``; numpy's pairwise summation fixes the reduction order."""
    vals, h = _as_array(f)
    return float(h * h * np.sum(vals))


def laplacian_array(u: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (
        u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
    ) / (h * h)
    return out


def laplacian(u: Field2D) -> Field2D:
    """Five-point Laplacian on interior nodes, zero on the boundary ring."""
    return Field2D(u.grid, laplacian_array(u.values, u.grid.h))


def grad_sq_array(u: np.ndarray) -> float:
    # h^2 * sum((du/h)^2) over all grid edges; the h factors cancel
    dx = np.diff(u, axis=0)
    dy = np.diff(u, axis=1)
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def grad_sq_norm(u: Field2D) -> float:
    """Discrete ``|grad u|_2^2`` from forward differences with zero exterior extension."""
    return grad_sq_array(u.values)


def l2_sq(u: Field2D) -> float:
    h = u.grid.h
    return float(h * h * np.sum(u.values**2))


def lp_norm_p(u: Field2D, p: float) -> float:
    """``|u|_p^p`` by nodal quadrature."""
    if not p > 0:
        raise ValueError("p must be positive")
    h = u.grid.h
    return float(h * h * np.sum(np.abs(u.values) ** p))


def star_norm_sq(u: Field2D) -> float:
    """``int log(1 + |x|) u^2``."""
    h = u.grid.h
    return float(h * h * np.sum(np.log1p(u.grid.radius) * u.values**2))


def interpolate_array(values: np.ndarray, grid: Grid2D, xs, ys) -> np.ndarray:
    """Bilinear interpolation of nodal values at arbitrary points, zero outside the box."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    L, h = grid.L, grid.h
    ci = (xs + L) / h
    cj = (ys + L) / h
    inside = (np.abs(xs) <= L) & (np.abs(ys) <= L)
    # clip keeps map_coordinates inside the table; the mask zeroes exterior points
    last = grid.n - 1
    coords = np.stack([np.clip(ci, 0, last), np.clip(cj, 0, last)])
    out = ndimage.map_coordinates(values, coords.reshape(2, -1), order=1, mode="nearest")
    out = out.reshape(xs.shape)
    return np.where(inside, out, 0.0)


def interpolate(u: Field2D, point: tuple[float, float]) -> float:
    """Bilinear value of ``u`` at ``point``; exactly zero outside ``[-L, L]^2``."""
    x, y = point
    return float(interpolate_array(u.values, u.grid, np.array([x]), np.array([y]))[0])


def boundary_mass_fraction(u: Field2D, ring: float = 0.1) -> float:
    """Share of ``|u|_2^2`` carried by nodes with ``max(|x|, |y|) > (1 - ring) L``."""
    X, Y = u.grid.mesh
    outer = np.maximum(np.abs(X), np.abs(Y)) > (1.0 - ring) * u.grid.L
    total = float(np.sum(u.values**2))
    if total == 0.0:
        return 0.0
    return float(np.sum(u.values[outer] ** 2) / total)
