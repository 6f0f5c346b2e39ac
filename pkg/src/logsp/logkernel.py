"""Logarithmic convolution on a uniform grid.

Kernels are sampled at every node offset of a zero-padded ``m x m`` table
(``m >= 2n - 1``) so the FFT product is a linear, not circular, convolution.
The singular zero-offset entry is replaced by the average of the kernel over
one ``h x h`` cell centred at the origin.

Conventions: ``convolve(f)[i] = (h^2 / 2 pi) * sum_j k(x_i - x_j) f_j`` and
``B(f, g) = h^2 * sum_i f_i * convolve(g)_i``, so ``N(u) = B(u^2, u^2)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy import integrate as sint

from .grid import Field2D, Grid2D

KINDS = ("log", "log1p", "log1p_inv", "inverse")

# average of log|x| over the unit cell [-1/2, 1/2]^2
_UNIT_CELL_LOG = 0.5 * (-math.log(2.0) - 3.0 + 0.5 * math.pi)
# average of 1/|x| over the unit cell
_UNIT_CELL_INV = 4.0 * math.log1p(math.sqrt(2.0))

_workers: int = 1


def set_threads(n: int | None) -> None:
    """Cap the number of FFT worker threads (``None`` reads ``LOGSP_THREADS``)."""
    global _workers
    if n is None:
        n = int(os.environ.get("LOGSP_THREADS", "1") or 1)
    _workers = max(1, int(n))


def get_threads() -> int:
    return _workers


set_threads(None)


def _kernel_values(kind: str, r: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        if kind == "log":
            return np.log(r)
        if kind == "log1p":
            return np.log1p(r)
        if kind == "log1p_inv":
            return np.log1p(1.0 / r)
        if kind == "inverse":
            return 1.0 / r
    raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")


def _cell_average_log1p(h: float) -> float:
    # polar integration over the eighth-triangle 0 <= theta <= pi/4, r <= (h/2)/cos(theta)
    def radial(R):
        # int_0^R r log(1 + r) dr
        return 0.5 * (R * R - 1.0) * math.log1p(R) - 0.25 * R * R + 0.5 * R

    val, _ = sint.quad(lambda th: radial(0.5 * h / math.cos(th)), 0.0, 0.25 * math.pi,
                       epsabs=0.0, epsrel=1e-13, limit=200)
    return 8.0 * val / (h * h)


def cell_average(kind: str, h: float) -> float:
    """Mean of the kernel over the ``h x h`` cell centred at the origin."""
    if kind == "log":
        return math.log(h) + _UNIT_CELL_LOG
    if kind == "log1p":
        return _cell_average_log1p(h)
    if kind == "log1p_inv":
        return _cell_average_log1p(h) - (math.log(h) + _UNIT_CELL_LOG)
    if kind == "inverse":
        return _UNIT_CELL_INV / h
    raise ValueError(f"unknown kernel kind {kind!r}")


@dataclass(frozen=True)
class KernelTable:
    grid: Grid2D
    kind: str
    padded_size: int
    origin_value: float
    samples: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)

    def offset_value(self, a: int, b: int) -> float:
        """Kernel sample at node offset ``(a h, b h)``."""
        m = self.padded_size
        return float(self.samples[a % m, b % m])


@lru_cache(maxsize=32)
def build_kernel(grid: Grid2D, kind: str = "log") -> KernelTable:
    n, h = grid.n, grid.h
    m = sfft.next_fast_len(2 * n - 1, real=True)
    idx = np.arange(m)
    # circular layout: rows 0..n-1 hold offsets 0..n-1, rows m-n+1..m-1 hold -(n-1)..-1
    off = np.where(idx < n, idx, idx - m).astype(float)
    used = (idx < n) | (idx > m - n)
    A, B = np.meshgrid(off, off, indexing="ij")
    r = h * np.hypot(A, B)
    samples = _kernel_values(kind, r)
    samples[0, 0] = cell_average(kind, h)
    samples[~used, :] = 0.0
    samples[:, ~used] = 0.0
    samples.flags.writeable = False
    spectrum = sfft.rfft2(samples, workers=_workers)
    spectrum.flags.writeable = False
    return KernelTable(grid, kind, m, float(samples[0, 0]), samples, spectrum)


def convolve_array(f: np.ndarray, table: KernelTable) -> np.ndarray:
    n, m, h = table.grid.n, table.padded_size, table.grid.h
    if f.shape != (n, n):
        raise ValueError(f"field shape {f.shape} does not match kernel grid n={n}")
    spec = sfft.rfft2(f, s=(m, m), workers=_workers)
    spec *= table.spectrum
    out = sfft.irfft2(spec, s=(m, m), workers=_workers)[:n, :n]
    return out * (h * h / (2.0 * math.pi))


@dataclass(frozen=True)
class ConvolutionResult:
    """``w = (1/2 pi) (log|.| * u^2)`` on the nodes, boundary ring included."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)


def convolve_log(u_sq: Field2D, kernel: KernelTable) -> ConvolutionResult:
    if u_sq.grid != kernel.grid:
        raise ValueError("kernel was built for a different grid")
    if np.any(u_sq.values < 0):
        raise ValueError("u_sq must be nonnegative")
    vals = convolve_array(u_sq.values, kernel)
    vals.flags.writeable = False
    return ConvolutionResult(u_sq.grid, vals)


def direct_convolve(f: np.ndarray, grid: Grid2D, kind: str = "log") -> np.ndarray:
    """Reference ``O(N^2)`` double sum; single-threaded, for oracles only."""
    X, Y = grid.mesh
    xs, ys = X.ravel(), Y.ravel()
    r = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    K = _kernel_values(kind, r)
    np.fill_diagonal(K, cell_average(kind, grid.h))
    out = K @ f.ravel()
    return (grid.h**2 / (2.0 * math.pi)) * out.reshape(grid.n, grid.n)


def _bilinear(f: Field2D, g: Field2D, kind: str) -> float:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    table = build_kernel(f.grid, kind)
    h = f.grid.h
    return float(h * h * np.sum(f.values * convolve_array(g.values, table)))


def B0(f: Field2D, g: Field2D) -> float:
    return _bilinear(f, g, "log")


def B1(f: Field2D, g: Field2D) -> float:
    return _bilinear(f, g, "log1p")


def B2(f: Field2D, g: Field2D) -> float:
    return _bilinear(f, g, "log1p_inv")


def quartic(u: Field2D, kind: str = "log") -> float:
    """``B_kind(u^2, u^2)`` computed from the nodal square (no boundary loss)."""
    usq = u.values**2
    table = build_kernel(u.grid, kind)
    h = u.grid.h
    return float(h * h * np.sum(usq * convolve_array(usq, table)))


def N0(u: Field2D) -> float:
    return quartic(u, "log")


def N1(u: Field2D) -> float:
    return quartic(u, "log1p")


def N2(u: Field2D) -> float:
    return quartic(u, "log1p_inv")


def N0_split(u: Field2D) -> float:
    """``N0`` assembled as ``N1 - N2`` from the two nonnegative kernels."""
    return N1(u) - N2(u)


def hls_bound_check(u: Field2D) -> tuple[float, float]:
    """``(N2(u), majorant)`` where the majorant replaces ``log(1 + 1/r)`` by ``1/r``.

    Both sides use cell averages on the diagonal, so ``lhs <= rhs`` holds for
    every field, not only for smooth ones.
    """
    return N2(u), quartic(u, "inverse")


def _rel(a: float, b: float, mag: float) -> float:
    # guard against near-cancelling sums with a floor on the absolute magnitude
    return abs(a - b) / max(abs(b), 1e-3 * mag, np.finfo(float).tiny)


def selftest_errors(f: Field2D, g: Field2D) -> dict[str, float]:
    """Relative FFT-vs-direct errors of the convolutions and forms for one field pair.

    Keys: ``conv_<kind>`` (sup norm of the convolved field), ``B0``..``B2``,
    ``N0``..``N2`` for ``u = f`` and ``split`` for ``N0 - (N1 - N2)``.
    """
    grid = f.grid
    h2 = grid.h**2
    usq = f.values**2
    out = {}
    quart = {}
    for i, kind in enumerate(("log", "log1p", "log1p_inv")):
        table = build_kernel(grid, kind)
        fast, slow = convolve_array(g.values, table), direct_convolve(g.values, grid, kind)
        out[f"conv_{kind}"] = float(np.abs(fast - slow).max() / np.abs(slow).max())
        b_fast = h2 * float(np.sum(f.values * fast))
        b_slow = h2 * float(np.sum(f.values * slow))
        out[f"B{i}"] = _rel(b_fast, b_slow, h2 * float(np.sum(np.abs(f.values * slow))))
        q_slow_w = direct_convolve(usq, grid, kind)
        q_slow = h2 * float(np.sum(usq * q_slow_w))
        quart[kind] = q_slow
        out[f"N{i}"] = _rel(quartic(f, kind), q_slow, h2 * float(np.sum(np.abs(usq * q_slow_w))))
    n1, n2 = quart["log1p"], quart["log1p_inv"]
    out["split"] = _rel(N0_split(f), quart["log"], abs(n1) + abs(n2))
    return out
