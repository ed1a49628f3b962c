"""Deterministic 1-D/2-D integration on functions and on tabulated grids.

``integrate_1d`` is a globally adaptive Gauss-Kronrod (7/15) integrator
in the QUADPACK mould.  The grid helpers use the trapezoid rule so that
every normalization in the package can be reproduced by hand.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError

__all__ = [
    "Grid1D",
    "Grid2D",
    "integrate_1d",
    "normalize_grid",
    "marginalize",
    "trapezoid_weights",
    "gauss_legendre",
]

# Kronrod 15-point nodes on [0, 1] (symmetric), largest first; the Gauss
# 7-point nodes are the odd-indexed entries.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point abscissae on [-1, 1] and the matching weight vectors
_X15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5, 7, 9, 11, 13]] = _WG[[0, 1, 2, 3, 2, 1, 0]]

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def _as_axis(points, name: str) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Values tabulated on a strictly increasing set of points."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = _as_axis(self.points, "points")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != pts.shape:
            raise ValidationError(
                f"values has shape {vals.shape}, expected {pts.shape}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def integral(self) -> float:
        return float(trapezoid_weights(self.points) @ self.values)

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class Grid2D:
    """Values tabulated on the tensor product ``axis1 x axis2``.

    ``values[i, j]`` belongs to ``(axis1[i], axis2[j])``.
    """

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        a1 = _as_axis(self.axis1, "axis1")
        a2 = _as_axis(self.axis2, "axis2")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (a1.size, a2.size):
            raise ValidationError(
                f"values has shape {vals.shape}, expected {(a1.size, a2.size)}")
        object.__setattr__(self, "axis1", a1)
        object.__setattr__(self, "axis2", a2)
        object.__setattr__(self, "values", vals)

    def integral(self) -> float:
        w1 = trapezoid_weights(self.axis1)
        w2 = trapezoid_weights(self.axis2)
        return float(w1 @ self.values @ w2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def trapezoid_weights(points) -> np.ndarray:
    """Trapezoid weights for ``points``.

    A single point is treated as a point mass (weight 1) so that collapsed
    grids still define a distribution.
    """
    x = np.asarray(points, dtype=float)
    if x.size == 1:
        return np.ones(1)
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def normalize_grid(g: Grid1D | Grid2D):
    """Scale a nonnegative grid to unit trapezoid mass.

    Returns ``(normalized_grid, C)`` where ``C`` is the mass before scaling.
    """
    vals = g.values
    if not np.all(np.isfinite(vals)):
        raise NumericalError("grid values contain NaN or infinity")
    if np.any(vals < 0):
        raise ValidationError("grid values must be nonnegative")
    mass = g.integral()
    if not np.isfinite(mass) or mass <= 0:
        raise NumericalError(f"grid mass is {mass}; cannot normalize")
    if isinstance(g, Grid1D):
        return Grid1D(g.points, vals / mass), mass
    return Grid2D(g.axis1, g.axis2, vals / mass), mass


def marginalize(g: Grid2D, axis: int) -> Grid1D:
    """Integrate ``g`` along ``axis`` (1 or 2) with the trapezoid rule.

    The result lives on the remaining axis.
    """
    if not np.all(np.isfinite(g.values)):
        raise NumericalError("grid values contain NaN or infinity")
    if axis == 1:
        return Grid1D(g.axis2, trapezoid_weights(g.axis1) @ g.values)
    if axis == 2:
        return Grid1D(g.axis1, g.values @ trapezoid_weights(g.axis2))
    raise ValidationError(f"axis must be 1 or 2, got {axis!r}")


def gauss_legendre(a: float, b: float, panels: int = 1, order: int = 16):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    if not b > a:
        raise ValidationError(f"need a < b, got [{a}, {b}]")
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    return (mid + half * x).ravel(), (half * w).ravel()


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod
# ---------------------------------------------------------------------------


def _map_interval(f, a: float, b: float):
    """Reduce an (a, b) with infinite ends to a finite interval."""
    if math.isfinite(a) and math.isfinite(b):
        return f, a, b
    if math.isfinite(a):  # [a, inf): x = a + u / (1 - u)
        def g(u):
            s = 1.0 - u
            return f(a + u / s) / (s * s)
        return g, 0.0, 1.0
    if math.isfinite(b):  # (-inf, b]: x = b - u / (1 - u)
        def g(u):
            s = 1.0 - u
            return f(b - u / s) / (s * s)
        return g, 0.0, 1.0

    def g(u):  # (-inf, inf): x = u / (1 - u^2)
        s = 1.0 - u * u
        return f(u / s) * (1.0 + u * u) / (s * s)
    return g, -1.0, 1.0


def _gk15(f, a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = f(mid + half * _X15)
    if not np.all(np.isfinite(fx)):
        raise NumericalError(
            f"integrand is not finite on [{a!r}, {b!r}]")
    kron = half * (_W15 @ fx)
    gauss = half * (_W7 @ fx)
    resabs = abs(half) * (_W15 @ np.abs(fx))
    return kron, abs(kron - gauss), resabs


def integrate_1d(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 0.0,
    max_subdivisions: int = 2000,
    vectorized: bool = False,
    points: Sequence[float] = (),
) -> float:
    """Integrate ``f`` over ``(a, b)`` adaptively.

    Endpoints are never evaluated, so integrable endpoint singularities
    are fine.  Infinite limits are mapped onto a finite interval.  Interior
    ``points`` (finite limits only) seed the subdivision, which helps with
    narrow peaks; the error test stays global.  Raises
    :class:`ConvergenceError` (carrying the best estimate and error bound)
    when the tolerance cannot be met within ``max_subdivisions``.
    """
    a = float(a)
    b = float(b)
    if math.isnan(a) or math.isnan(b):
        raise ValidationError("integration limits must not be NaN")
    if a == b:
        return 0.0
    if a > b:
        return -integrate_1d(f, b, a, rel_tol, abs_tol, max_subdivisions,
                             vectorized, points)
    if len(points) and not (math.isfinite(a) and math.isfinite(b)):
        raise ValidationError("interior points need finite integration limits")

    if vectorized:
        fv = lambda x: np.asarray(f(x), dtype=float)  # noqa: E731
    else:
        fv = lambda x: np.array([f(xi) for xi in x], dtype=float)  # noqa: E731
    g, lo, hi = _map_interval(fv, a, b)

    edges = [lo, *sorted({float(p) for p in points if lo < p < hi}), hi]
    # heap entries: (-error, lo, hi, value, resabs)
    heap = []
    for x0, x1 in zip(edges[:-1], edges[1:]):
        value, err, resabs = _gk15(g, x0, x1)
        heap.append((-err, x0, x1, value, resabs))
    heapq.heapify(heap)
    frozen_val = 0.0
    frozen_err = 0.0
    frozen_abs = 0.0
    total_val = math.fsum(h[3] for h in heap)
    total_err = math.fsum(-h[0] for h in heap)
    total_abs = math.fsum(h[4] for h in heap)

    for _ in range(max_subdivisions):
        tol = max(rel_tol * abs(total_val), abs_tol, 50 * _EPS * total_abs)
        if total_err <= tol or not heap:
            break
        neg_err, x0, x1, v, ra = heapq.heappop(heap)
        xm = 0.5 * (x0 + x1)
        if not (x0 < xm < x1) or (x1 - x0) <= 100 * _EPS * max(abs(xm), 1e-300):
            # interval cannot be split further in floating point
            frozen_val += v
            frozen_err += -neg_err
            frozen_abs += ra
        else:
            v1, e1, r1 = _gk15(g, x0, xm)
            v2, e2, r2 = _gk15(g, xm, x1)
            heapq.heappush(heap, (-e1, x0, xm, v1, r1))
            heapq.heappush(heap, (-e2, xm, x1, v2, r2))
        total_val = frozen_val + math.fsum(h[3] for h in heap)
        total_err = frozen_err + math.fsum(-h[0] for h in heap)
        total_abs = frozen_abs + math.fsum(h[4] for h in heap)
    else:
        tol = max(rel_tol * abs(total_val), abs_tol, 50 * _EPS * total_abs)

    if total_err > tol:
        raise ConvergenceError(
            f"integral did not converge: estimate {total_val!r}, "
            f"error bound {total_err!r} > tolerance {tol!r}",
            estimate=total_val,
            error=total_err,
        )
    return float(total_val)
