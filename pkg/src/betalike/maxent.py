"""Fourth-order maximum-entropy densities and Weibull "Poisson-like" counts.

A MaxEnt density with standardized skewness ``gamma`` and full kurtosis
``kappa`` on ``[a, b]`` is ``exp(phi1 x + phi2 x^2 + phi3 x^3 + phi4 x^4) / C``
where ``phi`` minimizes the convex function

    log Q(phi) = log int_a^b exp(phi . g(x)) dx,
    g(x) = (x, x^2 - 1, x^3 - gamma, x^4 - kappa).

The gradient of ``log Q`` is ``E_p[g]`` (the moment residuals) and its
Hessian is ``Cov_p[g]``, so damped Newton converges quickly from the
Gaussian starting point ``(0, -1/2, 0, 0)``.

The probability of ``m`` events in ``tau`` for a renewal process with
Weibull waiting times is ``F_m(tau) - F_{m+1}(tau)``, with ``F_j`` the CDF
of a sum of ``j`` waiting times; ``F_j`` is approximated by the MaxEnt
density carrying the sum's first four cumulants.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy import signal

from .cumulants import CumulantSet, sum_cumulants, weibull_waiting_cumulants, weighted_cumulants
from .errors import (BetalikeError, ConvergenceError, InfeasibleMomentsError,
                     NumericalError, ValidationError)
from .posterior import WeibullPosterior
from .quadrature import Grid1D, gauss_legendre, trapezoid_weights
from .theta import EPS_THETA, ThetaDensity, theta_grid

__all__ = [
    "MaxEntDensity",
    "MixtureDensity",
    "solve_maxent",
    "maxent_theta_density",
    "maxent_positive_solution",
    "maxent_positive_density",
    "poisson_like_pmf",
    "poisson_like_theta_distribution",
    "waiting_time_mixture",
]

# standardized tails beyond this are numerically empty for any feasible
# quartic exponent; infinite supports are clipped here
DOMAIN_LIMIT = 40.0
_PANELS = 200
_ORDER = 16


@dataclass(frozen=True)
class MaxEntDensity:
    """Solved MaxEnt density.

    ``phi`` and ``support_std`` are in standardized units ``x = (y - mu) / sigma``;
    ``normalizer`` is ``C = int exp(phi1 x + ... + phi4 x^4) dx`` over the support.
    ``residual`` is the max-abs moment residual at the solution.
    """

    cumulants: CumulantSet
    phi: tuple[float, float, float, float]
    support_std: tuple[float, float]
    normalizer: float
    log_normalizer: float
    iterations: int
    residual: float

    # standardized scale

    def _exponent(self, x):
        p1, p2, p3, p4 = self.phi
        return x * (p1 + x * (p2 + x * (p3 + x * p4)))

    def logpdf_std(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support_std
        out = self._exponent(x) - self.log_normalizer
        return np.where((x >= a) & (x <= b), out, -np.inf)

    def pdf_std(self, x):
        return np.exp(self.logpdf_std(x))

    def cdf_std(self, x):
        """``P(X <= x)`` by Gauss-Legendre on ``[a, x]``; vectorized over ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a, b = self.support_std
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            if xi <= a:
                out[i] = 0.0
            elif xi >= b:
                out[i] = 1.0
            else:
                nodes, w = gauss_legendre(a, xi, 16, 16)
                out[i] = min(1.0, float(w @ self.pdf_std(nodes)))
        return out

    def standardized_moments(self) -> np.ndarray:
        """``E[x^j]``, ``j = 1..4``, by quadrature."""
        x, w = _domain_nodes(*self.support_std)
        p = w * self.pdf_std(x)
        return np.array([p @ x ** j for j in (1, 2, 3, 4)])

    # original scale ``y = mu + sigma x``

    def pdf(self, y):
        mu, sigma = self.cumulants.mu, self.cumulants.sigma
        return self.pdf_std((np.asarray(y, dtype=float) - mu) / sigma) / sigma

    def cdf(self, y):
        mu, sigma = self.cumulants.mu, self.cumulants.sigma
        return self.cdf_std((np.asarray(y, dtype=float) - mu) / sigma)

    @property
    def support(self) -> tuple[float, float]:
        mu, sigma = self.cumulants.mu, self.cumulants.sigma
        a, b = self.support_std
        return (mu + sigma * a, mu + sigma * b)


Component = Union[MaxEntDensity, float]


@dataclass(frozen=True)
class MixtureDensity:
    """Weighted collection of densities (``density_mixture``) or of point
    values of theta (``theta_pushforward``)."""

    weights: np.ndarray
    components: tuple
    kind: str
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if self.kind not in ("density_mixture", "theta_pushforward"):
            raise ValidationError(f"unknown mixture kind {self.kind!r}")
        if w.ndim != 1 or w.size != len(self.components) or w.size == 0:
            raise ValidationError("need one weight per component")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))

    def values(self) -> np.ndarray:
        if self.kind != "theta_pushforward":
            raise ValidationError("only a pushforward has point values")
        return np.asarray(self.components, dtype=float)

    def mean(self) -> float:
        if self.kind == "theta_pushforward":
            return float(self.weights @ self.values())
        return float(sum(w * c.cumulants.mu for w, c in zip(self.weights, self.components)))

    def moment(self, j: int) -> float:
        if self.kind != "theta_pushforward":
            raise ValidationError("raw moments are only tabulated for pushforwards")
        return float(self.weights @ self.values() ** j)

    def pdf(self, y):
        if self.kind != "density_mixture":
            raise ValidationError("a pushforward of point values has no pdf")
        y = np.asarray(y, dtype=float)
        return sum(w * c.pdf(y) for w, c in zip(self.weights, self.components))

    def cdf(self, y):
        if self.kind == "theta_pushforward":
            y = np.atleast_1d(np.asarray(y, dtype=float))
            v = self.values()
            return np.array([float(self.weights @ (v <= yi)) for yi in y])
        return sum(w * c.cdf(y) for w, c in zip(self.weights, self.components))


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


def _domain_nodes(a: float, b: float):
    return gauss_legendre(max(a, -DOMAIN_LIMIT), min(b, DOMAIN_LIMIT), _PANELS, _ORDER)


def _check_feasible(gamma: float, kappa: float, a: float, b: float) -> None:
    """Interior of the moment space for ``(1, 0, 1, gamma, kappa)`` on ``[a, b]``.

    Requires the Hankel matrix of the moments and the localizing matrix of
    ``(b - x)(x - a)`` to be positive definite.  The first reduces to
    ``kappa > gamma^2 + 1``, the second implies ``-ab > 1``.
    """
    if not a < 0 < b:
        raise InfeasibleMomentsError(
            f"moment problem infeasible: support ({a}, {b}) must contain the mean 0")
    if not kappa > gamma * gamma + 1.0:
        raise InfeasibleMomentsError(
            f"moment problem infeasible: kappa={kappa!r} <= gamma^2 + 1")
    if not -a * b > 1.0:
        raise InfeasibleMomentsError(
            f"moment problem infeasible: unit variance impossible on ({a}, {b})")
    a_, b_ = max(a, -DOMAIN_LIMIT), min(b, DOMAIN_LIMIT)
    m = [1.0, 0.0, 1.0, gamma, kappa]
    loc = np.array([[(a_ + b_) * m[i + j + 1] - m[i + j + 2] - a_ * b_ * m[i + j]
                     for j in range(2)] for i in range(2)])
    if np.linalg.eigvalsh(loc)[0] <= 0:
        raise InfeasibleMomentsError(
            f"moment problem infeasible: (gamma, kappa)=({gamma}, {kappa}) "
            f"not attainable on ({a}, {b})")


def solve_maxent(c: CumulantSet, support_std: Sequence[float] = (-math.inf, math.inf),
                 tol: float = 1e-10, max_iter: int = 500) -> MaxEntDensity:
    """Fit a MaxEnt density with the standardized skewness and kurtosis of ``c``.

    Damped Newton on ``log Q`` with backtracking; deterministic.  Stops when
    every moment residual is below ``tol``.  If progress stalls or the
    iteration cap is reached first, the result is accepted when the residual
    is below 1e-8 and a :class:`ConvergenceError` is raised otherwise.
    """
    a, b = (float(v) for v in support_std)
    gamma, kappa = c.gamma, c.kappa
    _check_feasible(gamma, kappa, a, b)
    x, w = _domain_nodes(a, b)
    logw = np.log(w)
    G = np.stack([x, x * x - 1.0, x ** 3 - gamma, x ** 4 - kappa])
    P = np.stack([x, x * x, x ** 3, x ** 4])

    def evaluate(phi):
        e = phi @ G + logw
        top = e.max()
        q = np.exp(e - top)
        s = q.sum()
        return top + math.log(s), q / s

    phi = np.array([0.0, -0.5, 0.0, 0.0])
    log_q, p = evaluate(phi)
    grad = G @ p
    it = 0
    prev_res = math.inf
    while True:
        res = float(np.max(np.abs(grad)))
        if res < tol:
            break
        # at the rounding floor of the quadrature, steps stop paying off
        if res < 1e-8 and res >= prev_res:
            break
        if it >= max_iter:
            if res < 1e-8:
                break
            raise ConvergenceError(
                f"MaxEnt solver stopped after {max_iter} iterations; "
                f"moment residuals {grad.tolist()}", estimate=phi.tolist(), error=res)
        it += 1
        centered = G - grad[:, None]
        H = (centered * p) @ centered.T
        H += 1e-14 * np.trace(H) * np.eye(4)
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = -grad
        slope = float(grad @ step)
        if slope >= 0:
            step, slope = -grad, -float(grad @ grad)
        t = 1.0
        while t > 1e-14:
            cand = phi + t * step
            cand_log_q, cand_p = evaluate(cand)
            if cand_log_q <= log_q + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            if res < 1e-8:
                break
            raise ConvergenceError(
                f"MaxEnt line search stalled; moment residuals {grad.tolist()}",
                estimate=phi.tolist(), error=res)
        phi, log_q, p = cand, cand_log_q, cand_p
        grad = G @ p
        prev_res = res

    # C excludes the constants carried by g
    shift = -phi[1] - gamma * phi[2] - kappa * phi[3]
    log_c = log_q - shift
    # the fit only constrains the clipped domain, so that is the support
    support = (max(a, -DOMAIN_LIMIT), min(b, DOMAIN_LIMIT))
    return MaxEntDensity(c, tuple(float(v) for v in phi), support,
                         math.exp(log_c) if log_c < 700 else math.inf,
                         float(log_c), it, float(np.max(np.abs(grad))))


# ---------------------------------------------------------------------------
# Densities on the theta and waiting-time axes
# ---------------------------------------------------------------------------


def maxent_theta_density(c: CumulantSet, n: int = 1001, tol: float = 1e-10) -> ThetaDensity:
    """MaxEnt density of a probability with cumulants ``c``, on ``[0, 1]``."""
    mu, sigma = c.mu, c.sigma
    if not 0.0 < mu < 1.0:
        raise ValidationError(f"mean of a probability must lie in (0, 1), got {mu!r}")
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    sol = solve_maxent(c, (-mu / sigma, (1.0 - mu) / sigma), tol=tol)
    theta = theta_grid(n, focus=(mu - 12 * sigma, mu + 12 * sigma), n_focus=2001)
    dens = sol.pdf(theta)

    def pdf(t):
        return float(sol.pdf(t))

    meta = {"mu": mu, "sigma": sigma, "gamma": c.gamma, "kappa": c.kappa,
            "phi": list(sol.phi), "support_std": list(sol.support_std)}
    breaks = tuple(mu + sigma * s for s in (-8.0, -1.0, 0.0, 1.0, 8.0))
    return ThetaDensity(Grid1D(theta, dens), sol.normalizer, "maxent_approx", meta, pdf,
                        breaks=breaks)


def _positive_support(c: CumulantSet) -> tuple[float, float]:
    lo = max(0.0, c.mu - 6.0 * c.sigma)
    return ((lo - c.mu) / c.sigma, 6.0)


def maxent_positive_solution(c: CumulantSet, tol: float = 1e-10) -> MaxEntDensity:
    """MaxEnt fit for a positive quantity, on ``[max(0, mu - 6 sigma), mu + 6 sigma]``."""
    if not c.mu > 0:
        raise ValidationError(f"mean must be positive, got {c.mu!r}")
    if not c.sigma > 0:
        raise ValidationError("sigma must be positive")
    return solve_maxent(c, _positive_support(c), tol=tol)


def maxent_positive_density(c: CumulantSet, n: int = 2001) -> Grid1D:
    """Tabulated :func:`maxent_positive_solution`, normalized on its grid."""
    sol = maxent_positive_solution(c)
    lo, hi = sol.support
    q = np.linspace(lo, hi, n)
    vals = sol.pdf(q)
    return Grid1D(q, vals / float(trapezoid_weights(q) @ vals))


# ---------------------------------------------------------------------------
# Poisson-like counts
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _unit_rate_sum(k: float, count: int) -> MaxEntDensity:
    """MaxEnt fit to the sum of ``count`` unit-rate Weibull waiting times.

    At other rates the sum is this one divided by ``lam``.
    """
    c = sum_cumulants(weibull_waiting_cumulants(k, 1.0), count)
    return maxent_positive_solution(c)


def _sum_cdf(k: float, count: int, scaled_time: float) -> float:
    """``P(sum of count waiting times <= tau)`` with ``scaled_time = lam tau``."""
    return float(_unit_rate_sum(k, count).cdf(scaled_time)[0])


def _lattice_sum_cdf(k: float, count: int, s: float, n: int = 4096) -> float:
    """``P(sum of count unit-rate waiting times <= s)`` by lattice convolution.

    Each waiting time is rounded down and up to a lattice of spacing
    ``s / n`` with exact cell masses; the two rounded sums bracket the true
    CDF and their average is returned.
    """
    edges = np.linspace(0.0, s, n + 1)
    cdf1 = -np.expm1(-(edges ** k))
    q = np.diff(cdf1)                       # mass of cell [i h, (i+1) h)
    dist = q.copy()
    for _ in range(count - 1):
        dist = signal.fftconvolve(dist, q)[: n]
        np.clip(dist, 0.0, None, out=dist)
    lower_bound = float(dist[: max(n - count + 1, 0)].sum())   # sum rounded up
    upper_bound = float(dist.sum())                             # sum rounded down
    return 0.5 * (lower_bound + upper_bound)


def poisson_like_pmf(k: float, lam: float, tau: float, m: int,
                     method: str = "maxent") -> float:
    """Approximate probability of exactly ``m`` events in ``tau``.

    ``method="lattice"`` replaces the MaxEnt CDFs by lattice convolutions of
    the exact waiting-time distribution (slow, but valid for any shape).
    """
    k, lam, tau = float(k), float(lam), float(tau)
    for name, v in (("k", k), ("lambda", lam), ("tau", tau)):
        if not (math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be positive, got {v!r}")
    if int(m) != m or m < 0:
        raise ValidationError(f"m must be a nonnegative integer, got {m!r}")
    m = int(m)
    s = lam * tau
    if m == 0:
        return math.exp(-(s ** k))
    if method == "maxent":
        p = _sum_cdf(k, m, s) - _sum_cdf(k, m + 1, s)
    elif method == "lattice":
        p = _lattice_sum_cdf(k, m, s) - _lattice_sum_cdf(k, m + 1, s)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return min(1.0, max(0.0, p))


def _threads() -> int:
    try:
        n = int(os.environ.get("BETALIKE_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def _cells(p: WeibullPosterior, grid_n: int):
    if int(grid_n) != grid_n or grid_n < 2:
        raise ValidationError(f"grid_n must be an integer >= 2, got {grid_n!r}")
    (k_lo, k_hi), (l_lo, l_hi) = p.support
    ks = k_lo + (np.arange(grid_n) + 0.5) * (k_hi - k_lo) / grid_n
    ls = l_lo + (np.arange(grid_n) + 0.5) * (l_hi - l_lo) / grid_n
    K, L = np.meshgrid(ks, ls, indexing="ij")
    with np.errstate(divide="ignore"):
        logw = p.log_density(K, L)
    logw = logw - np.max(logw)
    w = np.exp(logw).ravel()
    w = w / w.sum()
    return K.ravel(), L.ravel(), w


def poisson_like_theta_distribution(p: WeibullPosterior, tau: float, m: int,
                                    grid_n: int = 32, n: int = 1001,
                                    fallback: str = "lattice"
                                    ) -> tuple[ThetaDensity, MixtureDensity]:
    """Distribution of the probability of ``m`` events in ``tau`` under the
    Weibull posterior.

    The posterior support is cut into ``grid_n`` x ``grid_n`` cells; each
    cell contributes the pmf at its center with its posterior volume as
    weight.  Returns a MaxEnt density fitted to that pushforward and the
    pushforward itself.

    Small shapes (roughly k < 0.8) give waiting times too heavy-tailed for
    any fourth-order MaxEnt density on the truncated support.  With
    ``fallback="lattice"`` those cells use :func:`poisson_like_pmf` with
    ``method="lattice"`` and are counted in the notes; with
    ``fallback="error"`` they fail like any other cell.
    """
    if fallback not in ("lattice", "error"):
        raise ValidationError(f"unknown fallback {fallback!r}")
    ks, ls, w = _cells(p, grid_n)
    notes = list(p.warnings)

    def row(i):
        try:
            return poisson_like_pmf(ks[i], ls[i], tau, m), None
        except InfeasibleMomentsError as exc:
            if fallback == "error":
                return math.nan, exc
        except BetalikeError as exc:
            return math.nan, exc
        try:
            return poisson_like_pmf(ks[i], ls[i], tau, m, method="lattice"), "lattice"
        except BetalikeError as exc:
            return math.nan, exc

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row, range(ks.size)))
    else:
        results = [row(i) for i in range(ks.size)]

    keep = np.ones(ks.size, dtype=bool)
    thetas = np.empty(ks.size)
    n_lattice = 0
    for i, (value, exc) in enumerate(results):
        if exc is None or exc == "lattice":
            thetas[i] = value
            n_lattice += exc == "lattice"
            continue
        if w[i] >= 1e-9:
            raise NumericalError(
                f"cell (k={ks[i]:.6g}, lambda={ls[i]:.6g}) failed: {exc}") from exc
        keep[i] = False
    if n_lattice:
        msg = (f"{n_lattice} cell(s) beyond fourth-order MaxEnt reach "
               "evaluated by lattice convolution")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    if not keep.all():
        dropped = int((~keep).sum())
        msg = f"dropped {dropped} failed cell(s) with weight < 1e-9"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    w = w[keep] / w[keep].sum()
    thetas = thetas[keep]
    mixture = MixtureDensity(w, tuple(float(t) for t in thetas), "theta_pushforward",
                             tuple(notes))

    meta = {"tau": float(tau), "m": int(m), "grid_n": int(grid_n),
            "k_support": tuple(p.support[0]), "lambda_support": tuple(p.support[1])}
    mean = float(w @ thetas)
    spread = float(np.sqrt(w @ (thetas - mean) ** 2))
    if spread <= 1e-12 * max(mean, 1e-300) or spread == 0.0:
        return _spike(mean, meta), mixture
    c = weighted_cumulants(thetas, w)
    density = maxent_theta_density(c, n=n)
    density.metadata.update(meta)
    return density, mixture


def _spike(theta0: float, meta: dict) -> ThetaDensity:
    """Unit-mass triangle of half-width ``delta`` at ``theta0`` (a point mass)."""
    delta = 1e-9
    t0 = min(max(theta0, EPS_THETA + delta), 1.0 - EPS_THETA - delta)
    pts = np.unique(np.concatenate([theta_grid(101), [t0 - delta, t0, t0 + delta]]))
    vals = np.where(pts == t0, 1.0 / delta, 0.0)
    meta = dict(meta, point_mass=float(theta0))
    return ThetaDensity(Grid1D(pts, vals), 1.0, "grid_mixture", meta)


def waiting_time_mixture(p: WeibullPosterior, count: int, grid_n: int = 32) -> MixtureDensity:
    """Posterior-weighted mixture of MaxEnt densities of the sum of ``count``
    waiting times, one per grid cell.

    Its CDF at ``tau`` is the posterior mean of ``F_count(tau)``.
    """
    if int(count) != count or count < 1:
        raise ValidationError(f"count must be a positive integer, got {count!r}")
    ks, ls, w = _cells(p, grid_n)
    comps = []
    for k, lam in zip(ks, ls):
        unit = _unit_rate_sum(float(k), int(count))
        c = unit.cumulants
        scaled = CumulantSet(c.mu / lam, c.sigma / lam, c.gamma, c.kappa)
        comps.append(MaxEntDensity(scaled, unit.phi, unit.support_std, unit.normalizer,
                                   unit.log_normalizer, unit.iterations, unit.residual))
    return MixtureDensity(w, tuple(comps), "density_mixture", tuple(p.warnings))
