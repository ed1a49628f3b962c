"""Densities of a probability theta obtained by changing variables in a
parameter posterior.

* logistic: ``theta = logistic(b0 + b1 z)``; the intercept is traded for
  theta and the slope is integrated out numerically.
* Exponential: ``theta = exp(-lam tau)``; closed form.
* Weibull: ``theta = exp(-(lam tau)^k)``; the rate is traded for theta and
  the shape is integrated out numerically.

The traded-away parameter is unrestricted (its flat or Jeffreys prior
extends over the whole axis); the integrated parameter ranges over the
posterior's grid support.

The two numerical densities can pile up mass within 1e-12 of an endpoint,
where a table on (0, 1) cannot follow them.  They are therefore
normalized and integrated in a smooth coordinate on the real line
(``logit theta`` and ``log(-log theta)``); the table is a sampling of that
density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import ImproperPosteriorError, NumericalError, ValidationError
from .posterior import ExponentialPosterior, LogisticPosterior, WeibullPosterior
from .quadrature import Grid1D, gauss_legendre, integrate_1d, trapezoid_weights

__all__ = [
    "EPS_THETA",
    "Coordinate",
    "ThetaDensity",
    "theta_grid",
    "logistic_theta_density",
    "exponential_theta_density",
    "exponential_theta_mean",
    "exponential_theta_moment",
    "weibull_theta_density",
    "power_transformed_time",
]

EPS_THETA = 1e-12
MODEL_TAGS = ("logistic", "exponential", "weibull", "maxent_approx", "grid_mixture")


@dataclass(frozen=True)
class Coordinate:
    """``theta = to_theta(u)`` for ``u`` on the real line, and the normalized
    density of ``u``; ``center`` is near the mode of that density."""

    to_theta: Callable
    density: Callable
    center: float

    def integrate(self, f: Callable, lo: float = -math.inf, hi: float = math.inf,
                  rel_tol: float = 1e-11) -> float:
        """Integrate the vectorized ``f(u)`` over ``(lo, hi)``, split at ``center``."""
        c = min(max(self.center, lo), hi)
        return (integrate_1d(f, lo, c, rel_tol=rel_tol, abs_tol=1e-300, vectorized=True)
                + integrate_1d(f, c, hi, rel_tol=rel_tol, abs_tol=1e-300, vectorized=True))


@dataclass(frozen=True)
class ThetaDensity:
    """A normalized density of theta on (0, 1), tabulated on ``grid``.

    ``pdf`` is set when the density has a closed form, ``coordinate`` when
    it is known in a smooth reparametrization (preferred when both are
    set).  :meth:`mass` and :meth:`moment` then integrate adaptively
    instead of using the table, which matters for densities that diverge
    at an endpoint.  ``breaks``
    are interior points where the adaptive integral is split, so that a
    narrow peak cannot hide between quadrature nodes.
    """

    grid: Grid1D
    normalizer: float
    model_tag: str
    metadata: dict = field(default_factory=dict)
    pdf: Optional[Callable] = field(default=None, repr=False, compare=False)
    coordinate: Optional[Coordinate] = field(default=None, repr=False, compare=False)
    breaks: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.model_tag not in MODEL_TAGS:
            raise ValidationError(f"unknown model tag {self.model_tag!r}")
        if np.any(self.grid.values < 0) or not np.all(np.isfinite(self.grid.values)):
            raise NumericalError("density must be finite and nonnegative")

    @property
    def theta(self) -> np.ndarray:
        return self.grid.points

    @property
    def density(self) -> np.ndarray:
        return self.grid.values

    def _integrate_pdf(self, j: int, rel_tol: float) -> float:
        f = self.pdf if j == 0 else (lambda t: t ** j * self.pdf(t))
        points = [b for b in self.breaks if EPS_THETA <= b <= 1.0 - EPS_THETA]
        return integrate_1d(f, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-300, points=points)

    def mass(self) -> float:
        if self.coordinate is not None:
            return self.coordinate.integrate(self.coordinate.density)
        if self.pdf is not None:
            return self._integrate_pdf(0, 1e-10)
        return self.grid.integral()

    def moment(self, j: int) -> float:
        """Raw moment ``E[theta^j]``."""
        if self.coordinate is not None:
            c = self.coordinate
            return c.integrate(lambda u: c.to_theta(u) ** j * c.density(u))
        if self.pdf is not None:
            return self._integrate_pdf(j, 1e-11)
        w = trapezoid_weights(self.theta)
        return float(w @ (self.theta ** j * self.density))

    def mean(self) -> float:
        return self.moment(1)

    def moments(self):
        from .cumulants import MomentSet
        return MomentSet(*(self.moment(j) for j in range(1, 5)))

    def cumulants(self):
        from .cumulants import moments_to_cumulants
        return moments_to_cumulants(self.moments())

    def check_normalized(self, tol: float = 1e-6) -> None:
        m = self.mass()
        if abs(m - 1.0) > tol:
            raise NumericalError(f"density integrates to {m!r}, not 1 within {tol}")

    def to_tsv(self) -> str:
        from .report import density_tsv
        return density_tsv(self)


def theta_grid(n: int = 1001, focus: tuple[float, float] | None = None,
               n_focus: int = 401) -> np.ndarray:
    """Chebyshev-clustered grid on [0, 1], clipped to ``[EPS_THETA, 1 - EPS_THETA]``.

    ``focus`` adds ``n_focus`` evenly spaced points on a sub-interval where
    the density is known to concentrate.
    """
    i = np.arange(n)
    pts = 0.5 * (1.0 - np.cos(np.pi * i / (n - 1)))
    if focus is not None:
        lo = max(focus[0], EPS_THETA)
        hi = min(focus[1], 1.0 - EPS_THETA)
        if hi > lo:
            pts = np.concatenate([pts, np.linspace(lo, hi, n_focus)])
    pts = np.clip(pts, EPS_THETA, 1.0 - EPS_THETA)
    return np.unique(pts)


def _finish(theta, u_of_theta, log_du_dtheta, log_g, to_theta, log_ref, tag,
            metadata, n_focus: int = 2001) -> ThetaDensity:
    """Normalize a density known as ``log_g(u)`` in the coordinate ``u``.

    The table on ``theta`` carries ``g(u(theta)) |du/dtheta|``; mass and
    moments come from adaptive integration over ``u``.
    """
    u = u_of_theta(theta)
    lg = log_g(u)
    if not np.isfinite(np.max(lg)):
        raise NumericalError("marginal density vanished on the whole grid")
    # refine the table evenly in u: lightly over the tails, densely over the bulk
    extra = [theta]
    for depth, count in ((46.0, n_focus // 2), (12.0, n_focus)):
        live = np.flatnonzero(lg > np.max(lg) - depth)
        a, b = max(live[0] - 1, 0), min(live[-1] + 1, u.size - 1)
        extra.append(to_theta(np.linspace(u[a], u[b], count)))
    theta = np.unique(np.clip(np.concatenate(extra), EPS_THETA, 1.0 - EPS_THETA))
    u = u_of_theta(theta)
    lg = log_g(u)
    i = int(np.argmax(lg))
    top = float(lg[i])
    center = float(u[i])

    def unnormalized(v):
        with np.errstate(under="ignore"):
            return np.exp(log_g(np.atleast_1d(np.asarray(v, dtype=float))) - top)

    coord = Coordinate(to_theta, unnormalized, center)
    mass = coord.integrate(unnormalized, rel_tol=1e-11)
    if not (np.isfinite(mass) and mass > 0):
        raise NumericalError("marginal density has no mass")
    u_lo, u_hi = float(min(u[0], u[-1])), float(max(u[0], u[-1]))
    outside = (coord.integrate(unnormalized, -math.inf, u_lo)
               + coord.integrate(unnormalized, u_hi, math.inf)) / mass
    with np.errstate(under="ignore"):
        vals = np.exp(lg + log_du_dtheta(theta) - top) / mass
    normalizer = mass * math.exp(min(top - log_ref, 700.0))
    metadata = dict(metadata, mass_outside_table=float(max(outside, 0.0)))
    coord = Coordinate(to_theta, lambda v: unnormalized(v) / mass, center)
    return ThetaDensity(Grid1D(theta, vals), normalizer, tag, metadata, coordinate=coord)


def _nodes(bounds, panels: int = 64, order: int = 8):
    lo, hi = bounds
    if hi <= lo:
        return np.array([lo]), np.array([1.0])
    return gauss_legendre(lo, hi, panels, order)


def _log_integrate(lp: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``log sum_j w_j exp(lp[:, j])`` row by row, overflow-safe."""
    top = np.max(lp, axis=1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.exp(lp - top) @ w) + top[:, 0]


# ---------------------------------------------------------------------------
# logistic
# ---------------------------------------------------------------------------


def logistic_theta_density(p: LogisticPosterior, z: float, n: int = 1001,
                           panels: int = 64, order: int = 8) -> ThetaDensity:
    """Density of ``theta = P(success | z)``.

    Substitutes ``b0 = logit(theta) - b1 z`` (unit Jacobian in the logit),
    integrates ``b1`` over the posterior's slope support with composite
    Gauss-Legendre, and maps to theta with ``1 / (theta (1 - theta))``.
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValidationError("z must be finite")
    if p.data.r == 0 or p.data.r == p.data.n:
        raise ImproperPosteriorError(
            "posterior improper: flat intercept prior needs at least one "
            "success and one failure")
    theta = theta_grid(n)
    b1, w = _nodes(p.support[1], panels, order)

    def log_g(logit):      # log density of logit(theta), up to a constant
        B1 = np.broadcast_to(b1, (logit.size, b1.size))
        return _log_integrate(p.log_density(logit[:, None] - B1 * z, B1), w)

    meta = {"z": z, "b1_support": tuple(p.support[1]),
            "b0_support": "unbounded (flat prior)"}
    return _finish(theta, special.logit, lambda t: -np.log(t) - np.log1p(-t), log_g,
                   special.expit, p.log_peak, "logistic", meta)


# ---------------------------------------------------------------------------
# Exponential
# ---------------------------------------------------------------------------


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive, got {tau!r}")
    return tau


def _exponential_logpdf(shape: float, ratio: float):
    """log density of ``theta = exp(-lam tau)`` for ``lam ~ Gamma(shape, T)``,
    with ``ratio = T / tau``."""
    const = shape * math.log(ratio) - special.gammaln(shape)

    def logpdf(theta):
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore"):
            lt = np.log(theta)
            return const + (shape - 1.0) * np.log(-lt) + (ratio - 1.0) * lt

    return logpdf


def exponential_theta_density(p: ExponentialPosterior, tau: float,
                              n: int = 1001) -> ThetaDensity:
    """Closed-form density of the probability of surviving past ``tau``.

    ``(T/tau)^a (-log theta)^(a-1) theta^(T/tau - 1) / Gamma(a)``, with
    ``a = r + 1`` under the life-time-guess prior (``a = r`` under Jeffreys).
    """
    tau = _check_tau(tau)
    ratio = p.T_total / tau
    logpdf = _exponential_logpdf(p.shape, ratio)
    lam_lo, lam_hi = p.support
    theta = theta_grid(n, focus=(math.exp(-lam_hi * tau), math.exp(-lam_lo * tau)),
                       n_focus=2001)
    dens = np.exp(logpdf(theta))
    # v = log(lam tau) is log-Gamma distributed: smooth on the whole line even
    # when the theta density piles up below the smallest double
    a = p.shape
    log_const = a * math.log(ratio) - math.lgamma(a)

    def v_density(v):
        with np.errstate(over="ignore"):
            return np.exp(a * v - ratio * np.exp(v) + log_const)

    coord = Coordinate(_survival_of_log_hazard, v_density, math.log(a / ratio))

    def pdf(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return float(np.exp(logpdf(t)))

    log_normalizer = float(p.shape * math.log(ratio) - special.gammaln(p.shape))
    normalizer = math.exp(log_normalizer) if log_normalizer < 700 else math.inf
    meta = {"tau": tau, "r": p.r, "T_total": p.T_total, "shape": p.shape,
            "log_normalizer": log_normalizer}
    return ThetaDensity(Grid1D(theta, dens), normalizer, "exponential", meta, pdf, coord)


def exponential_theta_moment(p: ExponentialPosterior, tau: float, j: int = 1) -> float:
    """``E[theta^j] = (T / (T + j tau))^a``."""
    tau = _check_tau(tau)
    return math.exp(p.shape * (math.log(p.T_total) - math.log(p.T_total + j * tau)))


def exponential_theta_mean(p: ExponentialPosterior, tau: float) -> float:
    """Posterior mean of the survival probability, ``(T / (T + tau))^(r+1)``."""
    return exponential_theta_moment(p, tau, 1)


# ---------------------------------------------------------------------------
# Weibull
# ---------------------------------------------------------------------------


def power_transformed_time(data, kappa: float) -> float:
    """``t^k + sum x_i^k + sum y_j^k``; the prior guess ``t`` counts when present."""
    total = math.fsum(x ** kappa for x in data.failures)
    total += math.fsum(y ** kappa for y in data.survivals)
    if data.prior_guess_t is not None:
        total += data.prior_guess_t ** kappa
    return total


def _survival_of_log_hazard(u):
    with np.errstate(over="ignore"):
        return np.exp(-np.exp(u))


def weibull_theta_density(p: WeibullPosterior, tau: float, n: int = 1001,
                          panels: int = 64, order: int = 8) -> ThetaDensity:
    """Density of ``theta = exp(-(lam tau)^k)`` with the shape integrated out.

    The rate is replaced by ``lam = exp(u / k) / tau`` with
    ``u = log(-log theta)``; ``d lam / du = lam / k``.
    """
    tau = _check_tau(tau)
    theta = theta_grid(n)
    kap, w = _nodes(p.support[0], panels, order)
    if np.any(kap <= 0):
        raise ValidationError("shape support must be positive")
    K = kap[None, :]

    def log_g(u):          # log density of u = log(-log theta), up to a constant
        loglam = u[:, None] / K - math.log(tau)
        lp = p.log_density_loglam(np.broadcast_to(K, loglam.shape), loglam)
        return _log_integrate(lp + loglam - np.log(K), w)    # d lam / du = lam / k

    meta = {"tau": tau, "k_support": tuple(p.support[0]),
            "lambda_support": "unbounded (traded for theta)"}
    return _finish(theta, lambda t: np.log(-np.log(t)),
                   lambda t: -np.log(t) - np.log(-np.log(t)), log_g,
                   _survival_of_log_hazard, p.log_peak, "weibull", meta)
