"""Raw moments, cumulants, and how cumulants add up.

Kurtosis is *full* kurtosis throughout (normal = 3).  Moments of a
probability theta are taken under the normalized parameter posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from .errors import NumericalError, ValidationError
from .posterior import PoissonPosterior, PoissonRegPosterior
from .quadrature import integrate_1d, trapezoid_weights

__all__ = [
    "MomentSet",
    "CumulantSet",
    "moments_to_cumulants",
    "weighted_cumulants",
    "poisson_theta_moments",
    "poisson_theta_moments_quadrature",
    "cumulative_poisson_theta_moments",
    "poisson_regression_theta_moments",
    "weibull_waiting_cumulants",
    "sum_cumulants",
]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class MomentSet:
    """Raw moments ``E[X^j]``, ``j = 1..4``.

    ``notes`` carries diagnostics from the computation (boundary mass etc.).
    """

    m1: float
    m2: float
    m3: float
    m4: float
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("m1", "m2", "m3", "m4"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = self.as_tuple()
        if not all(math.isfinite(v) for v in vals):
            raise NumericalError(f"moments must be finite, got {vals}")
        if self.m2 < self.m1 ** 2 * (1.0 - 1e-12) - 1e-300:
            raise ValidationError(
                f"m2={self.m2!r} < m1^2={self.m1 ** 2!r}: negative variance")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.m1, self.m2, self.m3, self.m4)


@dataclass(frozen=True)
class CumulantSet:
    """Mean, standard deviation, standardized skewness and full kurtosis."""

    mu: float
    sigma: float
    gamma: float
    kappa: float

    def __post_init__(self):
        for name in ("mu", "sigma", "gamma", "kappa"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = self.as_tuple()
        if not all(math.isfinite(v) for v in vals):
            raise NumericalError(f"cumulants must be finite, got {vals}")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be nonnegative, got {self.sigma!r}")
        bound = self.gamma ** 2 + 1.0
        if self.kappa < bound - 1e-9 * max(1.0, bound):
            raise ValidationError(
                f"kurtosis {self.kappa!r} below the attainable bound gamma^2+1={bound!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu, self.sigma, self.gamma, self.kappa)

    @property
    def excess_kurtosis(self) -> float:
        return self.kappa - 3.0


def moments_to_cumulants(m: MomentSet) -> CumulantSet:
    m1, m2, m3, m4 = m.as_tuple()
    var = m2 - m1 * m1
    if not var > 0:
        raise ValidationError("degenerate distribution: variance is zero")
    sigma = math.sqrt(var)
    gamma = (m3 - 3 * m2 * m1 + 2 * m1 ** 3) / sigma ** 3
    kappa = (m4 - 4 * m3 * m1 + 6 * m2 * m1 ** 2 - 3 * m1 ** 4) / var ** 2
    return CumulantSet(m1, sigma, gamma, kappa)


def weighted_cumulants(values, weights) -> CumulantSet:
    """Cumulants of a discrete distribution, from central moments directly.

    Avoids the cancellation in the raw-moment formulas when the spread is
    small compared with the mean.
    """
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    mu = float(w @ x)
    d = x - mu
    var = float(w @ d ** 2)
    if not var > 0:
        raise ValidationError("degenerate distribution: variance is zero")
    sigma = math.sqrt(var)
    return CumulantSet(mu, sigma, float(w @ d ** 3) / sigma ** 3,
                       float(w @ d ** 4) / var ** 2)


# ---------------------------------------------------------------------------
# Poisson model
# ---------------------------------------------------------------------------


def _check_tau_m(tau, m):
    tau = float(tau)
    if not (math.isfinite(tau) and tau > 0):
        raise ValidationError(f"tau must be positive, got {tau!r}")
    if int(m) != m or m < 0:
        raise ValidationError(f"m must be a nonnegative integer, got {m!r}")
    return tau, int(m)


def poisson_theta_moments(p: PoissonPosterior, tau: float, m_events: int) -> MomentSet:
    """Moments of ``theta = (lam tau)^m exp(-lam tau) / m!`` under
    ``lam ~ Gamma(a, S)``, in closed form:

    ``E[theta^j] = Gamma(jm + a) / (Gamma(a) m!^j) * tau^(jm) S^a / (S + j tau)^(jm + a)``.
    """
    tau, m = _check_tau_m(tau, m_events)
    a, S = p.shape, p.T_plus_t
    out = []
    for j in (1, 2, 3, 4):
        d = j * m
        log_val = (special.gammaln(d + a) - special.gammaln(a)
                   - j * special.gammaln(m + 1) + d * math.log(tau)
                   + a * math.log(S) - (d + a) * math.log(S + j * tau))
        out.append(math.exp(log_val))
    return MomentSet(*out)


def _gamma_expectation(p: PoissonPosterior, g, rel_tol: float) -> float:
    """``E[g(lam)]`` under the Gamma posterior by adaptive quadrature."""
    a, S = p.shape, p.T_plus_t
    const = a * math.log(S) - special.gammaln(a)

    def integrand(lam):
        if lam <= 0:
            return 0.0
        return g(lam) * math.exp(const + (a - 1) * math.log(lam) - S * lam)

    mean = a / S
    total = integrate_1d(integrand, 0.0, mean, rel_tol=rel_tol)
    return total + integrate_1d(integrand, mean, math.inf, rel_tol=rel_tol)


def poisson_theta_moments_quadrature(p: PoissonPosterior, tau: float, m_events: int,
                                     rel_tol: float = 1e-11) -> MomentSet:
    """Same moments as :func:`poisson_theta_moments`, by integrating over ``lam``."""
    tau, m = _check_tau_m(tau, m_events)
    log_fact = math.lgamma(m + 1)

    def theta(lam):
        return math.exp(m * math.log(lam * tau) - lam * tau - log_fact)

    return MomentSet(*(_gamma_expectation(p, lambda x, j=j: theta(x) ** j, rel_tol)
                       for j in (1, 2, 3, 4)))


def _tail_moments_exact(a: float, S: float, tau: float, m: int) -> list[float]:
    """Moments of ``theta = 1 - sum_{i<=m} (lam tau)^i e^{-lam tau} / i!``.

    Expands ``theta^j`` binomially; each power of the partial sum is a
    polynomial in ``lam tau`` times ``exp(-l lam tau)``, whose Gamma
    expectation is closed form.  The alternating sum is done in mpmath.
    ``m = -1`` (empty sum) gives ``theta = 1``.
    """
    with mpmath.workdps(40 + 6 * max(m, 0)):
        a_ = mpmath.mpf(a)
        S_ = mpmath.mpf(S)
        tau_ = mpmath.mpf(tau)
        base = [1 / mpmath.factorial(i) for i in range(m + 1)]
        powers = [[mpmath.mpf(1)]]            # coefficients of (partial sum)^l
        for _ in range(4):
            prev = powers[-1]
            nxt = [mpmath.mpf(0)] * (len(prev) + len(base) - 1) if base else []
            for i, c in enumerate(prev):
                for k, b in enumerate(base):
                    nxt[i + k] += c * b
            powers.append(nxt)

        def expect_power(l):
            if l == 0:
                return mpmath.mpf(1)
            total = mpmath.mpf(0)
            rate = S_ + l * tau_
            for d, c in enumerate(powers[l]):
                total += (c * tau_ ** d * mpmath.gamma(a_ + d) / mpmath.gamma(a_)
                          * (S_ / rate) ** a_ / rate ** d)
            return total

        e = [expect_power(l) for l in range(5)]
        out = []
        for j in (1, 2, 3, 4):
            out.append(float(mpmath.fsum((-1) ** l * mpmath.binomial(j, l) * e[l]
                                         for l in range(j + 1))))
    return out


def cumulative_poisson_theta_moments(p: PoissonPosterior, tau: float, m_events: int,
                                     method: str = "exact") -> MomentSet:
    """Moments of the probability of *more than* ``m`` events in ``tau``.

    ``method="exact"`` uses the binomial expansion in extended precision;
    ``method="quadrature"`` integrates the regularized incomplete gamma
    function against the posterior.  The two agree to quadrature accuracy.
    """
    tau, m = _check_tau_m(tau, m_events)
    if method == "exact":
        return MomentSet(*_tail_moments_exact(p.shape, p.T_plus_t, tau, m))
    if method == "quadrature":
        def theta(lam):
            return float(special.gammainc(m + 1, lam * tau))
        return MomentSet(*(_gamma_expectation(p, lambda x, j=j: theta(x) ** j, 1e-11)
                           for j in (1, 2, 3, 4)))
    raise ValidationError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Poisson regression
# ---------------------------------------------------------------------------


def poisson_regression_theta_moments(p: PoissonRegPosterior, z: float, tau: float,
                                     m_events: int) -> MomentSet:
    """Moments of ``theta = (lam tau)^m e^{-lam tau} / m!`` with
    ``lam = exp(b0 + b1 z)``, by trapezoid quadrature over the posterior grid.

    A note is attached when more than 1e-3 of the grid mass sits on the
    rectangle's edge.
    """
    tau, m = _check_tau_m(tau, m_events)
    z = float(z)
    if not math.isfinite(z):
        raise ValidationError("z must be finite")
    g = p.grid
    w1 = trapezoid_weights(g.axis1)
    w2 = trapezoid_weights(g.axis2)
    W = np.outer(w1, w2) * g.values
    total = W.sum()
    if not total > 0:
        raise NumericalError("posterior grid has no mass")
    W = W / total
    eta = g.axis1[:, None] + g.axis2[None, :] * z
    with np.errstate(over="ignore", under="ignore"):
        log_theta = m * (eta + math.log(tau)) - tau * np.exp(eta) - math.lgamma(m + 1)
        theta = np.exp(log_theta)
    moments = [float(np.sum(W * theta ** j)) for j in (1, 2, 3, 4)]
    notes = []
    edge = np.zeros_like(W, dtype=bool)
    if g.values.shape[0] > 1:
        edge[[0, -1], :] = True
    if g.values.shape[1] > 1:
        edge[:, [0, -1]] = True
    edge_mass = float(W[edge].sum())
    if edge_mass > 1e-3:
        notes.append(f"posterior mass on grid boundary is {edge_mass:.3g} (> 1e-3)")
    return MomentSet(*moments, notes=tuple(notes) + tuple(p.warnings))


# ---------------------------------------------------------------------------
# Weibull waiting times
# ---------------------------------------------------------------------------


def _smallest_shape(limit: float = _LOG_FLOAT_MAX - 5.0) -> float:
    """Smallest shape ``k`` for which ``Gamma(1 + 4/k)`` stays representable."""
    lo, hi = 1e-3, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.lgamma(1.0 + 4.0 / mid) > limit:
            lo = mid
        else:
            hi = mid
    return hi


def weibull_waiting_cumulants(k: float, lam: float) -> CumulantSet:
    """Cumulants of one Weibull waiting time with survival ``exp(-(lam t)^k)``.

    Raw moments are ``Gamma(1 + j/k) / lam^j``; the shape-only quantities
    are computed in extended precision at unit rate, then ``mu`` and
    ``sigma`` are rescaled by ``1/lam``.  At ``k = 1`` the result is
    exactly ``(1/lam, 1/lam, 2, 9)``.
    """
    k = float(k)
    lam = float(lam)
    if not (math.isfinite(k) and k > 0 and math.isfinite(lam) and lam > 0):
        raise ValidationError(f"k and lambda must be positive, got k={k!r}, lambda={lam!r}")
    if math.lgamma(1.0 + 4.0 / k) > _LOG_FLOAT_MAX - 5.0:
        raise NumericalError(
            f"shape k={k!r} too small: Gamma(1+4/k) overflows; "
            f"use k >= {_smallest_shape():.4g}")
    with mpmath.workdps(40):
        kk = mpmath.mpf(k)
        g = [mpmath.gamma(1 + mpmath.mpf(j) / kk) for j in range(1, 5)]
        var = g[1] - g[0] ** 2
        c3 = g[2] - 3 * g[1] * g[0] + 2 * g[0] ** 3
        c4 = g[3] - 4 * g[2] * g[0] + 6 * g[1] * g[0] ** 2 - 3 * g[0] ** 4
        mu = float(g[0])
        sigma = float(mpmath.sqrt(var))
        gamma = float(c3 / var ** mpmath.mpf(1.5))
        kappa = float(c4 / var ** 2)
    return CumulantSet(mu / lam, sigma / lam, gamma, kappa)


def sum_cumulants(c: CumulantSet, count: int) -> CumulantSet:
    """Cumulants of the sum of ``count`` independent copies.

    Cumulants add, so the mean scales by N, the sd by sqrt(N), the
    skewness by 1/sqrt(N) and the *excess* kurtosis by 1/N.
    """
    if int(count) != count or count < 1:
        raise ValidationError(f"count must be a positive integer, got {count!r}")
    n = int(count)
    return CumulantSet(n * c.mu, math.sqrt(n) * c.sigma, c.gamma / math.sqrt(n),
                       3.0 + (c.kappa - 3.0) / n)
