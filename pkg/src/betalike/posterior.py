"""Parameter posteriors for the logistic, Exponential, Weibull, Poisson and
Poisson-regression models.

One-parameter posteriors are Gamma densities and are kept in closed form.
Two-parameter posteriors are tabulated on a rectangle: the grid holds
``exp(log_density - max)`` so its peak is exactly 1.  Unless overridden,
the rectangle is the mode plus/minus ``n_sd`` Laplace standard deviations
(for rates and shapes, floored at ``POSITIVE_FLOOR`` times the mode).  When the mode runs
into the search box, or the curvature at the mode is not negative
definite, a fallback rectangle is used and a warning string is attached
to the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from .dataset import BinaryOutcomeData, CountData, ReliabilityData
from .errors import ImproperPosteriorError, ValidationError
from .quadrature import Grid2D

__all__ = [
    "GridSpec",
    "LogisticPosterior",
    "ExponentialPosterior",
    "WeibullPosterior",
    "PoissonPosterior",
    "PoissonRegPosterior",
    "build_logistic",
    "build_exponential",
    "build_weibull",
    "build_poisson",
    "build_poisson_regression",
]

Bounds = tuple[float, float]

# lower support edge of a positive parameter, as a fraction of its mode
POSITIVE_FLOOR = 1e-2


@dataclass(frozen=True)
class GridSpec:
    """Resolution and bounds policy for two-parameter posterior grids.

    ``bounds1``/``bounds2`` override the automatic support of the first and
    second parameter.  ``box`` is the search region (natural units) used
    for regression coefficients, and the fallback support when the
    Laplace fit is unusable.
    """

    n1: int = 201
    n2: int = 201
    bounds1: Optional[Bounds] = None
    bounds2: Optional[Bounds] = None
    n_sd: float = 6.0
    box: Bounds = (-20.0, 20.0)

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValidationError("grid resolution must be at least 1")
        for b in (self.bounds1, self.bounds2):
            if b is not None and not (b[0] <= b[1]):
                raise ValidationError(f"bad bounds {b!r}")


# ---------------------------------------------------------------------------
# shared machinery
# ---------------------------------------------------------------------------


def _hessian(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = 1e-4 * np.maximum(np.abs(x), 1e-2)
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * h[i] * h[j])
    return H


@dataclass(frozen=True)
class _Fit:
    mode: np.ndarray
    support: tuple[Bounds, Bounds]
    warnings: tuple[str, ...]


def _laplace_support(logpdf, start, search_box, fallback, positive, spec: GridSpec,
                     names) -> _Fit:
    """Locate the mode and derive the grid rectangle.

    ``logpdf`` takes natural parameters.  Positive parameters are searched
    in log space; ``search_box`` is given in the search coordinates.
    """
    positive = np.asarray(positive, dtype=bool)

    def to_nat(u):
        return np.where(positive, np.exp(u), u)

    def neg(u):
        v = logpdf(*to_nat(u))
        return -v if np.isfinite(v) else 1e300

    res = optimize.minimize(neg, np.asarray(start, dtype=float), method="L-BFGS-B",
                            bounds=search_box)
    u = res.x
    mode = to_nat(u)
    notes = []
    at_edge = [
        min(u[i] - lo, hi - u[i]) <= 1e-6 * (hi - lo)
        for i, (lo, hi) in enumerate(search_box)
    ]
    usable = not any(at_edge)
    if any(at_edge):
        which = ", ".join(n for n, e in zip(names, at_edge) if e)
        notes.append(f"posterior maximum on the search boundary ({which}); "
                     "likelihood may be unbounded")
    sd = None
    if usable:
        H = _hessian(lambda p: logpdf(*p), mode)
        try:
            cov = np.linalg.inv(-H)
            ev = np.linalg.eigvalsh(-H)
            ok = (np.all(np.isfinite(cov)) and ev[0] > 0
                  and ev[0] > 1e-10 * ev[-1])
        except np.linalg.LinAlgError:
            ok = False
        if ok:
            sd = np.sqrt(np.diag(cov))
        else:
            notes.append("curvature at the mode is not negative definite; "
                         "parameters are not all identified")
    support = []
    clipped = []
    for i in range(2):
        if sd is not None:
            lo = mode[i] - spec.n_sd * sd[i]
            hi = mode[i] + spec.n_sd * sd[i]
            box_lo, box_hi = search_box[i]
            if positive[i]:
                # the Jeffreys factor makes the density spike towards 0;
                # a floor keeps the grid on the bulk of the mass
                lo = max(lo, POSITIVE_FLOOR * mode[i])
                box_lo, box_hi = math.exp(box_lo), math.exp(box_hi)
            if lo < box_lo or hi > box_hi:
                clipped.append(names[i])
                lo, hi = max(lo, box_lo), min(hi, box_hi)
        else:
            lo, hi = fallback[i]
        support.append((float(lo), float(hi)))
    if clipped:
        notes.append("Laplace support clipped to the search box ("
                     + ", ".join(clipped) + "); parameter weakly identified")
    if sd is None:
        notes.append("using fallback support " + ", ".join(
            f"{n} in [{lo:.6g}, {hi:.6g}]" for n, (lo, hi) in zip(names, support)))
    if spec.bounds1 is not None:
        support[0] = tuple(map(float, spec.bounds1))
    if spec.bounds2 is not None:
        support[1] = tuple(map(float, spec.bounds2))
    for i in range(2):
        if positive[i] and support[i][0] <= 0:
            raise ValidationError(f"support of {names[i]} must be positive")
    return _Fit(mode, (support[0], support[1]), tuple(notes))


def _tabulate(logpdf, support, spec: GridSpec, names):
    a1 = _axis(support[0], spec.n1)
    a2 = _axis(support[1], spec.n2)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    lp = logpdf(A1, A2)
    if not np.any(np.isfinite(lp)):
        raise ValidationError("posterior is zero everywhere on the support")
    lp = np.where(np.isnan(lp), -np.inf, lp)
    peak = np.max(lp)
    vals = np.exp(lp - peak)
    i, j = np.unravel_index(np.argmax(lp), lp.shape)
    notes = []
    edges = []
    if a1.size > 1 and i in (0, a1.size - 1):
        edges.append(f"{names[0]}={'lower' if i == 0 else 'upper'}")
    if a2.size > 1 and j in (0, a2.size - 1):
        edges.append(f"{names[1]}={'lower' if j == 0 else 'upper'}")
    if edges:
        notes.append("grid maximum on support boundary (" + ", ".join(edges) + ")")
    return Grid2D(a1, a2, vals), float(peak), tuple(notes)


def _axis(bounds: Bounds, n: int) -> np.ndarray:
    lo, hi = bounds
    if n == 1 or lo == hi:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, n)


class _GridPosterior:
    """Mixin: grid-derived summaries shared by the two-parameter posteriors."""

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.grid.values), self.grid.shape)
        return float(self.grid.axis1[i]), float(self.grid.axis2[j])


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------


def _logistic_logpdf(data: BinaryOutcomeData):
    xs = np.asarray(data.success_predictors)
    ys = np.asarray(data.failure_predictors)

    def logpdf(b0, b1):
        b0 = np.asarray(b0, dtype=float)
        b1 = np.asarray(b1, dtype=float)
        out = np.zeros(np.broadcast(b0, b1).shape)
        # log(e^eta / (1 + e^eta)) = -log(1 + e^-eta); overflow-safe via logaddexp
        for x in xs:
            out -= np.logaddexp(0.0, -(b0 + b1 * x))
        for y in ys:
            out -= np.logaddexp(0.0, b0 + b1 * y)
        return out if out.ndim else float(out)

    return logpdf


@dataclass(frozen=True)
class LogisticPosterior(_GridPosterior):
    """Flat-prior posterior of the intercept and slope of a logistic regression."""

    data: BinaryOutcomeData
    support: tuple[Bounds, Bounds]
    grid: Grid2D
    log_peak: float
    mode: tuple[float, float]
    warnings: tuple[str, ...] = ()

    def log_density(self, b0, b1):
        """Unnormalized log posterior; equals the log-likelihood."""
        return _logistic_logpdf(self.data)(b0, b1)


def build_logistic(data: BinaryOutcomeData, grid_spec: GridSpec | None = None
                   ) -> LogisticPosterior:
    spec = grid_spec or GridSpec()
    logpdf = _logistic_logpdf(data)
    box = (spec.box, spec.box)
    fit = _laplace_support(logpdf, [0.0, 0.0], box, box, [False, False], spec,
                           ("beta0", "beta1"))
    grid, peak, notes = _tabulate(logpdf, fit.support, spec, ("beta0", "beta1"))
    return LogisticPosterior(data, fit.support, grid, peak,
                             tuple(map(float, fit.mode)), fit.warnings + notes)


# ---------------------------------------------------------------------------
# Exponential
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialPosterior:
    """Gamma posterior of the Exponential failure rate.

    With a prior life-time guess ``t`` the posterior is
    ``Gamma(r + 1, t + sum(times))``; without one the Jeffreys prior gives
    ``Gamma(r, sum(times))``.  ``T_total`` is the rate in either case.
    """

    r: int
    T_total: float
    shape: float
    informative: bool
    support: Bounds

    @property
    def rate(self) -> float:
        return self.T_total

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def mode(self) -> float:
        return max(self.shape - 1.0, 0.0) / self.rate

    def log_density(self, lam):
        """Unnormalized log density, ``(shape-1) log lam - T lam``."""
        lam = np.asarray(lam, dtype=float)
        return (self.shape - 1.0) * np.log(lam) - self.rate * lam

    def pdf(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(self.log_density(lam) + self.shape * math.log(self.rate)
                      - special.gammaln(self.shape))


def _gamma_support(shape: float, rate: float, n_sd: float = 6.0) -> Bounds:
    mode = max(shape - 1.0, 0.0) / rate
    sd = math.sqrt(shape) / rate
    lo = mode - n_sd * sd
    hi = mode + n_sd * sd
    return (max(lo, 1e-6 * (mode if mode > 0 else shape / rate)), hi)


def build_exponential(data: ReliabilityData) -> ExponentialPosterior:
    r = data.r
    if data.prior_guess_t is not None:
        shape = r + 1.0
        T = data.prior_guess_t + data.total_time
        informative = True
    else:
        if r == 0:
            raise ImproperPosteriorError(
                "posterior improper: Jeffreys prior with no failures")
        shape = float(r)
        T = data.total_time
        informative = False
    if not T > 0:
        raise ValidationError("total observed time must be positive")
    return ExponentialPosterior(r, T, shape, informative, _gamma_support(shape, T))


# ---------------------------------------------------------------------------
# Weibull
# ---------------------------------------------------------------------------


def _weibull_log_from_loglam(data: ReliabilityData):
    """Log posterior as a function of ``(k, log lam)``.

    Every power ``(lam x)^k`` is evaluated as ``exp(k (log lam + log x))``
    so that extreme rates do not overflow before the exponential.
    """
    logx = np.log(np.asarray(data.failures, dtype=float))
    logy = np.log(np.asarray(data.survivals, dtype=float))
    t = data.prior_guess_t
    r = data.r

    def f(k, loglam):
        k = np.asarray(k, dtype=float)
        loglam = np.asarray(loglam, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = r * (np.log(k) + loglam)
            for lx in logx:
                u = loglam + lx
                out = out + (k - 1.0) * u - np.exp(k * u)
            for ly in logy:
                out = out - np.exp(k * (loglam + ly))
            if t is not None:
                u = loglam + math.log(t)
                out = out + (k - 1.0) * u - np.exp(k * u)
            else:
                out = out - np.log(k) - loglam
        return out

    return f


@dataclass(frozen=True)
class WeibullPosterior(_GridPosterior):
    """Posterior of the Weibull shape ``k`` (axis 1) and rate ``lam`` (axis 2).

    The rate is the reciprocal scale: survival is ``exp(-(lam t)^k)``.
    """

    data: ReliabilityData
    support: tuple[Bounds, Bounds]
    grid: Grid2D
    log_peak: float
    mode: tuple[float, float]
    warnings: tuple[str, ...] = ()

    @property
    def informative(self) -> bool:
        return self.data.prior_guess_t is not None

    def log_density(self, k, lam):
        """Unnormalized log posterior; the additive constant is fixed, so
        ``(k=2, lam=1)`` with a single failure at 1 and ``t=1`` gives
        ``log 2 - 2``."""
        with np.errstate(divide="ignore"):
            return self.log_density_loglam(k, np.log(lam))

    def log_density_loglam(self, k, loglam):
        return _weibull_log_from_loglam(self.data)(k, loglam)


def build_weibull(data: ReliabilityData, grid_spec: GridSpec | None = None
                  ) -> WeibullPosterior:
    spec = grid_spec or GridSpec()
    f = _weibull_log_from_loglam(data)

    def logpdf(k, lam):
        with np.errstate(divide="ignore", invalid="ignore"):
            return f(k, np.log(lam))

    times = list(data.failures) + list(data.survivals)
    if data.prior_guess_t is not None:
        times.append(data.prior_guess_t)
    scale = float(np.mean(times))
    lam0 = (data.r + 1.0) / (scale * len(times))
    search = ((math.log(0.02), math.log(50.0)),
              (math.log(1.0 / scale) - 20.0, math.log(1.0 / scale) + 20.0))
    fallback = ((0.1, 10.0), (1e-3 / scale, 10.0 / scale))
    fit = _laplace_support(logpdf, [0.0, math.log(lam0)], search, fallback,
                           [True, True], spec, ("k", "lambda"))
    grid, peak, notes = _tabulate(logpdf, fit.support, spec, ("k", "lambda"))
    return WeibullPosterior(data, fit.support, grid, peak,
                            tuple(map(float, fit.mode)), fit.warnings + notes)


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoissonPosterior:
    """Gamma posterior of a Poisson event rate from ``n`` events in time ``T``.

    ``t`` is the prior guess of the time to an event; when absent the
    Jeffreys prior is used and the shape drops by one.
    """

    n_events: int
    T: float
    t: Optional[float] = None

    def __post_init__(self):
        if self.n_events < 0:
            raise ValidationError("n_events must be nonnegative")
        if not self.T > 0:
            raise ValidationError("T must be positive")
        if self.t is None and self.n_events == 0:
            raise ImproperPosteriorError(
                "posterior improper: Jeffreys prior with no events")
        if self.t is not None and not self.t > 0:
            raise ValidationError("prior guess t must be positive")

    @property
    def T_plus_t(self) -> float:
        return self.T + (self.t or 0.0)

    @property
    def shape(self) -> float:
        return self.n_events + (1.0 if self.t is not None else 0.0)

    @property
    def rate(self) -> float:
        return self.T_plus_t

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def support(self) -> Bounds:
        return _gamma_support(self.shape, self.rate)

    def log_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (self.shape - 1.0) * np.log(lam) - self.rate * lam

    def pdf(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(self.log_density(lam) + self.shape * math.log(self.rate)
                      - special.gammaln(self.shape))

    def merge(self, other: "PoissonPosterior") -> "PoissonPosterior":
        """Pool two data sets observed under the same prior guess."""
        if self.t != other.t:
            raise ValidationError("cannot merge posteriors with different prior guesses")
        return PoissonPosterior(self.n_events + other.n_events, self.T + other.T, self.t)


def build_poisson(data: CountData) -> PoissonPosterior:
    if data.total_time_T is None:
        raise ValidationError("the Poisson model needs the total observation time T")
    return PoissonPosterior(data.n_events, data.total_time_T, data.prior_guess_t)


# ---------------------------------------------------------------------------
# Poisson regression
# ---------------------------------------------------------------------------


def _poisson_reg_logpdf(data: CountData):
    r = np.asarray(data.counts, dtype=float)
    x = np.asarray(data.predictors, dtype=float)
    tau = data.window_tau
    sr = float(r.sum())
    srx = float(r @ x)

    def logpdf(b0, b1):
        b0 = np.asarray(b0, dtype=float)
        b1 = np.asarray(b1, dtype=float)
        out = sr * b0 + srx * b1
        with np.errstate(over="ignore"):
            for xi in x:
                out = out - tau * np.exp(b0 + b1 * xi)
        return out if np.ndim(out) else float(out)

    return logpdf


@dataclass(frozen=True)
class PoissonRegPosterior(_GridPosterior):
    """Flat-prior posterior of log-rate regression coefficients."""

    data: CountData
    support: tuple[Bounds, Bounds]
    grid: Grid2D
    log_peak: float
    mode: tuple[float, float]
    warnings: tuple[str, ...] = ()

    def log_density(self, b0, b1):
        return _poisson_reg_logpdf(self.data)(b0, b1)


def build_poisson_regression(data: CountData, grid_spec: GridSpec | None = None
                             ) -> PoissonRegPosterior:
    if data.predictors is None:
        raise ValidationError("Poisson regression needs a predictor column")
    spec = grid_spec or GridSpec()
    logpdf = _poisson_reg_logpdf(data)
    rate0 = (data.n_events + 0.5) / (len(data.counts) * data.window_tau)
    box = (spec.box, spec.box)
    fit = _laplace_support(logpdf, [math.log(rate0), 0.0], box, box, [False, False],
                           spec, ("beta0", "beta1"))
    grid, peak, notes = _tabulate(logpdf, fit.support, spec, ("beta0", "beta1"))
    return PoissonRegPosterior(data, fit.support, grid, peak,
                               tuple(map(float, fit.mode)), fit.warnings + notes)
