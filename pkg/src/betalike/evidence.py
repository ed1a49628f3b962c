"""Evidence-based choice between the Exponential and Weibull failure models.

Both models put the improper Jeffreys prior ``1/lam`` on the rate; its
normalizer cancels in the model posterior, as do ``(r-1)!`` and the data
differentials.  The Weibull shape prior ``1/k`` must be proper, because
its normalizer ``C_k = 1 / log(hi/lo)`` does not cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .dataset import ReliabilityData
from .errors import ImproperPosteriorError, ImproperPriorError, ValidationError
from .quadrature import integrate_1d
from .report import to_json

__all__ = [
    "PriorRange",
    "EvidenceReport",
    "DEFAULT_K_RANGE",
    "exponential_evidence_core",
    "weibull_evidence_core",
    "model_posterior",
]

SHARED_CONSTANTS = "C_lambda,(r-1)!,prod dx_i"
MODEL_NAMES = ("exponential", "weibull")


@dataclass(frozen=True)
class PriorRange:
    """Range ``[lo, hi]`` of a scale-invariant ``1/k`` prior."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValidationError("prior range must not be NaN")
        if not hi > lo:
            raise ValidationError(f"prior range needs hi > lo, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def proper(self) -> bool:
        return self.lo > 0 and math.isfinite(self.hi)

    @property
    def log_normalizer(self) -> float:
        """``log C = -log(log hi - log lo)``."""
        if not self.proper:
            raise ImproperPriorError(
                f"k prior range [{self.lo}, {self.hi}] is improper: its normalizer "
                "C_k is zero and does not cancel, so the Weibull model would get "
                "posterior probability 0 whatever the data; give 0 < lo < hi < inf")
        return -math.log(math.log(self.hi) - math.log(self.lo))


DEFAULT_K_RANGE = PriorRange(0.2, 5.0)


def _require_failures(data: ReliabilityData) -> int:
    if data.r < 1:
        raise ImproperPosteriorError(
            "evidence diverges under Jeffreys prior: no failures observed")
    return data.r


def exponential_evidence_core(data: ReliabilityData) -> float:
    """``log[(r-1)! / (sum x + sum y)^r]``.

    A prior life-time guess in ``data`` is ignored: model comparison uses
    the Jeffreys rate prior.
    """
    r = _require_failures(data)
    return math.lgamma(r) - r * math.log(data.total_time)


def _weibull_log_integrand(data: ReliabilityData):
    r = data.r
    log_x = np.log(np.asarray(data.failures, dtype=float))
    log_t = np.log(np.asarray(data.failures + data.survivals, dtype=float))
    sum_log_x = float(log_x.sum())

    def h(k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        log_total = special.logsumexp(np.outer(k, log_t), axis=1)
        return (r - 2) * np.log(k) + (k - 1.0) * sum_log_x - r * log_total

    return h


def weibull_evidence_core(data: ReliabilityData, k_range: PriorRange = DEFAULT_K_RANGE,
                          rel_tol: float = 1e-8) -> float:
    """``log[C_k (r-1)! int k^(r-2) prod x^(k-1) / (sum x^k + sum y^k)^r dk]``.

    The integrand is handled in log space and rescaled by its maximum, so
    large data sets do not underflow.
    """
    r = _require_failures(data)
    log_c = k_range.log_normalizer
    h = _weibull_log_integrand(data)
    lo, hi = k_range.lo, k_range.hi
    probe = np.geomspace(lo, hi, 2001)
    vals = h(probe)
    i = int(np.argmax(vals))
    peak = float(vals[i])

    def f(k):
        return np.exp(h(k) - peak)

    # split at the peak so the adaptive rule sees it
    pieces = [lo, float(probe[i]), hi] if lo < probe[i] < hi else [lo, hi]
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        total += integrate_1d(f, a, b, rel_tol=rel_tol, vectorized=True)
    return log_c + math.lgamma(r) + peak + math.log(total)


@dataclass(frozen=True)
class EvidenceReport:
    """Model posteriors with the shared evidence factors dropped.

    ``log_evidence_common_dropped[name]`` is the model's log evidence minus
    ``log C_lambda``, ``log (r-1)!`` and ``log prod dx_i``.
    """

    log_evidence_common_dropped: dict
    model_posteriors: dict
    k_range: tuple[float, float]
    priors: dict
    shared_constants_note: str = SHARED_CONSTANTS

    def to_dict(self) -> dict:
        return {
            "models": [{"name": name,
                        "log_core": self.log_evidence_common_dropped[name],
                        "posterior": self.model_posteriors[name]}
                       for name in MODEL_NAMES],
            "k_range": list(self.k_range),
            "cancelled": self.shared_constants_note,
        }

    def to_json(self) -> str:
        return to_json(self.to_dict())


def model_posterior(data: ReliabilityData, k_range: PriorRange = DEFAULT_K_RANGE,
                    prior_m1: float = 0.5, prior_m2: float | None = None) -> EvidenceReport:
    """Posterior probabilities of the Exponential (M1) and Weibull (M2) models."""
    if prior_m2 is None:
        prior_m2 = 1.0 - prior_m1
    p1, p2 = float(prior_m1), float(prior_m2)
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0) or abs(p1 + p2 - 1.0) > 1e-12:
        raise ValidationError(
            f"model priors must be probabilities summing to 1, got {p1}, {p2}")
    shared = math.lgamma(_require_failures(data))
    cores = {"exponential": exponential_evidence_core(data) - shared,
             "weibull": weibull_evidence_core(data, k_range) - shared}
    if p2 == 0.0:
        post1 = 1.0
    elif p1 == 0.0:
        post1 = 0.0
    else:
        l1 = math.log(p1) + cores["exponential"]
        l2 = math.log(p2) + cores["weibull"]
        # compute the smaller posterior directly and take the other as its
        # complement, so tiny probabilities keep full relative precision
        d = l2 - l1
        small = math.exp(-abs(d) - math.log1p(math.exp(-abs(d))))
        post1 = 1.0 - small if d < 0 else small
    posts = {"exponential": post1, "weibull": 1.0 - post1}
    return EvidenceReport(cores, posts, (k_range.lo, k_range.hi),
                          {"exponential": p1, "weibull": p2})
