"""Observation containers and their CSV readers/writers.

Three row formats are understood (UTF-8, ``.`` decimal separator, lines
starting with ``#`` ignored, header row optional)::

    kind,time            failure|survival|prior_guess , positive time
    outcome,predictor    success|failure , real predictor
    count[,predictor]    nonnegative integer count [, real predictor]

Times are plain numbers; keeping units consistent is up to the caller.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .errors import ParseError, ValidationError

__all__ = [
    "ReliabilityData",
    "BinaryOutcomeData",
    "CountData",
    "QueryTarget",
    "load_reliability_csv",
    "load_binary_csv",
    "load_count_csv",
    "dump_reliability_csv",
    "dump_binary_csv",
    "dump_count_csv",
]


def _positive_times(values, name: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not math.isfinite(v) or v <= 0:
            raise ValidationError(f"{name} must be positive and finite, got {v!r}")
    return out


def _positive(value, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {v!r}")
    return v


@dataclass(frozen=True)
class ReliabilityData:
    """Failure times, times without failure, and an optional prior life-time guess."""

    failures: tuple[float, ...] = ()
    survivals: tuple[float, ...] = ()
    prior_guess_t: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "failures", _positive_times(self.failures, "failure time"))
        object.__setattr__(self, "survivals", _positive_times(self.survivals, "survival time"))
        if self.prior_guess_t is not None:
            object.__setattr__(self, "prior_guess_t",
                               _positive(self.prior_guess_t, "prior_guess_t"))
        if not self.failures and not self.survivals:
            raise ValidationError("no observations")

    @property
    def r(self) -> int:
        """Number of failures."""
        return len(self.failures)

    @property
    def n(self) -> int:
        """Number of units observed."""
        return len(self.failures) + len(self.survivals)

    @property
    def total_time(self) -> float:
        """Sum of all observed times, excluding the prior guess."""
        return math.fsum(self.failures) + math.fsum(self.survivals)


@dataclass(frozen=True)
class BinaryOutcomeData:
    """Predictor values of observed successes and failures."""

    success_predictors: tuple[float, ...] = ()
    failure_predictors: tuple[float, ...] = ()

    def __post_init__(self):
        s = tuple(float(v) for v in self.success_predictors)
        f = tuple(float(v) for v in self.failure_predictors)
        if not all(math.isfinite(v) for v in s + f):
            raise ValidationError("predictor values must be finite")
        if not s and not f:
            raise ValidationError("no observations")
        object.__setattr__(self, "success_predictors", s)
        object.__setattr__(self, "failure_predictors", f)

    @property
    def r(self) -> int:
        return len(self.success_predictors)

    @property
    def n(self) -> int:
        return len(self.success_predictors) + len(self.failure_predictors)


@dataclass(frozen=True)
class CountData:
    """Event counts, each observed over a window of length ``window_tau``.

    ``predictors`` is required by the regression model; ``total_time_T`` is
    required by the plain Poisson model, where all counts are pooled.
    """

    counts: tuple[int, ...]
    window_tau: float
    predictors: Optional[tuple[float, ...]] = None
    total_time_T: Optional[float] = None
    prior_guess_t: Optional[float] = None

    def __post_init__(self):
        counts = []
        for c in self.counts:
            if isinstance(c, float) and not c.is_integer():
                raise ValidationError(f"count must be an integer, got {c!r}")
            c = int(c)
            if c < 0:
                raise ValidationError(f"count must be nonnegative, got {c}")
            counts.append(c)
        object.__setattr__(self, "counts", tuple(counts))
        object.__setattr__(self, "window_tau", _positive(self.window_tau, "window_tau"))
        if self.predictors is not None:
            preds = tuple(float(v) for v in self.predictors)
            if len(preds) != len(counts):
                raise ValidationError(
                    f"{len(preds)} predictors for {len(counts)} counts")
            if not all(math.isfinite(v) for v in preds):
                raise ValidationError("predictor values must be finite")
            object.__setattr__(self, "predictors", preds)
        if self.total_time_T is not None:
            object.__setattr__(self, "total_time_T",
                               _positive(self.total_time_T, "total_time_T"))
        if self.prior_guess_t is not None:
            object.__setattr__(self, "prior_guess_t",
                               _positive(self.prior_guess_t, "prior_guess_t"))

    @property
    def n_events(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class QueryTarget:
    """What to ask of a posterior: a mission time, an event count, a predictor value."""

    tau: float
    m: int = 0
    z: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "tau", _positive(self.tau, "tau"))
        if int(self.m) != self.m or self.m < 0:
            raise ValidationError(f"m must be a nonnegative integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if self.z is not None:
            z = float(self.z)
            if not math.isfinite(z):
                raise ValidationError("z must be finite")
            object.__setattr__(self, "z", z)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _rows(text: str, header: Sequence[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)``, skipping comments, blanks and the header."""
    first = True
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([line]))]
        if first:
            first = False
            names = [f.lower() for f in fields]
            if names == list(header) or names == list(header[:1]):
                continue
        yield lineno, fields


def _read(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _float(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", lineno) from None


def parse_reliability(text: str) -> ReliabilityData:
    failures, survivals = [], []
    prior = None
    for lineno, fields in _rows(text, ("kind", "time")):
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        kind, value = fields[0].lower(), _float(fields[1], lineno, "time")
        if not math.isfinite(value) or value <= 0:
            raise ParseError(f"time must be positive and finite, got {fields[1]!r}", lineno)
        if kind == "failure":
            failures.append(value)
        elif kind == "survival":
            survivals.append(value)
        elif kind == "prior_guess":
            if prior is not None:
                raise ParseError("more than one prior_guess row", lineno)
            prior = value
        else:
            raise ParseError(f"unknown kind {fields[0]!r}", lineno)
    if not failures and not survivals:
        raise ValidationError("no observations")
    return ReliabilityData(tuple(failures), tuple(survivals), prior)


def parse_binary(text: str) -> BinaryOutcomeData:
    succ, fail = [], []
    for lineno, fields in _rows(text, ("outcome", "predictor")):
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        outcome, x = fields[0].lower(), _float(fields[1], lineno, "predictor")
        if not math.isfinite(x):
            raise ParseError(f"predictor must be finite, got {fields[1]!r}", lineno)
        if outcome == "success":
            succ.append(x)
        elif outcome == "failure":
            fail.append(x)
        else:
            raise ParseError(f"unknown outcome {fields[0]!r}", lineno)
    if not succ and not fail:
        raise ValidationError("no observations")
    return BinaryOutcomeData(tuple(succ), tuple(fail))


def parse_counts(text: str, tau: float, T: float | None = None,
                 prior_guess_t: float | None = None) -> CountData:
    counts, preds = [], []
    width = None
    for lineno, fields in _rows(text, ("count", "predictor")):
        if width is None:
            width = len(fields)
            if width not in (1, 2):
                raise ParseError(f"expected 1 or 2 fields, got {width}", lineno)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields, got {len(fields)}", lineno)
        try:
            c = int(fields[0])
        except ValueError:
            raise ParseError(f"count {fields[0]!r} is not an integer", lineno) from None
        if c < 0:
            raise ParseError(f"count must be nonnegative, got {c}", lineno)
        counts.append(c)
        if width == 2:
            x = _float(fields[1], lineno, "predictor")
            if not math.isfinite(x):
                raise ParseError(f"predictor must be finite, got {fields[1]!r}", lineno)
            preds.append(x)
    if not counts:
        raise ValidationError("no observations")
    return CountData(tuple(counts), tau, tuple(preds) if width == 2 else None,
                     T, prior_guess_t)


def load_reliability_csv(path: str | os.PathLike) -> ReliabilityData:
    """Read ``kind,time`` rows; see the module docstring."""
    return parse_reliability(_read(path))


def load_binary_csv(path: str | os.PathLike) -> BinaryOutcomeData:
    """Read ``outcome,predictor`` rows."""
    return parse_binary(_read(path))


def load_count_csv(path: str | os.PathLike, tau: float, T: float | None = None,
                   prior_guess_t: float | None = None) -> CountData:
    """Read ``count[,predictor]`` rows; ``tau`` is the per-count window."""
    return parse_counts(_read(path), tau, T, prior_guess_t)


# writers use repr() so that a round trip reproduces every float exactly

def dump_reliability_csv(data: ReliabilityData) -> str:
    lines = ["kind,time"]
    lines += [f"failure,{x!r}" for x in data.failures]
    lines += [f"survival,{y!r}" for y in data.survivals]
    if data.prior_guess_t is not None:
        lines.append(f"prior_guess,{data.prior_guess_t!r}")
    return "\n".join(lines) + "\n"


def dump_binary_csv(data: BinaryOutcomeData) -> str:
    lines = ["outcome,predictor"]
    lines += [f"success,{x!r}" for x in data.success_predictors]
    lines += [f"failure,{y!r}" for y in data.failure_predictors]
    return "\n".join(lines) + "\n"


def dump_count_csv(data: CountData) -> str:
    if data.predictors is None:
        lines = ["count"] + [str(c) for c in data.counts]
    else:
        lines = ["count,predictor"] + [
            f"{c},{x!r}" for c, x in zip(data.counts, data.predictors)]
    return "\n".join(lines) + "\n"
