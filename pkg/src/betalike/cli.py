"""``betalike`` command line.

Subcommands::

    density       theta density table for a model
    moments       raw moments and cumulants of theta
    maxent        fourth-order MaxEnt fit from cumulants
    select        Exponential vs Weibull model probabilities
    poisson-like  theta distribution for Weibull renewal counts

The JSON summary always goes to stdout; ``--out PREFIX`` also writes
``PREFIX.json`` and, for commands that produce a density, ``PREFIX.tsv``.
Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dataset as ds
from .cumulants import (CumulantSet, MomentSet, cumulative_poisson_theta_moments,
                        moments_to_cumulants, poisson_regression_theta_moments,
                        poisson_theta_moments)
from .errors import NumericalError, ValidationError
from .evidence import DEFAULT_K_RANGE, PriorRange, model_posterior
from .maxent import (maxent_positive_solution, maxent_theta_density, poisson_like_pmf,
                     poisson_like_theta_distribution, solve_maxent)
from .posterior import (GridSpec, build_exponential, build_logistic, build_poisson,
                        build_poisson_regression, build_weibull)
from .report import density_tsv, fmt_float, to_json, write_atomic
from .theta import (ThetaDensity, exponential_theta_density, exponential_theta_moment,
                    logistic_theta_density, weibull_theta_density)

MODELS = ("logistic", "exponential", "weibull", "poisson", "cumulative-poisson",
          "poisson-regression", "poisson-like")
COUNT_MODELS = ("poisson", "cumulative-poisson", "poisson-regression")

# flags each model accepts besides --data (and --out/--tol everywhere)
_ALLOWED = {
    "logistic": {"z", "grid_n"},
    "exponential": {"tau", "prior_guess"},
    "weibull": {"tau", "prior_guess", "grid_n"},
    "poisson": {"tau", "m", "total_time", "prior_guess"},
    "cumulative-poisson": {"tau", "m", "total_time", "prior_guess"},
    "poisson-regression": {"tau", "m", "z", "window", "grid_n"},
    "poisson-like": {"tau", "m", "prior_guess", "grid_n"},
}
_REQUIRED = {
    "logistic": ("z",),
    "exponential": ("tau",),
    "weibull": ("tau",),
    "poisson": ("tau",),
    "cumulative-poisson": ("tau",),
    "poisson-regression": ("tau", "z"),
    "poisson-like": ("tau",),
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with code 1, like any other invalid input."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    model: str
    data: str
    tau: Optional[float] = None
    m: int = 0
    z: Optional[float] = None
    grid_n: Optional[int] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    prior_guess: Optional[float] = None
    total_time: Optional[float] = None
    window: Optional[float] = None
    given: set = field(default_factory=set)

    @classmethod
    def from_args(cls, args, command: str) -> "RunConfig":
        if args.model is None:
            raise ValidationError("--model is required")
        if args.data is None:
            raise ValidationError("--data is required")
        given = {name for name in ("tau", "z", "grid_n", "prior_guess", "total_time",
                                   "window") if getattr(args, name, None) is not None}
        if getattr(args, "m", None) is not None:
            given.add("m")
        cfg = cls(args.model, args.data, args.tau, args.m if args.m is not None else 0,
                  args.z, args.grid_n, args.tol, args.out, args.prior_guess,
                  args.total_time, args.window, given)
        cfg.validate(command)
        return cfg

    def validate(self, command: str) -> None:
        allowed = _ALLOWED[self.model]
        extra = sorted(self.given - allowed)
        if extra:
            flags = ", ".join("--" + e.replace("_", "-") for e in extra)
            raise ValidationError(f"{flags} not valid with --model {self.model}")
        for name in _REQUIRED[self.model]:
            if getattr(self, name) is None:
                raise ValidationError(
                    f"--{name.replace('_', '-')} is required for --model {self.model}")
        if self.tau is not None:
            ds.QueryTarget(self.tau, self.m, self.z)   # validates tau, m, z
        if self.grid_n is not None and self.grid_n < 2:
            raise ValidationError("--grid-n must be at least 2")
        if self.tol is not None and not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValidationError("--tol must be positive")

    @property
    def query(self) -> Optional[ds.QueryTarget]:
        return None if self.tau is None else ds.QueryTarget(self.tau, self.m, self.z)

    def grid_spec(self) -> GridSpec:
        n = self.grid_n if self.grid_n is not None else 201
        return GridSpec(n1=n, n2=n)


# ---------------------------------------------------------------------------
# data loading
# ---------------------------------------------------------------------------


def _reliability(cfg: RunConfig) -> ds.ReliabilityData:
    data = ds.load_reliability_csv(cfg.data)
    if cfg.prior_guess is not None:
        data = ds.ReliabilityData(data.failures, data.survivals, cfg.prior_guess)
    return data


def _counts(cfg: RunConfig) -> ds.CountData:
    window = cfg.window if cfg.window is not None else cfg.tau
    data = ds.load_count_csv(cfg.data, window, cfg.total_time, cfg.prior_guess)
    if cfg.model != "poisson-regression" and data.total_time_T is None:
        # each row is one window of observation
        data = ds.CountData(data.counts, data.window_tau, data.predictors,
                            len(data.counts) * data.window_tau, data.prior_guess_t)
    return data


# ---------------------------------------------------------------------------
# model pipelines
# ---------------------------------------------------------------------------


def _count_moments(cfg: RunConfig) -> tuple[MomentSet, list[str]]:
    data = _counts(cfg)
    notes = []
    if cfg.model == "poisson":
        p = build_poisson(data)
        m = poisson_theta_moments(p, cfg.tau, cfg.m)
        notes.append(f"lambda ~ Gamma({p.shape!r}, {p.rate!r})")
    elif cfg.model == "cumulative-poisson":
        p = build_poisson(data)
        m = cumulative_poisson_theta_moments(p, cfg.tau, cfg.m)
        notes.append(f"lambda ~ Gamma({p.shape!r}, {p.rate!r}); theta = P(N > m)")
    else:
        p = build_poisson_regression(data, cfg.grid_spec())
        m = poisson_regression_theta_moments(p, cfg.z, cfg.tau, cfg.m)
        notes.append(f"support beta0={list(p.support[0])}, beta1={list(p.support[1])}")
    return m, notes + list(m.notes)


def _density(cfg: RunConfig) -> tuple[ThetaDensity, list[str], dict]:
    extra: dict = {}
    if cfg.model == "logistic":
        p = build_logistic(ds.load_binary_csv(cfg.data), cfg.grid_spec())
        notes = [f"support beta0={list(p.support[0])}, beta1={list(p.support[1])}",
                 *p.warnings]
        return logistic_theta_density(p, cfg.z), notes, extra
    if cfg.model == "exponential":
        p = build_exponential(_reliability(cfg))
        notes = [f"lambda ~ Gamma({p.shape!r}, {p.rate!r})"]
        extra["closed_form_mean"] = exponential_theta_moment(p, cfg.tau, 1)
        return exponential_theta_density(p, cfg.tau), notes, extra
    if cfg.model == "weibull":
        p = build_weibull(_reliability(cfg), cfg.grid_spec())
        notes = [f"support k={list(p.support[0])}, lambda={list(p.support[1])}",
                 *p.warnings]
        return weibull_theta_density(p, cfg.tau), notes, extra
    if cfg.model == "poisson-like":
        return _poisson_like(cfg)
    moments, notes = _count_moments(cfg)
    c = moments_to_cumulants(moments)
    extra["moments"] = list(moments.as_tuple())
    return maxent_theta_density(c, tol=_maxent_tol(cfg)), notes, extra


def _poisson_like(cfg: RunConfig):
    # here --grid-n counts cells of the partition, not posterior grid points
    p = build_weibull(_reliability(cfg))
    grid_n = cfg.grid_n if cfg.grid_n is not None else 32
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        density, mix = poisson_like_theta_distribution(p, cfg.tau, cfg.m, grid_n)
    notes = [f"support k={list(p.support[0])}, lambda={list(p.support[1])}",
             *mix.notes]
    extra = {"pushforward": {"cells": len(mix.components), "mean": mix.mean(),
                             "moments": [mix.moment(j) for j in (1, 2, 3, 4)]}}
    return density, notes, extra


def _maxent_tol(cfg) -> float:
    return cfg.tol if cfg.tol is not None else 1e-10


def _summary(density: ThetaDensity) -> dict:
    out = {"model": density.model_tag, "mean": density.mean()}
    try:
        c = density.cumulants()
        out.update(sd=c.sigma, gamma=c.gamma, kappa=c.kappa)
    except ValidationError:     # point mass
        out.update(sd=0.0, gamma=None, kappa=None)
    out["normalizer"] = density.normalizer
    return out


def _emit(summary: dict, cfg_out: Optional[str], tsv: Optional[str] = None) -> None:
    text = to_json(summary)
    if cfg_out:
        if tsv is not None:
            write_atomic(cfg_out + ".tsv", tsv)
        write_atomic(cfg_out + ".json", text)
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_density(args) -> None:
    cfg = RunConfig.from_args(args, "density")
    density, notes, extra = _density(cfg)
    density.check_normalized(1e-6)
    summary = _summary(density)
    summary["model"] = cfg.model
    summary["density_kind"] = density.model_tag
    summary["support_notes"] = notes
    summary["metadata"] = density.metadata
    summary.update(extra)
    _emit(summary, cfg.out, density_tsv(density))


def cmd_moments(args) -> None:
    cfg = RunConfig.from_args(args, "moments")
    notes: list[str] = []
    if cfg.model in COUNT_MODELS:
        moments, notes = _count_moments(cfg)
    elif cfg.model == "exponential":
        p = build_exponential(_reliability(cfg))
        moments = MomentSet(*(exponential_theta_moment(p, cfg.tau, j) for j in (1, 2, 3, 4)))
        notes = [f"lambda ~ Gamma({p.shape!r}, {p.rate!r})"]
    else:
        density, notes, _ = _density(cfg)
        moments = density.moments()
    summary = {"model": cfg.model, "moments": list(moments.as_tuple())}
    try:
        c = moments_to_cumulants(moments)
        summary["cumulants"] = {"mu": c.mu, "sigma": c.sigma, "gamma": c.gamma,
                                "kappa": c.kappa}
    except ValidationError as exc:
        summary["cumulants"] = None
        notes.append(str(exc))
    summary["notes"] = notes
    _emit(summary, cfg.out)


def cmd_maxent(args) -> None:
    if args.cumulants is None:
        raise ValidationError("--cumulants MU SIGMA GAMMA KAPPA is required")
    c = CumulantSet(*args.cumulants)
    tol = args.tol if args.tol is not None else 1e-10
    if args.positive:
        sol = maxent_positive_solution(c, tol=tol)
        lo, hi = sol.support
        q = np.linspace(lo, hi, 2001)
        tsv = "".join([f"# normalizer={fmt_float(sol.normalizer)}\n", "q\tdensity\n"] +
                      [f"{fmt_float(a)}\t{fmt_float(b)}\n" for a, b in zip(q, sol.pdf(q))])
    else:
        density = maxent_theta_density(c, tol=tol)
        density.check_normalized(1e-6)
        sol = solve_maxent(c, tuple(density.metadata["support_std"]), tol=tol)
        tsv = density_tsv(density)
    summary = {"cumulants": {"mu": c.mu, "sigma": c.sigma, "gamma": c.gamma,
                             "kappa": c.kappa},
               "phi": list(sol.phi), "support_std": list(sol.support_std),
               "support": list(sol.support), "normalizer": sol.normalizer,
               "iterations": sol.iterations, "residual": sol.residual,
               "standardized_moments": sol.standardized_moments()}
    _emit(summary, args.out, tsv)


def cmd_select(args) -> None:
    if args.data is None:
        raise ValidationError("--data is required")
    data = ds.load_reliability_csv(args.data)
    k_range = PriorRange(*args.k_range) if args.k_range else DEFAULT_K_RANGE
    prior_m1 = args.prior_m1 if args.prior_m1 is not None else 0.5
    report = model_posterior(data, k_range, prior_m1, 1.0 - prior_m1)
    _emit(report.to_dict(), args.out)


def cmd_poisson_like(args) -> None:
    if args.shape is not None or args.rate is not None:
        if args.shape is None or args.rate is None or args.tau is None:
            raise ValidationError("--shape, --rate and --tau go together")
        m = args.m if args.m is not None else 0
        pmf = poisson_like_pmf(args.shape, args.rate, args.tau, m)
        _emit({"k": args.shape, "lambda": args.rate, "tau": args.tau, "m": m,
               "pmf": pmf}, args.out)
        return
    args.model = "poisson-like"
    cmd_density(args)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, model: bool = True) -> None:
    if model:
        p.add_argument("--model", choices=MODELS)
    p.add_argument("--data", help="input CSV")
    p.add_argument("--tau", type=float, help="mission time / counting window")
    p.add_argument("--m", type=int, help="event count")
    p.add_argument("--z", type=float, help="predictor value")
    p.add_argument("--grid-n", type=int, help="grid points per axis (cells for poisson-like)")
    p.add_argument("--tol", type=float, help="solver tolerance override")
    p.add_argument("--out", help="output prefix for PREFIX.json / PREFIX.tsv")
    p.add_argument("--prior-guess", type=float, help="prior guess t of a life/event time")
    p.add_argument("--total-time", type=float, help="total observation time T (count data)")
    p.add_argument("--window", type=float,
                   help="per-row window of count data (default: --tau)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="betalike",
                     description="Beta-like distributions of probabilities from data.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("density", help="theta density table")
    _common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("moments", help="moments and cumulants of theta")
    _common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("maxent", help="MaxEnt density from cumulants")
    p.add_argument("--cumulants", type=float, nargs=4,
                   metavar=("MU", "SIGMA", "GAMMA", "KAPPA"))
    p.add_argument("--positive", action="store_true",
                   help="positive quantity on [max(0, mu-6sd), mu+6sd] instead of theta")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_maxent)

    p = sub.add_parser("select", help="Exponential vs Weibull model probabilities")
    p.add_argument("--data")
    p.add_argument("--k-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--prior-m1", type=float, help="prior probability of the Exponential model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("poisson-like", help="Weibull renewal count probabilities")
    _common(p, model=False)
    p.add_argument("--shape", type=float, help="single pmf: Weibull shape k")
    p.add_argument("--rate", type=float, help="single pmf: Weibull rate lambda")
    p.set_defaults(func=cmd_poisson_like, model="poisson-like")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:      # usage errors and --help
        return exc.code if isinstance(exc.code, int) else 1
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"betalike: error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ArithmeticError) as exc:
        print(f"betalike: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"betalike: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
