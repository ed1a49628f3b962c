import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from betalike import (BinaryOutcomeData, GridSpec, ImproperPosteriorError, NumericalError,
                      ReliabilityData, ThetaDensity, ValidationError, build_exponential,
                      build_logistic, build_weibull, exponential_theta_density,
                      exponential_theta_mean, logistic_theta_density, weibull_theta_density)
from betalike.quadrature import Grid1D
from betalike.theta import EPS_THETA, power_transformed_time, theta_grid

# Posterior means computed once with nested scipy quadrature over the raw
# parameters (inner integral over u = k log(lam) or b0, outer over k or b1),
# independent of the change-of-variable code.
WEIBULL_MEAN_ORACLE = 0.7055338360432913      # failures 1,2; survival 3; t=1; k in [0.2, 6]; tau=1
LOGISTIC_MEAN_ORACLE = 0.911919767760236      # successes 1,.5,-.3; failures -1,.2; b1 in [-15, 20]; z=1


def _exp_posterior(r, T, guess=True):
    """Exponential posterior with r failures and total time T (prior guess T/2)."""
    if guess:
        failures = (T / (2 * r),) * r if r else ()
        survivals = () if r else (T / 2,)
        return build_exponential(ReliabilityData(failures, survivals, T / 2))
    return build_exponential(ReliabilityData((T / r,) * r))


# ---------------------------------------------------------------- grid

def test_theta_grid_shape():
    g = theta_grid()
    assert g.size == 1001
    assert g[0] == EPS_THETA and g[-1] == 1 - EPS_THETA
    assert np.all(np.diff(g) > 0)
    focused = theta_grid(101, focus=(0.4, 0.5), n_focus=50)
    assert np.sum((focused >= 0.4) & (focused <= 0.5)) >= 50


def test_theta_density_rejects_bad_values():
    with pytest.raises(NumericalError):
        ThetaDensity(Grid1D([0.1, 0.5], [1.0, -1.0]), 1.0, "logistic")
    with pytest.raises(ValidationError):
        ThetaDensity(Grid1D([0.1, 0.5], [1.0, 1.0]), 1.0, "beta")


# ---------------------------------------------------------------- logistic

def test_logistic_collapses_to_beta_2_3():
    p = build_logistic(BinaryOutcomeData((0.7, 0.7), (0.7,) * 3))
    d = logistic_theta_density(p, 0.7)
    assert np.max(np.abs(d.density - 12 * d.theta * (1 - d.theta) ** 2)) <= 1e-3
    assert d.mass() == pytest.approx(1, abs=1e-9)


def test_logistic_one_each_is_uniform():
    d = logistic_theta_density(build_logistic(BinaryOutcomeData((0.0,), (0.0,))), 0.0)
    assert np.max(np.abs(d.density - 1)) <= 1e-3


def test_logistic_mean_follows_predictor():
    p = build_logistic(BinaryOutcomeData((1.0, 1.0), (-1.0, -1.0)))
    up, down = logistic_theta_density(p, 1.0), logistic_theta_density(p, -1.0)
    assert up.mean() > down.mean()
    assert up.mean() + down.mean() == pytest.approx(1, abs=1e-9)    # mirror symmetry
    # separated data: mass reaches past the 1e-12 clip and is reported
    assert up.metadata["mass_outside_table"] > 1e-3


def test_logistic_mean_against_two_dimensional_oracle():
    p = build_logistic(BinaryOutcomeData((1.0, 0.5, -0.3), (-1.0, 0.2)),
                       GridSpec(bounds2=(-15.0, 20.0)))
    d = logistic_theta_density(p, 1.0)
    assert d.mean() == pytest.approx(LOGISTIC_MEAN_ORACLE, abs=1e-8)
    assert d.mass() == pytest.approx(1, abs=1e-9)
    assert d.grid.integral() == pytest.approx(1, abs=1e-4)


def test_logistic_improper_cases_refused():
    with pytest.raises(ImproperPosteriorError):
        logistic_theta_density(build_logistic(BinaryOutcomeData((1.0, 2.0), ())), 0.0)
    p = build_logistic(BinaryOutcomeData((1.0,), (2.0,)))
    with pytest.raises(ValidationError):
        logistic_theta_density(p, math.inf)


# ---------------------------------------------------------------- exponential

def test_exponential_mean_example():
    p = build_exponential(ReliabilityData((1.0, 2.0), (3.0,), 1.0))
    d = exponential_theta_density(p, 1.0)
    assert d.mean() == pytest.approx(0.669921875, abs=1e-9)
    assert exponential_theta_mean(p, 1.0) == pytest.approx(0.669921875, rel=1e-14)


def test_exponential_uniform_case():
    p = build_exponential(ReliabilityData((), (0.5,), 0.5))      # r=0, T=1
    d = exponential_theta_density(p, 1.0)
    np.testing.assert_allclose(d.density, 1.0, rtol=1e-12)


@pytest.mark.parametrize("r", [0, 1, 5])
@pytest.mark.parametrize("T", [1.0, 10.0])
@pytest.mark.parametrize("tau", [1.0, 2.0])
def test_exponential_normalized(r, T, tau):
    d = exponential_theta_density(_exp_posterior(r, T), tau)
    assert d.mass() == pytest.approx(1, abs=1e-9)
    # independent check with scipy on the same closed form
    assert integrate.quad(d.pdf, 0, 1, epsabs=1e-13, limit=200)[0] == pytest.approx(1, abs=1e-8)


def test_exponential_mean_limits():
    p = _exp_posterior(0, 1e4)
    assert exponential_theta_mean(p, 1e-12) == pytest.approx(1, abs=1e-12)
    # T >> tau: mean = 1 - (r+1) tau / T + O((tau/T)^2)
    assert exponential_theta_mean(p, 1.0) == pytest.approx(1 - 1e-4, abs=2e-8)


def test_exponential_jeffreys_shape():
    p = _exp_posterior(3, 6.0, guess=False)
    assert p.shape == 3
    d = exponential_theta_density(p, 1.0)
    assert d.mean() == pytest.approx((6 / 7) ** 3, abs=1e-12)


@given(st.integers(0, 30), st.floats(0.5, 200), st.floats(0.01, 50))
def test_exponential_mean_identity(r, T, tau):
    p = _exp_posterior(r, T)
    d = exponential_theta_density(p, tau)
    assert d.mean() == pytest.approx((T / (T + tau)) ** (r + 1), abs=1e-9)


def test_exponential_tau_must_be_positive():
    with pytest.raises(ValidationError):
        exponential_theta_density(_exp_posterior(1, 2.0), 0.0)


# ---------------------------------------------------------------- weibull

def test_power_transformed_time_example():
    assert power_transformed_time(ReliabilityData((), (7.0,)), 2.0) == 49.0
    assert power_transformed_time(ReliabilityData((2.0,), (3.0,), 1.0), 3.0) == 36.0


@pytest.mark.parametrize("data", [
    ReliabilityData((1.0, 2.0), (3.0,), 1.0),
    ReliabilityData((0.5, 1.5, 2.2), (3.0,)),
])
@pytest.mark.parametrize("tau", [0.5, 3.0])
def test_weibull_pinned_shape_is_exponential(data, tau):
    w = build_weibull(data, GridSpec(bounds1=(1 - 1e-9, 1 + 1e-9)))
    dw = weibull_theta_density(w, tau)
    de = exponential_theta_density(build_exponential(data), tau)
    exact = np.array([de.pdf(t) for t in dw.theta])
    assert np.max(np.abs(dw.density - exact)) <= 2e-3


@pytest.mark.parametrize("data", [
    ReliabilityData((1.0, 2.0), (3.0,), 1.0),
    ReliabilityData((0.5, 1.5, 2.2), (3.0,)),
    ReliabilityData((), (1.0, 2.0, 8.0), 2.0),
])
def test_weibull_normalized(data):
    d = weibull_theta_density(build_weibull(data), 1.0)
    assert d.mass() == pytest.approx(1, abs=1e-6)
    assert np.all(d.density >= 0)


def test_weibull_mean_against_nested_quadrature():
    p = build_weibull(ReliabilityData((1.0, 2.0), (3.0,), 1.0), GridSpec(bounds1=(0.2, 6.0)))
    assert weibull_theta_density(p, 1.0).mean() == pytest.approx(WEIBULL_MEAN_ORACLE, abs=1e-9)


def test_weibull_moments_and_tsv():
    p = build_weibull(ReliabilityData((1.0, 2.0), (3.0,), 1.0))
    d = weibull_theta_density(p, 2.0)
    m = d.moments()
    assert 1 > m.m1 > m.m2 > m.m3 > m.m4 > 0
    text = d.to_tsv()
    lines = text.splitlines()
    assert lines[0].startswith("# normalizer=")
    assert lines[1] == "# model=weibull"
    header = lines.index("theta\tdensity")
    assert len(lines) - header - 1 == d.theta.size
    theta, dens = map(float, lines[header + 1].split("\t"))
    assert theta == d.theta[0] and dens == d.density[0]


def test_beta_oracle_via_scipy_for_every_small_case():
    for r in range(1, 4):
        for f in range(1, 4):
            p = build_logistic(BinaryOutcomeData((2.0,) * r, (2.0,) * f))
            d = logistic_theta_density(p, 2.0)
            assert d.mean() == pytest.approx(stats.beta(r, f).mean(), abs=1e-9)
