import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from betalike import (ConvergenceError, CumulantSet, GridSpec, InfeasibleMomentsError,
                      ReliabilityData, ValidationError, build_exponential, build_weibull,
                      integrate_1d, maxent_positive_density, maxent_theta_density,
                      moments_to_cumulants, poisson_like_pmf, poisson_like_theta_distribution,
                      poisson_theta_moments, solve_maxent, sum_cumulants,
                      weibull_waiting_cumulants)
from betalike.maxent import (MixtureDensity, _lattice_sum_cdf, maxent_positive_solution,
                             waiting_time_mixture)
from betalike.posterior import PoissonPosterior

# Minimizer of log Q for Beta(2,2) cumulants on (-sqrt(5), sqrt(5)), found by
# scipy Nelder-Mead over phi with scipy.integrate.quad for Q.
BETA22_PHI = (0.0, -0.053080255672735416, 0.0, -0.09093652188559684)
BETA22 = CumulantSet(0.5, math.sqrt(0.05), 0.0, 15 / 7)
EXP4 = sum_cumulants(CumulantSet(1, 1, 2, 9), 4)


# ---------------------------------------------------------------- solver

def test_gaussian_target_recovers_gaussian():
    sol = solve_maxent(CumulantSet(0, 1, 0, 3), (-6, 6))
    np.testing.assert_allclose(sol.phi, (0, -0.5, 0, 0), atol=1e-4)
    x = np.linspace(-6, 6, 1201)
    assert np.max(np.abs(sol.pdf_std(x) - stats.norm.pdf(x))) <= 1e-4


def test_symmetric_target_has_no_odd_terms():
    sol = solve_maxent(CumulantSet(0, 1, 0, 1.8), (-3, 3))
    assert abs(sol.phi[0]) <= 1e-8 and abs(sol.phi[2]) <= 1e-8


def test_exponential_sum_target_self_consistent():
    sol = solve_maxent(EXP4, (-6, 6))
    np.testing.assert_allclose(sol.standardized_moments(), (0, 1, 1, 4.5), atol=1e-4)
    # the target itself: standardized moments of Gamma(4, 1) draws
    draws = np.random.default_rng(11).gamma(4.0, size=400_000)
    z = (draws - draws.mean()) / draws.std()
    np.testing.assert_allclose([np.mean(z ** 3), np.mean(z ** 4)], (1, 4.5), atol=0.06)


def test_density_integrates_to_one():
    for c, support in [(EXP4, (-6, 6)), (CumulantSet(0, 1, -0.4, 3.5), (-math.inf, math.inf))]:
        sol = solve_maxent(c, support)
        a, b = sol.support_std
        mass = integrate_1d(sol.pdf_std, max(a, -40), min(b, 40), rel_tol=1e-12,
                            vectorized=True)
        assert mass == pytest.approx(1, abs=1e-8)


def test_solver_is_deterministic():
    a = solve_maxent(CumulantSet(0, 1, 0.7, 4.1), (-5, 7))
    b = solve_maxent(CumulantSet(0, 1, 0.7, 4.1), (-5, 7))
    assert a.phi == b.phi and a.normalizer == b.normalizer


@pytest.mark.parametrize("c,support", [
    (CumulantSet(0, 1, 0, 1), (-6, 6)),            # kappa = gamma^2 + 1: two-point boundary
    (CumulantSet(0, 1, 0, 3), (-0.5, 0.5)),        # unit variance impossible
    (CumulantSet(0, 1, 0, 3), (0.5, 2)),           # mean outside the support
    (CumulantSet(0, 1, 1.9, 4.7), (-6, 1.2)),      # skewed the wrong way for a short right tail
])
def test_infeasible_targets_are_refused(c, support):
    with pytest.raises(InfeasibleMomentsError, match="moment problem infeasible"):
        solve_maxent(c, support)


def test_iteration_cap_reports_residuals():
    with pytest.raises(ConvergenceError, match="residuals") as info:
        solve_maxent(EXP4, (-6, 6), max_iter=1)
    assert len(info.value.estimate) == 4


def test_rounding_floor_is_accepted_not_iterated():
    # large Weibull shapes: residuals bottom out near 4e-10, above the 1e-10 target
    c = sum_cumulants(weibull_waiting_cumulants(6.33648, 1.0), 2)
    sol = maxent_positive_solution(c)
    assert sol.iterations < 50
    assert sol.residual < 1e-8


@given(st.floats(-1.5, 1.5), st.floats(0.3, 8))
def test_every_solve_reproduces_its_targets(gamma, excess):
    kappa = gamma * gamma + 1 + excess
    sol = solve_maxent(CumulantSet(0, 1, gamma, kappa), (-6, 6))
    np.testing.assert_allclose(sol.standardized_moments(), (0, 1, gamma, kappa), atol=1e-4)
    assert sol.residual < 1e-8


# ---------------------------------------------------------------- theta densities

def test_beta_2_2_solution_matches_independent_minimizer():
    d = maxent_theta_density(BETA22)
    np.testing.assert_allclose(d.metadata["phi"], BETA22_PHI, atol=1e-6)
    assert d.mass() == pytest.approx(1, abs=1e-8)


@pytest.mark.xfail(strict=True, reason="an exp-quartic density cannot vanish at the "
                   "endpoints like Beta(2,2); the best fit is 0.11 away in sup-norm")
def test_beta_2_2_within_two_percent():
    d = maxent_theta_density(BETA22)
    exact = 6 * d.theta * (1 - d.theta)
    assert np.max(np.abs(d.density - exact)) <= 2e-2


def test_tiny_sigma_spike_keeps_mean():
    d = maxent_theta_density(CumulantSet(0.5, 1e-4, 0, 3))
    assert d.mean() == pytest.approx(0.5, abs=1e-6)
    assert d.mass() == pytest.approx(1, abs=1e-9)


def test_small_mean_support_is_clipped_to_the_fitted_domain():
    # support runs to 315 sigma; the quartic is only fitted within 40
    c = CumulantSet(0.015625, 0.003125, 0.0, 3.0)
    sol = solve_maxent(c, (-5.0, 315.0))
    assert sol.support_std == (-5.0, 40.0)
    d = maxent_theta_density(c)
    assert np.all(np.isfinite(d.density))
    assert d.mass() == pytest.approx(1, abs=1e-8)
    assert d.mean() == pytest.approx(c.mu, abs=1e-9)


def test_poisson_cumulants_mean_preserved():
    m = poisson_theta_moments(PoissonPosterior(3, 4.0, 1.0), 1.0, 1)
    d = maxent_theta_density(moments_to_cumulants(m))
    assert d.mean() == pytest.approx(m.m1, abs=1e-4)
    np.testing.assert_allclose(d.moments().as_tuple(), m.as_tuple(), rtol=1e-6)


def test_theta_density_preconditions():
    with pytest.raises(ValidationError):
        maxent_theta_density(CumulantSet(1.2, 0.1, 0, 3))
    with pytest.raises(InfeasibleMomentsError):
        maxent_theta_density(CumulantSet(0.5, 0.6, 0, 3))   # sd too large for [0, 1]


# ---------------------------------------------------------------- positive quantities

def test_exponential_sum_density_close_to_gamma_4():
    g = maxent_positive_density(EXP4)
    q = np.linspace(0.5, 10, 951)
    approx = np.interp(q, g.points, g.values)
    assert np.max(np.abs(approx - stats.gamma(4).pdf(q))) <= 3e-2
    assert g.integral() == pytest.approx(1, abs=1e-12)


def test_single_exponential_cdf_at_one():
    sol = maxent_positive_solution(CumulantSet(1, 1, 2, 9))
    assert sol.support[0] == 0.0
    assert float(sol.cdf(1.0)[0]) == pytest.approx(1 - math.exp(-1), abs=3e-2)


def test_symmetric_positive_density():
    c = CumulantSet(10, 1.5, 0, 2.6)
    sol = maxent_positive_solution(c)
    offsets = np.linspace(0, 8.9, 90)
    np.testing.assert_allclose(sol.pdf(10 + offsets), sol.pdf(10 - offsets), atol=1e-8)


def test_positive_requires_positive_mean():
    with pytest.raises(ValidationError):
        maxent_positive_solution(CumulantSet(-1, 1, 0, 3))


# ---------------------------------------------------------------- poisson-like counts

@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_unit_shape_pmf_close_to_poisson(m, s):
    assert poisson_like_pmf(1.0, s, 1.0, m) == pytest.approx(stats.poisson(s).pmf(m), abs=3e-2)


@given(st.floats(0.1, 10), st.floats(0.01, 10), st.floats(0.01, 10))
def test_zero_count_is_exact_survival(k, lam, tau):
    assert poisson_like_pmf(k, lam, tau, 0) == math.exp(-((lam * tau) ** k))


def test_pmf_nearly_normalized():
    total = sum(poisson_like_pmf(2.0, 1.0, 3.0, m) for m in range(21))
    assert total <= 1.05
    assert total == pytest.approx(1, abs=5e-2)


def test_pmf_argument_checks():
    for args in [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, math.inf, 1), (1, 1, 1, -1), (1, 1, 1, 0.5)]:
        with pytest.raises(ValidationError):
            poisson_like_pmf(*args)
    with pytest.raises(ValidationError):
        poisson_like_pmf(1, 1, 1, 1, method="exact")


@pytest.mark.parametrize("count", [1, 3, 6])
def test_lattice_cdf_matches_erlang(count):
    assert _lattice_sum_cdf(1.0, count, 2.5) == pytest.approx(stats.gamma(count).cdf(2.5),
                                                             abs=1e-6)


def test_small_shape_needs_lattice():
    with pytest.raises(InfeasibleMomentsError):
        poisson_like_pmf(0.5, 1.0, 1.0, 1)
    exact_f1 = 1 - math.exp(-1.0)
    assert _lattice_sum_cdf(0.5, 1, 1.0) == pytest.approx(exact_f1, abs=1e-6)
    assert 0 < poisson_like_pmf(0.5, 1.0, 1.0, 1, method="lattice") < exact_f1


# ---------------------------------------------------------------- theta distribution

DATA = ReliabilityData((1.0, 2.0), (3.0,), 1.0)


def test_collapsed_posterior_is_point_mass():
    p = build_weibull(DATA, GridSpec(bounds1=(1.5, 1.5), bounds2=(0.4, 0.4)))
    d, mix = poisson_like_theta_distribution(p, 1.0, 1, grid_n=4)
    expected = poisson_like_pmf(1.5, 0.4, 1.0, 1)
    assert mix.values() == pytest.approx(np.full(16, expected), abs=0)
    assert d.metadata["point_mass"] == expected
    assert d.model_tag == "grid_mixture"


def test_pushforward_weights_and_pinned_shape_mean():
    p = build_weibull(DATA, GridSpec(bounds1=(1 - 1e-9, 1 + 1e-9)))
    d, mix = poisson_like_theta_distribution(p, 1.0, 1)
    assert math.fsum(mix.weights) == pytest.approx(1, abs=1e-12)
    # lambda ~ Gamma(3, 7) at k = 1, so E[lam e^-lam] = 3/8 (7/8)^3
    exact = 3 / 8 * (7 / 8) ** 3
    assert mix.mean() == pytest.approx(exact, abs=3e-2)
    assert d.mean() == pytest.approx(mix.mean(), abs=1e-6)
    assert d.mass() == pytest.approx(1, abs=1e-6)


def test_pushforward_fallback_modes():
    p = build_weibull(ReliabilityData((0.01, 0.3, 5.0, 40.0), (), 1.0),
                      GridSpec(bounds1=(0.4, 0.6), bounds2=(0.2, 0.5)))
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        _, mix = poisson_like_theta_distribution(p, 1.0, 1, grid_n=2)
    assert any("lattice" in n for n in mix.notes)
    with pytest.raises(Exception, match="infeasible"):
        poisson_like_theta_distribution(p, 1.0, 1, grid_n=2, fallback="error")
    with pytest.raises(ValidationError):
        poisson_like_theta_distribution(p, 1.0, 1, grid_n=1)


def test_waiting_time_mixture_at_unit_shape():
    p = build_weibull(DATA, GridSpec(bounds1=(1 - 1e-9, 1 + 1e-9)))
    mix = waiting_time_mixture(p, 2, grid_n=8)
    assert math.fsum(mix.weights) == pytest.approx(1, abs=1e-12)
    cdf = mix.cdf(np.array([0.5, 2.0, 8.0]))
    assert np.all(np.diff(cdf) > 0)
    # P(two exponential waits <= 2) under lambda ~ Gamma(3, 7)
    e = build_exponential(DATA)
    exact = integrate_1d(lambda lam: e.pdf(lam) * stats.gamma(2, scale=1 / lam).cdf(2.0),
                         0, math.inf)
    assert cdf[1] == pytest.approx(exact, abs=3e-2)


def test_mixture_validation():
    with pytest.raises(ValidationError):
        MixtureDensity(np.array([0.5, 0.6]), (0.1, 0.2), "theta_pushforward")
    with pytest.raises(ValidationError):
        MixtureDensity(np.array([1.0]), (0.1,), "histogram")
