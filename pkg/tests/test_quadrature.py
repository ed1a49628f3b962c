import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from betalike import (ConvergenceError, Grid1D, Grid2D, NumericalError, ValidationError,
                      integrate_1d, marginalize, normalize_grid)
from betalike.quadrature import gauss_legendre, trapezoid_weights


def test_linear():
    assert integrate_1d(lambda x: x, 0, 1) == pytest.approx(0.5, abs=1e-15)


def test_exponential_tail():
    assert integrate_1d(lambda x: math.exp(-x), 0, 40) == pytest.approx(
        1 - math.exp(-40), rel=1e-12)


def test_singular_gamma_integral():
    # u = -log(theta) turns this into Gamma(3) / 7^3
    f = lambda t: math.log(t) ** 2 / t * t ** 7
    assert integrate_1d(f, 0, 1, rel_tol=1e-12) == pytest.approx(2 / 343, rel=1e-10)


def test_endpoint_singularity():
    assert integrate_1d(lambda x: x ** -0.5, 0, 1, rel_tol=1e-10) == pytest.approx(2, rel=1e-9)


def test_infinite_limits():
    gauss = lambda x: math.exp(-x * x / 2)
    assert integrate_1d(gauss, -math.inf, math.inf) == pytest.approx(math.sqrt(2 * math.pi),
                                                                      rel=1e-10)
    assert integrate_1d(lambda x: math.exp(-x), 0, math.inf) == pytest.approx(1, rel=1e-10)


def test_reversed_and_empty_interval():
    assert integrate_1d(lambda x: x, 1, 0) == pytest.approx(-0.5)
    assert integrate_1d(lambda x: x, 2, 2) == 0.0


def test_vectorized_matches_scalar():
    f = lambda x: np.sin(x) ** 2
    a = integrate_1d(f, 0, 3, vectorized=True)
    b = integrate_1d(lambda x: math.sin(x) ** 2, 0, 3)
    assert a == pytest.approx(b, rel=1e-14)


def test_nonconvergence_carries_estimate():
    with pytest.raises(ConvergenceError) as info:
        integrate_1d(lambda x: math.sin(1 / x) / x, 1e-9, 1, rel_tol=1e-14,
                     max_subdivisions=5)
    assert info.value.estimate is not None
    assert info.value.error is not None


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=14),
       st.floats(-3, 3), st.floats(0.1, 3))
def test_polynomials_exact(coeffs, a, width):
    b = a + width
    anti = P.polyint(coeffs)
    exact = P.polyval(b, anti) - P.polyval(a, anti)
    got = integrate_1d(lambda x: P.polyval(x, coeffs), a, b, vectorized=True)
    scale = sum(abs(c) for c in coeffs) * max(1, abs(a), abs(b)) ** len(coeffs) * width
    assert abs(got - exact) <= 1e-13 * scale


def test_gauss_legendre_exact_degree():
    x, w = gauss_legendre(0, 2, panels=3, order=4)
    assert w @ x ** 7 == pytest.approx(2 ** 8 / 8, rel=1e-13)


def test_trapezoid_weights():
    assert trapezoid_weights([0, 1, 3]).tolist() == [0.5, 1.5, 1.0]
    assert trapezoid_weights([5]).tolist() == [1.0]   # point mass


def test_normalize_constant_grid():
    g, c = normalize_grid(Grid1D([0, 0.5, 1], [2, 2, 2]))
    assert c == 2
    np.testing.assert_allclose(g.values, [1, 1, 1])


def test_normalize_spike():
    pts = np.linspace(0, 1, 11)
    vals = np.zeros(11)
    vals[4] = 3.0
    g, c = normalize_grid(Grid1D(pts, vals))
    assert c == pytest.approx(0.3)
    assert g.integral() == pytest.approx(1, abs=1e-12)
    assert np.count_nonzero(g.values) == 1


@pytest.mark.parametrize("vals,err", [
    ([1, math.nan, 1], NumericalError),
    ([0, 0, 0], NumericalError),
    ([1, -1, 1], ValidationError),
])
def test_normalize_rejects(vals, err):
    with pytest.raises(err):
        normalize_grid(Grid1D([0, 1, 2], vals))


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid1D([0, 0, 1], [1, 1, 1])
    with pytest.raises(ValidationError):
        Grid1D([0, 1], [1, 1, 1])
    with pytest.raises(ValidationError):
        Grid2D([0, 1], [0, 1], np.ones((3, 2)))


def test_marginalize_separable():
    a = np.linspace(-2, 2, 41)
    b = np.linspace(0, 1, 21)
    f, h = np.exp(-a ** 2), 1 + b
    g = Grid2D(a, b, np.outer(f, h))
    marg = marginalize(g, 2)
    np.testing.assert_allclose(marg.values / f, trapezoid_weights(b) @ h, rtol=1e-14)
    assert marginalize(g, 1).points.tolist() == b.tolist()
    with pytest.raises(ValidationError):
        marginalize(g, 3)


def test_marginalize_constant_unit_square():
    g = Grid2D(np.linspace(0, 1, 5), np.linspace(0, 1, 7), np.full((5, 7), 4.0))
    marg, _ = normalize_grid(marginalize(g, 1))
    np.testing.assert_allclose(marg.values, 1.0)


def test_marginal_of_gaussian():
    x = np.linspace(-8, 8, 321)
    y = np.linspace(-8, 8, 301)
    rho = 0.6
    X, Y = np.meshgrid(x, y, indexing="ij")
    q = (X ** 2 - 2 * rho * X * Y + Y ** 2) / (1 - rho ** 2)
    g, _ = normalize_grid(Grid2D(x, y, np.exp(-q / 2)))
    marg = marginalize(g, 2)
    exact = np.exp(-x ** 2 / 2) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(marg.values - exact)) <= 1e-4


@given(st.floats(1e-3, 1e3))
def test_marginalize_commutes_with_scaling(c):
    rng = np.random.default_rng(0)
    g = Grid2D(np.linspace(0, 1, 9), np.geomspace(1, 5, 7), rng.random((9, 7)))
    scaled = Grid2D(g.axis1, g.axis2, c * g.values)
    for axis in (1, 2):
        np.testing.assert_allclose(marginalize(scaled, axis).values,
                                   c * marginalize(g, axis).values, rtol=1e-13)
        assert marginalize(g, axis).integral() == pytest.approx(g.integral(), rel=1e-10)


@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-100, 1e6)), min_size=2, max_size=30))
def test_normalize_idempotent(vals):
    if sum(vals) == 0:
        return
    g = Grid1D(np.arange(len(vals), dtype=float), vals)
    once, _ = normalize_grid(g)
    twice, c = normalize_grid(once)
    assert once.integral() == pytest.approx(1, abs=1e-10)
    assert c == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(twice.values, once.values, rtol=1e-12)
