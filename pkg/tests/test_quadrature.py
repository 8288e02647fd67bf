import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectra.domain import Domain
from spectra.errors import QuadratureEvaluationError
from spectra.quadrature import detect_divergence, integrate, integrate_cells, panel_limit


def test_circle_constant():
    r = integrate(lambda u: np.ones_like(u), "circle", 1e-12)
    assert r.value == pytest.approx(2 * math.pi, abs=1e-12)
    assert not r.diverged


def test_line_lorentzian():
    r = integrate(lambda u: 1.0 / (1.0 + u * u), Domain.LINE, 1e-12)
    assert abs(r.value - math.pi) < 1e-11


def test_gaussian_line():
    r = integrate(lambda u: np.exp(-u * u), "line", 1e-12)
    assert abs(r.value - math.sqrt(math.pi)) < 1e-11


def test_integrable_power_singularity_with_hint():
    # int_{-pi}^{pi} |u|^{-1/2} du = 4 sqrt(pi)
    with np.errstate(divide="ignore"):
        r = integrate(lambda u: np.abs(u) ** -0.5, "circle", 1e-10, hints=((0.0, 0.5),))
    assert abs(r.value - 4 * math.sqrt(math.pi)) < 1e-8


def test_nonintegrable_singularity_is_flagged():
    with np.errstate(divide="ignore"):
        assert detect_divergence(lambda u: 1.0 / u**2, "circle", hints=((0.0, 2.0),))


def test_heavy_tail_divergence_on_line():
    assert detect_divergence(lambda u: 1.0 / (1.0 + np.abs(u)), "line")


def test_convergent_is_not_flagged():
    assert not detect_divergence(lambda u: 1.0 / (1.0 + u * u), "line")


def test_interval_option():
    r = integrate(lambda u: u**2, "line", 1e-12, interval=(0.0, 3.0))
    assert abs(r.value - 9.0) < 1e-11


def test_complex_integrand():
    r = integrate(lambda u: np.exp(2j * u) * (1 + np.cos(u)), "circle", 1e-12)
    assert abs(r.value) < 1e-12


def test_nan_raises():
    with pytest.raises(QuadratureEvaluationError):
        integrate(lambda u: np.full_like(u, np.nan), "circle")


def test_bad_tolerance():
    with pytest.raises(ValueError):
        integrate(lambda u: u, "circle", tol=0)


def test_panel_limit_context():
    with panel_limit(64):
        r = integrate(lambda u: np.cos(40 * u) ** 2, "circle", 1e-13)
    assert r.subdivisions <= 64
    with pytest.raises(ValueError):
        with panel_limit(3):
            pass


def test_cells_match_primitive():
    edges = np.linspace(-2, 3, 41)
    vals, errs = integrate_cells(lambda u: np.exp(u), edges, 1e-12)
    exact = np.exp(edges[1:]) - np.exp(edges[:-1])
    assert np.max(np.abs(vals - exact)) < 1e-13
    assert np.all(errs >= 0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0))
def test_lorentzian_family(width, centre):
    # int dx / ((x-c)^2 + w^2) = pi / w
    r = integrate(lambda u: 1.0 / ((u - centre) ** 2 + width**2), "line", 1e-11)
    assert abs(r.value - math.pi / width) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6))
def test_circle_orthogonality(j, k):
    r = integrate(lambda u: np.exp(1j * (j - k) * u), "circle", 1e-12)
    expected = 2 * math.pi if j == k else 0.0
    assert abs(r.value - expected) < 1e-11
