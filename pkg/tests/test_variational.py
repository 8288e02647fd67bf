import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectra.nonadaptive import optimal_psi, sigma2_nonadaptive
from spectra.spectral_model import KineticContinuous, KineticDiscrete, ProcessModel, ZeroFilter, preset_measure
from spectra.variational import (
    MultiplierFunction,
    euler_residual,
    objective,
    objective_value,
    perturbation_check,
    quadratic_expansion,
    random_trig_polynomial,
)


def _exp(s):
    return MultiplierFunction(lambda u: np.exp(1j * s * np.asarray(u)), name=f"e{s}")


def test_objective_at_optimum_equals_error(presets):
    for key, ell in (("ar1", KineticDiscrete(1.0)), ("ou", KineticContinuous(2.0)), ("levy", KineticContinuous(1.0))):
        m = presets[key]
        assert abs(objective(m, ell, optimal_psi(ell)) - sigma2_nonadaptive(m, ell).sigma2) < 1e-10


def test_trivial_multipliers(presets):
    iid = presets["iid"]
    ell = KineticDiscrete(1.0)
    assert abs(objective(iid, ell, lambda u: np.zeros_like(u)) - 1.0) < 1e-12
    assert abs(objective(iid, ell, lambda u: np.ones_like(u)) - 2.0) < 1e-12  # int 4 sin^2(u/2)/(2 pi)
    assert objective(iid, ZeroFilter(), lambda u: np.ones_like(u)) == 0.0


def test_constant_shift_on_line_is_infinite(presets):
    ell = KineticContinuous(2.0)
    shifted = MultiplierFunction(optimal_psi(ell)) + 0.1
    assert objective_value(presets["ou"], ell, shifted).infinite


@pytest.mark.parametrize("key", ["iid", "ar1", "ma1", "ou"])
def test_euler_residuals_vanish(presets, key):
    m = presets[key]
    ell = KineticDiscrete(1.0) if key != "ou" else KineticContinuous(1.0)
    psi = optimal_psi(ell)
    worst = max(abs(euler_residual(m, ell, psi, _exp(s))) for s in range(-10, 11) if s)
    assert worst < 1e-8


def test_euler_residual_detects_non_optimum(presets):
    ell = KineticDiscrete(1.0)
    assert abs(euler_residual(presets["ar1"], ell, lambda u: np.zeros_like(u), _exp(1))) > 0.1


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 0.1, -0.01]))
def test_quadratic_expansion_circle(seed, eps):
    m = preset_measure(ProcessModel("ar1", rho=0.5))
    ell = KineticDiscrete(1.0)
    h = random_trig_polynomial(np.random.Generator(np.random.Philox(seed)), "circle")
    lhs, rhs, err = quadratic_expansion(m, ell, optimal_psi(ell), h, eps)
    assert abs(lhs - rhs) <= max(err, 3e-11)
    assert lhs >= -3e-11


def test_quadratic_expansion_infinite_measure(presets):
    ell = KineticContinuous(1.0)
    rng = np.random.Generator(np.random.Philox(5))
    for _ in range(3):
        h = random_trig_polynomial(rng, "line", anchor_zero=True)
        lhs, rhs, err = quadratic_expansion(presets["fbm75"], ell, optimal_psi(ell), h, 0.1)
        assert abs(lhs - rhs) <= max(err, 3e-11)


def test_anchor_zero_vanishes_at_origin(rng):
    h = random_trig_polynomial(rng, "circle", anchor_zero=True)
    assert abs(h(np.array([0.0]))[0]) == 0.0
    assert abs(h(np.array([1e-12]))[0]) < 1e-9


def test_perturbation_check_passes_at_optimum(presets):
    ell = KineticDiscrete(1.0)
    out = perturbation_check(presets["ar1"], ell, optimal_psi(ell), trials=20)
    assert out.passed and out.failures == 0 and out.worst_margin >= 0


def test_perturbation_check_rejects_suboptimal(presets):
    ell = KineticDiscrete(1.0)
    bad = MultiplierFunction(lambda u: 0.5 * optimal_psi(ell)(u))
    assert not perturbation_check(presets["ar1"], ell, bad, trials=20).passed


def test_perturbation_check_infinite_base_fails(presets):
    ell = KineticContinuous(2.0)
    out = perturbation_check(presets["ou"], ell, MultiplierFunction(optimal_psi(ell)) + 0.1, trials=5)
    assert not out.passed and math.isinf(out.base)


def test_perturbation_check_is_reproducible(presets):
    ell = KineticDiscrete(1.0)
    a = perturbation_check(presets["ma1"], ell, optimal_psi(ell), trials=5, seed=9)
    b = perturbation_check(presets["ma1"], ell, optimal_psi(ell), trials=5, seed=9)
    assert a == b
