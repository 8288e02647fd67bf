import math

import numpy as np
import pytest

from spectra.errors import ParameterError, SizingError, UnsupportedError
from spectra.montecarlo import build_grid, estimate_functional, grid_functional, time_domain_experiment
from spectra.nonadaptive import closed_form_sigma2, optimal_psi
from spectra.spectral_model import (
    KineticContinuous,
    KineticDiscrete,
    ProcessModel,
    SpectralMeasure,
    ZeroFilter,
    preset_measure,
)
from spectra.variational import MultiplierFunction, random_trig_polynomial


def test_iid_grid_masses_uniform(presets):
    g = build_grid(presets["iid"], 256)
    assert g.size == 256
    assert np.allclose(g.masses, 1 / 256, rtol=0, atol=1e-15)


def test_ou_grid_window(presets):
    g = build_grid(presets["ou"], 512, 50)
    assert g.masses.sum() >= 0.993
    assert abs(g.tail_mass - (1 - 2 / math.pi * math.atan(100))) < 1e-9


def test_window_too_small(presets):
    with pytest.raises(SizingError):
        build_grid(presets["ou"], 64, 0.5)


def test_small_grid_rejected(presets):
    with pytest.raises(ParameterError):
        build_grid(presets["iid"], 8)


def test_levy_increment_grid_finite(presets):
    g = build_grid(presets["levy"], 128)
    assert g.increments
    assert np.all(np.isfinite(g.masses)) and np.all(g.masses > 0)
    (lo, hi), = g.excluded
    assert lo < 0 < hi and hi - lo < 1e-12


def test_atoms_enter_grid():
    m = SpectralMeasure("circle", atoms=((1.0, 0.25),))
    g = build_grid(m, 32)
    assert 1.0 in g.frequencies and g.masses.sum() == pytest.approx(0.25)


def test_zero_filter_identity_multiplier_is_exactly_zero(presets):
    one = MultiplierFunction(lambda u: np.ones_like(u))
    est = estimate_functional(presets["ar1"], ZeroFilter(), one, n=2000, seed=1)
    assert est.mean == 0.0 and est.std_error == 0.0


def test_zero_multiplier_gives_variance(presets):
    zero = MultiplierFunction(lambda u: np.zeros_like(u))
    est = estimate_functional(presets["iid"], KineticDiscrete(1.0), zero, n=50000, seed=2)
    assert abs(est.mean - 1.0) <= 3 * est.std_error


@pytest.mark.parametrize("key,ell", [
    ("ar1", KineticDiscrete(1.0)),
    ("sums", KineticDiscrete(1.0)),
    ("fbm75", KineticContinuous(1.0)),
    ("levy", KineticContinuous(1.0)),
])
def test_grid_level_unbiased(presets, key, ell):
    est = estimate_functional(presets[key], ell, n=50000, seed=4)
    assert abs(est.mean - est.theory_grid) <= 3 * est.std_error
    assert est.grid_bias_bound < 5e-3


def test_optimality_by_sampling(presets):
    m, ell = presets["ar1"], KineticDiscrete(1.0)
    psi = optimal_psi(ell)
    g = build_grid(m, 256)
    base = estimate_functional(m, ell, psi, n=20000, seed=8, grid=g)
    rng = np.random.Generator(np.random.Philox(3))
    for _ in range(3):
        h = random_trig_polynomial(rng, "circle")
        pert = estimate_functional(m, ell, MultiplierFunction(psi) + h.scaled(0.1), n=20000, seed=9, grid=g)
        assert pert.mean >= base.mean - 3 * math.hypot(base.std_error, pert.std_error)


def test_thread_count_does_not_change_result(presets):
    ell = KineticContinuous(2.0)
    vals = {estimate_functional(presets["ou"], ell, n=30000, seed=5, threads=t, batch=4096).mean for t in (1, 2, 8)}
    assert len(vals) == 1


def test_seed_changes_result(presets):
    ell = KineticContinuous(2.0)
    a = estimate_functional(presets["ou"], ell, n=5000, seed=1).mean
    b = estimate_functional(presets["ou"], ell, n=5000, seed=2).mean
    assert a != b


def test_sample_size_and_seed_validation(presets):
    with pytest.raises(ParameterError):
        estimate_functional(presets["iid"], KineticDiscrete(1.0), n=999)
    with pytest.raises(ParameterError):
        estimate_functional(presets["iid"], KineticDiscrete(1.0), n=1000, seed=-1)


def test_nonintegrable_multiplier_rejected_in_increments_mode(presets):
    zero = MultiplierFunction(lambda u: np.zeros_like(u))
    with pytest.raises(UnsupportedError):
        estimate_functional(presets["levy"], KineticContinuous(1.0), zero, n=1000)


def test_grid_functional_matches_direct_sum(presets):
    g = build_grid(presets["ma1"], 64)
    ell = KineticDiscrete(2.0)
    direct = float(np.sum(g.masses * ell.abs2(g.frequencies) / (1 + ell.abs2(g.frequencies))))
    assert abs(grid_functional(g, ell, optimal_psi(ell)) - direct) < 1e-14


@pytest.mark.parametrize("model", [ProcessModel("iid"), ProcessModel("ar1", rho=0.5), ProcessModel("ma1", rho=0.4)])
def test_time_domain_matches_closed_form(model):
    r = time_domain_experiment(model, 1.0, 4 * 10**5, seed=3)
    assert abs(r.mean - closed_form_sigma2(model, 1.0)) <= 3 * r.std_error + r.grid_bias_bound


def test_time_domain_alpha_zero_exact():
    r = time_domain_experiment(ProcessModel("ar1", rho=0.5), 0.0, 10**4)
    assert r.mean == 0.0 and r.extra["kernel_K"] == 0


def test_time_domain_errors():
    with pytest.raises(SizingError):
        time_domain_experiment(ProcessModel("iid"), 1.0, 100)
    with pytest.raises(UnsupportedError):
        time_domain_experiment(ProcessModel("ou"), 1.0, 10**4)
