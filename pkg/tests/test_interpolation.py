import math

import numpy as np
import pytest

from spectra.errors import ParameterError, UnsupportedError
from spectra.interpolation import (
    MAX_GALERKIN_S,
    galerkin_oracle,
    galerkin_sequence,
    interpolation_residuals,
    kolmogorov_integral,
    sigma2_interpolation,
)
from spectra.nonadaptive import sigma2_nonadaptive
from spectra.spectral_model import KineticDiscrete, ProcessModel, SpectralMeasure, ZeroFilter, preset_measure


def test_iid_kolmogorov_value():
    r = sigma2_interpolation(preset_measure(ProcessModel("iid")), ZeroFilter())
    assert abs(r.sigma2_int - 1.0) < 1e-10
    assert not r.precise


def test_ar1_classical_interpolation_error():
    # with l = 0: 4 pi^2 / int 1/f = V / (1 + rho^2)
    rho = 0.5
    r = sigma2_interpolation(preset_measure(ProcessModel("ar1", rho=rho)), ZeroFilter())
    assert abs(r.sigma2_int - 1 / (1 + rho * rho)) < 1e-10


def test_ar1_kinetic_value_and_bounds():
    m = preset_measure(ProcessModel("ar1", rho=0.5))
    ell = KineticDiscrete(1.0)
    r = sigma2_interpolation(m, ell)
    assert r.sigma2_int > sigma2_nonadaptive(m, ell).sigma2
    assert r.sigma2_int < 1 / 0.75
    assert r.c < 0


def test_residuals_vanish():
    m = preset_measure(ProcessModel("ar1", rho=0.5))
    ell = KineticDiscrete(1.0)
    rep = sigma2_interpolation(m, ell)
    res = interpolation_residuals(m, ell, rep, s_max=10)
    assert len(res) == 21 and max(abs(v) for v in res.values()) < 1e-8


def test_precise_case_when_inverse_density_diverges():
    m = SpectralMeasure("circle", lambda u: (1 - np.cos(u)) / (2 * math.pi), hints=((0.0, 2.0),))
    assert kolmogorov_integral(m).diverged
    r = sigma2_interpolation(m, KineticDiscrete(1.0))
    assert r.precise and r.c is None
    assert abs(r.sigma2_int - sigma2_nonadaptive(m, KineticDiscrete(1.0)).sigma2) < 1e-10


def test_galerkin_monotone_and_converges():
    m = preset_measure(ProcessModel("ar1", rho=0.5))
    ell = KineticDiscrete(1.0)
    target = sigma2_interpolation(m, ell).sigma2_int
    seq = galerkin_sequence(m, ell, [1, 3, 10, 50])
    vals = [v for _, v, _ in seq]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert -1e-12 <= vals[-1] - target <= 1e-3
    assert all(c < 1e12 for _, _, c in seq)
    assert abs(galerkin_oracle(m, ell, 3) - vals[1]) < 1e-14


def test_preconditions():
    with pytest.raises(UnsupportedError):
        sigma2_interpolation(preset_measure(ProcessModel("partial_sums")), KineticDiscrete(1.0))
    with pytest.raises(UnsupportedError):
        sigma2_interpolation(preset_measure(ProcessModel("ou")), ZeroFilter())
    iid = preset_measure(ProcessModel("iid"))
    with pytest.raises(UnsupportedError):
        sigma2_interpolation(SpectralMeasure("circle", iid.density, atoms=((0.5, 1.0),)), ZeroFilter())
    with pytest.raises(ParameterError):
        galerkin_oracle(iid, ZeroFilter(), MAX_GALERKIN_S + 1)
