import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectra.domain import Domain
from spectra.errors import DomainError, OutOfRangeError, ParameterError, UnsupportedError
from spectra.nonadaptive import sigma2_nonadaptive
from spectra.spectral_model import (
    KineticContinuous,
    KineticDiscrete,
    PolynomialCircle,
    PolynomialLine,
    ProcessModel,
    SpectralMeasure,
    TabulatedFilter,
    TabulatedFunction,
    ZeroFilter,
    covariance,
    ell_value,
    fbm_constant,
    filter_from_csv,
    levy_check,
    measure_from_csv,
    model_from_config,
    preset_measure,
    total_mass,
)


@pytest.mark.parametrize("kind,kw,mass", [
    ("iid", {"V": 2.0}, 2.0),
    ("ar1", {"rho": 0.5}, 1 / 0.75),
    ("ar1", {"rho": -0.9}, 1 / 0.19),
    ("ma1", {"rho": 0.4}, 1.16),
    ("ou", {}, 1.0),
])
def test_preset_total_mass(kind, kw, mass):
    r = total_mass(preset_measure(ProcessModel(kind, **kw)), 1e-12)
    assert abs(r.value - mass) < 1e-10


def test_ou_covariance_is_exponential():
    ou = preset_measure(ProcessModel("ou"))
    for t in (0.5, 1.0, 2.0):
        c = covariance(ou, t)
        assert abs(c.value - math.exp(-t / 2)) < 1e-10


def test_ar1_covariance_geometric():
    ar = preset_measure(ProcessModel("ar1", rho=0.5))
    for k in range(4):
        assert abs(covariance(ar, k).value - 0.5**k / 0.75) < 1e-11


def test_ma1_covariance_lags():
    ma = preset_measure(ProcessModel("ma1", rho=0.4))
    assert abs(covariance(ma, 1).value - 0.4) < 1e-12
    assert abs(covariance(ma, 2).value) < 1e-12


def test_infinite_presets_flags():
    for kind in ("partial_sums", "levy"):
        m = preset_measure(ProcessModel(kind))
        assert not m.finite and m.hints[0][0] == 0.0
    fbm = preset_measure(ProcessModel("fbm", H=0.25))
    assert fbm.hints == ((0.0, 1.5),)


def test_levy_check():
    lc = levy_check(preset_measure(ProcessModel("levy")))
    assert lc.passed and abs(lc.value - 4 / (2 * math.pi)) < 1e-8
    assert levy_check(preset_measure(ProcessModel("fbm", H=0.9))).passed
    cubic = SpectralMeasure("line", lambda u: np.abs(u) ** -3.0, finite=False, hints=((0.0, 3.0),))
    assert not levy_check(cubic).passed


def test_fbm_constant_half_matches_levy():
    assert fbm_constant(0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-15)


def test_fbm_h1_unsupported():
    with pytest.raises(UnsupportedError):
        preset_measure(ProcessModel("fbm", H=1.0))


@pytest.mark.parametrize("kw,field", [({"H": 1.5}, "H"), ({"rho": 1.0}, "rho"), ({"V": -1.0}, "V")])
def test_model_validation(kw, field):
    with pytest.raises(ParameterError) as e:
        ProcessModel("fbm" if "H" in kw else "ar1", **kw)
    assert e.value.field == field


def test_aliases():
    assert ProcessModel("partial-sums").kind == "partial_sums"
    assert ProcessModel("wiener").kind == "levy"
    with pytest.raises(ParameterError):
        ProcessModel("garch")


def test_atoms_integrated_exactly():
    m = SpectralMeasure("line", atoms=((1.0, 0.7),))
    r = sigma2_nonadaptive(m, KineticContinuous(1.0))
    assert r.sigma2 == pytest.approx(0.35, abs=1e-15)


def test_measure_validation():
    with pytest.raises(ParameterError):
        SpectralMeasure("circle", atoms=((0.0, -1.0),))
    with pytest.raises(ParameterError):
        SpectralMeasure("circle", atoms=((0.0, 1.0), (0.0, 2.0)))
    with pytest.raises(ParameterError):
        SpectralMeasure("torus")


def test_infinite_measure_rejects_atom_at_zero():
    with pytest.raises(ParameterError):
        SpectralMeasure("line", lambda u: 1 / u**2, atoms=((0.0, 1.0),), finite=False, hints=((0.0, 2.0),))


def test_domain_mismatch():
    with pytest.raises(DomainError):
        sigma2_nonadaptive(preset_measure(ProcessModel("ou")), KineticDiscrete(1.0))


def test_tabulated_out_of_range():
    t = TabulatedFunction([0.0, 1.0, 2.0], [1.0, 2.0, 0.0])
    assert t(0.5) == pytest.approx(1.5)
    with pytest.raises(OutOfRangeError):
        t(2.5)
    with pytest.raises(ParameterError):
        TabulatedFunction([0.0, 0.0], [1.0, 1.0])


def test_kinetic_values_consistent():
    u = np.linspace(-3, 3, 101)
    kd = KineticDiscrete(1.7)
    assert np.allclose(np.abs(kd.value(u)) ** 2, kd.abs2(u), atol=1e-14)
    assert np.allclose(kd.value(u), 1.7 * (np.exp(1j * u) - 1), atol=1e-14)
    kc = KineticContinuous(0.3)
    assert np.allclose(np.abs(ell_value(kc, u)) ** 2, kc.abs2(u))
    assert np.all(ell_value(ZeroFilter(), u) == 0)


def test_polynomial_filters():
    u = np.linspace(-2, 2, 11)
    p = PolynomialLine((0, 1.0))  # l(u) = u^2
    assert np.allclose(p.abs2(u), u**4)
    c = PolynomialCircle((2.0,))
    assert np.allclose(c.abs2(u), KineticDiscrete(2.0).abs2(u))
    with pytest.raises(ParameterError):
        PolynomialLine(())


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.95, 0.95))
def test_ar1_density_positive_and_mass(rho):
    m = preset_measure(ProcessModel("ar1", rho=rho))
    assert np.all(m.f(np.linspace(-math.pi, math.pi, 33)) > 0)
    assert abs(total_mass(m, 1e-11).value - 1 / (1 - rho * rho)) < 1e-8 / (1 - abs(rho))


def test_csv_roundtrip(tmp_path):
    u = np.linspace(-math.pi, math.pi, 401)
    dens = tmp_path / "f.csv"
    dens.write_text("u,f_a\n" + "\n".join(f"{float(x)!r},{1 / (2 * math.pi)!r}" for x in u))
    m = measure_from_csv(dens, "circle")
    assert abs(total_mass(m).value - 1) < 1e-10
    filt = tmp_path / "l.csv"
    filt.write_text("u,abs2\n" + "\n".join(f"{float(x)!r},{2 * (1 - math.cos(x))!r}" for x in u))
    ell = filter_from_csv(filt, "circle")
    assert isinstance(ell, TabulatedFilter)
    r = sigma2_nonadaptive(m, ell).sigma2
    assert abs(r - (1 - 1 / math.sqrt(5))) < 1e-4


def test_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n0,1\n1,1\n")
    with pytest.raises(ParameterError):
        measure_from_csv(p, "line")


def test_model_from_config(tmp_path):
    m = model_from_config({"model": "ar1", "rho": 0.3})
    assert m.kind == "ar1" and m.rho == 0.3
    with pytest.raises(ParameterError):
        model_from_config({"model": "ar1", "colour": "red"})
    with pytest.raises(ParameterError):
        model_from_config({"model": "custom"})


def test_line_csv_support(tmp_path):
    u = np.linspace(-1, 1, 51)
    p = tmp_path / "box.csv"
    p.write_text("u,f_a\n" + "\n".join(f"{float(x)!r},0.5" for x in u))
    m = measure_from_csv(p, Domain.LINE)
    assert m.support == (-1.0, 1.0)
    assert abs(total_mass(m).value - 1.0) < 1e-12
