"""
Interpolation of ``B(0)`` from all other values ``B(s)``, ``|s| >= 1``, in
discrete time under the energy penalty.

With ``I1 = int |l|^2 f/(1+|l|^2)``, ``I2 = int 1/(1+|l|^2)`` and
``I3 = int 1/(f (1+|l|^2))`` the optimal error is ``I1 + I2^2 / I3`` when
``int 1/f`` converges, and ``I1`` (the full-knowledge error) when it diverges.
The optimal multiplier is ``phi = (c + f) / (f (1 + |l|^2))`` with
``c = -I2 / I3``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .domain import Domain
from .errors import ConditioningError, DivergenceError, ParameterError, UnsupportedError
from .quadrature import IntegralResult, integrate
from .spectral_model import FrequencyCharacteristic, SpectralMeasure, check_compatible, damped

__all__ = [
    "kolmogorov_integral",
    "InterpolationMultiplier",
    "InterpolationReport",
    "sigma2_interpolation",
    "interpolation_residuals",
    "galerkin_oracle",
    "galerkin_sequence",
    "MAX_GALERKIN_S",
]

MAX_GALERKIN_S = 200
CONDITION_LIMIT = 1e12


def _require_density(measure: SpectralMeasure):
    if measure.domain is not Domain.CIRCLE:
        raise UnsupportedError("interpolation is implemented for discrete time (circle) only")
    if not measure.finite:
        raise UnsupportedError(f"interpolation needs a finite spectral measure; {measure.name} is infinite")
    if measure.atoms:
        raise UnsupportedError("interpolation needs a spectral density; measure has atoms")
    if measure.density is None:
        raise UnsupportedError("interpolation needs a spectral density")


def kolmogorov_integral(measure: SpectralMeasure, tol=1e-10) -> IntegralResult:
    """``int_{-pi}^{pi} du / f(u)``; divergence means exact interpolation is possible."""
    _require_density(measure)

    def recip(u):
        fv = measure.f(u)
        with np.errstate(divide="ignore"):
            return 1.0 / fv

    return integrate(recip, Domain.CIRCLE, tol, hints=measure.hints, points=measure.points)


@dataclass(frozen=True)
class InterpolationMultiplier:
    """``phi(u) = (c + f(u)) / (f(u) (1 + |l(u)|^2))``."""

    measure: SpectralMeasure
    ell: FrequencyCharacteristic
    c: float

    def __call__(self, u):
        fv = self.measure.f(u)
        a2 = self.ell.abs2(u)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            out = (self.c + fv) / (fv * (1.0 + a2))
        return np.where(np.isinf(a2), 0.0, out)


@dataclass(frozen=True)
class InterpolationReport:
    """Result of :func:`sigma2_interpolation`.

    ``c`` and ``phi`` are ``None`` in the precise case (``int 1/f`` diverges).
    """

    sigma2_int: float
    c: float | None
    phi: InterpolationMultiplier | None
    kolmogorov_integral: IntegralResult
    precise: bool
    sigma2_nonadaptive: float
    penalty_term: float
    abs_error_estimate: float


def _checked(res: IntegralResult, name: str) -> float:
    if res.diverged or not math.isfinite(float(np.real(res.value))):
        raise DivergenceError(f"integral {name} did not converge (error estimate {res.abs_error_estimate:.3g})")
    return float(np.real(res.value))


def sigma2_interpolation(measure: SpectralMeasure, ell: FrequencyCharacteristic, tol=1e-11) -> InterpolationReport:
    """Optimal interpolation error at ``t = 1``.

    Parameters
    ----------
    measure : SpectralMeasure
        Finite circle measure with a density and no atoms.
    ell : FrequencyCharacteristic

    Returns
    -------
    InterpolationReport
    """
    _require_density(measure)
    check_compatible(measure.domain, ell)
    kol = kolmogorov_integral(measure, tol)
    pts = tuple(getattr(ell, "points", ()))
    r1 = measure.integrate_ac(lambda u: damped(ell.abs2(u)), tol, points=pts)
    I1 = _checked(r1, "int |l|^2 f/(1+|l|^2)")
    if kol.diverged:
        return InterpolationReport(I1, None, None, kol, True, I1, 0.0, r1.abs_error_estimate)

    def psi(u):
        a2 = ell.abs2(u)
        return np.where(np.isinf(a2), 0.0, 1.0 / (1.0 + a2))

    r2 = integrate(psi, Domain.CIRCLE, tol, hints=measure.hints, points=measure.points + pts)

    def psi_over_f(u):
        with np.errstate(divide="ignore"):
            return psi(u) / measure.f(u)

    r3 = integrate(psi_over_f, Domain.CIRCLE, tol, hints=measure.hints, points=measure.points + pts)
    I2 = _checked(r2, "int 1/(1+|l|^2)")
    I3 = _checked(r3, "int 1/(f (1+|l|^2))")
    c = -I2 / I3
    extra = I2 * I2 / I3
    err = r1.abs_error_estimate + 2 * abs(I2 / I3) * r2.abs_error_estimate \
        + (I2 / I3) ** 2 * r3.abs_error_estimate
    phi = InterpolationMultiplier(measure, ell, c)
    return InterpolationReport(I1 + extra, c, phi, kol, False, I1, extra, err)


def interpolation_residuals(measure: SpectralMeasure, ell: FrequencyCharacteristic,
                            report: InterpolationReport, s_max=10, tol=1e-11):
    """Consistency residuals of the optimal multiplier.

    Returns
    -------
    dict
        ``{0: int phi du, s: int (phi - 1 + |l|^2 phi) e^{isu} f du}`` for
        ``1 <= |s| <= s_max``; every entry should vanish.
    """
    if report.precise:
        raise UnsupportedError("residuals are defined only when int 1/f converges")
    phi = report.phi
    pts = tuple(getattr(ell, "points", ()))
    hints, points = measure.hints, measure.points + pts
    out = {0: complex(integrate(phi, Domain.CIRCLE, tol, hints=hints, points=points).value)}

    def bracket(u):
        a2 = ell.abs2(u)
        p = phi(u)
        with np.errstate(invalid="ignore"):
            lp = np.where(np.isinf(a2), (phi.c + measure.f(u)) / measure.f(u), a2 * p)
        return (p - 1.0 + lp) * measure.f(u)

    for s in range(1, s_max + 1):
        for sign in (1, -1):
            k = sign * s
            res = integrate(lambda u, k=k: bracket(u) * np.exp(1j * k * np.asarray(u)), Domain.CIRCLE, tol,
                            hints=hints, points=points)
            out[k] = complex(res.value)
    return out


def _moments(measure, ell, kmax, tol):
    """``int e^{iku} w du`` for ``w = (1+|l|^2) f`` and ``w = f``, ``k = 0..kmax``."""
    pts = tuple(getattr(ell, "points", ()))

    def weighted(u):
        a2 = ell.abs2(u)
        return (1.0 + a2) * measure.f(u)

    gram = np.empty(kmax + 1, dtype=complex)
    plain = np.empty(kmax + 1, dtype=complex)
    for k in range(kmax + 1):
        ph = (lambda u, k=k: np.exp(1j * k * np.asarray(u)))
        rg = integrate(lambda u: ph(u) * weighted(u), Domain.CIRCLE, tol,
                       hints=measure.hints, points=measure.points + pts)
        rp = integrate(lambda u: ph(u) * measure.f(u), Domain.CIRCLE, tol,
                       hints=measure.hints, points=measure.points + pts)
        if rg.diverged or rp.diverged:
            raise DivergenceError(f"Galerkin moment k={k} did not converge")
        gram[k], plain[k] = rg.value, rp.value
    return gram, plain


def _solve(gram_m, plain_m, total, S):
    idx = np.concatenate([np.arange(-S, 0), np.arange(1, S + 1)])
    diff = idx[None, :] - idx[:, None]            # s - s'
    G = np.where(diff >= 0, gram_m[np.abs(diff)], np.conj(gram_m[np.abs(diff)]))
    # b_s = int e^{-isu} f du
    b = np.where(idx >= 0, np.conj(plain_m[np.abs(idx)]), plain_m[np.abs(idx)])
    cond = np.linalg.cond(G)
    if not cond <= CONDITION_LIMIT:
        raise ConditioningError(f"Gram matrix condition number {cond:.3g} exceeds {CONDITION_LIMIT:g} at S={S}")
    a = scipy.linalg.solve(G, b, assume_a="her")
    return float(total - np.real(np.vdot(b, a))), float(cond)


def galerkin_sequence(measure: SpectralMeasure, ell: FrequencyCharacteristic, S_values, tol=1e-12):
    """Galerkin objectives for several subspace sizes, sharing one set of moments.

    Returns
    -------
    list of (S, objective, condition_number)
    """
    _require_density(measure)
    check_compatible(measure.domain, ell)
    S_values = [int(S) for S in S_values]
    if not S_values or min(S_values) < 1:
        raise ParameterError("S", "must be at least 1")
    if max(S_values) > MAX_GALERKIN_S:
        raise ParameterError("S", f"must not exceed {MAX_GALERKIN_S}")
    kol = kolmogorov_integral(measure)
    if kol.diverged:
        raise UnsupportedError("Galerkin oracle needs a convergent int 1/f")
    Smax = max(S_values)
    gram_m, plain_m = _moments(measure, ell, 2 * Smax, tol)
    total = float(np.real(plain_m[0]))
    return [(S, *_solve(gram_m, plain_m, total, S)) for S in S_values]


def galerkin_oracle(measure: SpectralMeasure, ell: FrequencyCharacteristic, S: int, tol=1e-12) -> float:
    """Minimum of ``int |psi - 1|^2 f + int |l psi|^2 f`` over ``psi`` spanned by ``e^{isu}``, ``1 <= |s| <= S``.

    Brute-force check of :func:`sigma2_interpolation`; nonincreasing in ``S``.

    Raises
    ------
    ConditioningError
        If the Gram matrix condition number exceeds ``1e12``.
    """
    return galerkin_sequence(measure, ell, [S], tol)[0][1]
