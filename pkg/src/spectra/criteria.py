"""
Criteria for prediction under the energy penalty.

* :func:`log_integral` decides whether the process is singular (the remote
  past determines everything) through the divergence of ``int |ln f_a|``.
* :func:`no_loss_horizon` decides whether knowing the past up to a finite
  horizon already achieves the full-knowledge error.  In discrete time this
  reduces to ``psi = 1/(1+|l|^2)`` being a trigonometric polynomial; in
  continuous time to ``psi`` minus its limit being of exponential type, which
  is tested only approximately through its numerical Fourier support.
* :func:`regularity_limit` is the error of prediction from the remote past.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .domain import Domain
from .errors import DivergenceError, DomainError, ParameterError, UnsupportedError
from .nonadaptive import optimal_psi
from .quadrature import IntegralResult, integrate
from .spectral_model import (
    FrequencyCharacteristic,
    SpectralMeasure,
    check_compatible,
    total_mass,
)

__all__ = [
    "log_integral",
    "fourier_coefficients",
    "trig_poly_degree",
    "HorizonKind",
    "HorizonVerdict",
    "no_loss_horizon",
    "regularity_limit",
    "DEFAULT_MAXDEG",
    "DEFAULT_CRITERIA_TOL",
]

DEFAULT_MAXDEG = 128
DEFAULT_CRITERIA_TOL = 1e-10
# a degree-t claim needs |b_t|^2 to dominate the tail by this factor
CLIFF_RATIO = 1e6
_ZERO_DENSITY = 1e-300


def _sample_grid(domain):
    if domain is Domain.CIRCLE:
        return np.linspace(-math.pi, math.pi, 4097)[:-1] + math.pi / 4096
    theta = np.linspace(-math.pi / 2, math.pi / 2, 8194)[1:-1]
    return np.tan(theta)


def log_integral(measure: SpectralMeasure, tol=1e-9) -> IntegralResult:
    """Singularity integral of the absolutely continuous density.

    Circle: ``int |ln f_a(u)| du``; line: ``int |ln f_a(u)| / (1+u^2) du``.
    A divergent result likely means the process is singular; the verdict is
    numerical.

    Raises
    ------
    ParameterError
        If sampling finds the density vanishing away from every declared hint.
    """
    if measure.density is None:
        return IntegralResult(math.inf, math.inf, 0, True)
    grid = _sample_grid(measure.domain)
    with np.errstate(all="ignore"):
        fv = measure.f(grid)
    zero = grid[fv < _ZERO_DENSITY]
    if zero.size:
        hint_locs = np.array([loc for loc, _ in measure.hints])
        if measure.log_density is not None:
            with np.errstate(all="ignore"):
                zero = zero[~np.isfinite(measure.log_f(zero)) | (measure.log_f(zero) < math.log(_ZERO_DENSITY))]
        if zero.size:
            if hint_locs.size:
                d = np.abs(zero[:, None] - hint_locs[None, :])
                if measure.domain is Domain.CIRCLE:
                    d = np.minimum(d, 2 * math.pi - d)
                far = zero[d.min(axis=1) > 1e-2]
            else:
                far = zero
            if far.size:
                raise ParameterError(
                    "hints", f"density {measure.name} vanishes at u={far[0]:.6g}; declare its zeros as hints"
                )
            if measure.log_density is None:
                # zero on a stretch of samples next to a hint: ln f = -inf there
                return IntegralResult(math.inf, math.inf, 0, True)

    if measure.domain is Domain.CIRCLE:
        def g(u):
            return np.abs(measure.log_f(u))
    else:
        def g(u):
            return np.abs(measure.log_f(u)) / (1.0 + np.asarray(u) ** 2)

    return integrate(g, measure.domain, tol, hints=measure.hints, points=measure.points,
                     interval=measure.interval)


def fourier_coefficients(ell: FrequencyCharacteristic, maxdeg=DEFAULT_MAXDEG, quad_tol=1e-13):
    """Coefficients ``b_j`` of ``psi = 1/(1+|l|^2)`` on the circle for ``0 <= j <= maxdeg``.

    Returns
    -------
    b : ndarray of complex, shape (maxdeg+1,)
        ``b_j = (1/2pi) int psi(u) e^{-iju} du``; ``b_{-j} = conj(b_j)`` since psi is real.
    norm2 : float
        ``(1/2pi) int psi^2 du``, the full squared norm by Parseval.
    """
    if ell.domain is Domain.LINE:
        raise DomainError("trigonometric degree is defined for circle filters only")
    if maxdeg < 0:
        raise ParameterError("maxdeg", "must be non-negative")
    psi = optimal_psi(ell)
    pts = tuple(getattr(ell, "points", ()))
    b = np.empty(maxdeg + 1, dtype=complex)
    for j in range(maxdeg + 1):
        res = integrate(lambda u, j=j: psi(u) * np.exp(-1j * j * np.asarray(u)), Domain.CIRCLE,
                        quad_tol, points=pts)
        b[j] = res.value / (2 * math.pi)
    n2 = integrate(lambda u: psi(u) ** 2, Domain.CIRCLE, quad_tol, points=pts).value / (2 * math.pi)
    return b, float(n2)


def _degree_from_coefficients(b, norm2, tol):
    mag2 = np.abs(b) ** 2
    inside = mag2[0] + 2.0 * math.fsum(mag2[1:])
    remainder = max(norm2 - inside, 0.0)
    # tail(t) = sum_{t<|j|<=maxdeg} |b_j|^2 + remainder beyond maxdeg
    tails = np.empty(len(b))
    acc = remainder
    for t in range(len(b) - 1, -1, -1):
        tails[t] = acc
        acc += 2.0 * mag2[t]
    scale = max(norm2, np.finfo(float).tiny)
    # roundoff level of the Parseval remainder; tails below it are unresolved
    noise = 64 * np.finfo(float).eps * scale
    for t in range(len(b)):
        if tails[t] < tol * scale and mag2[t] >= CLIFF_RATIO * max(tails[t], noise):
            return t, tails, remainder
    return None, tails, remainder


def trig_poly_degree(ell: FrequencyCharacteristic, tol=DEFAULT_CRITERIA_TOL, maxdeg=DEFAULT_MAXDEG):
    """Smallest ``t`` such that ``psi = 1/(1+|l|^2)`` is a trigonometric polynomial of degree ``t``.

    The squared Fourier tail beyond ``t`` (including the Parseval remainder
    beyond ``maxdeg``) must be below ``tol`` relative to ``||psi||^2`` and
    ``|b_t|^2`` must exceed it by :data:`CLIFF_RATIO`, so that fast but
    unending geometric decay is not mistaken for truncation.

    Returns
    -------
    int or None
    """
    b, n2 = fourier_coefficients(ell, maxdeg)
    t, _, _ = _degree_from_coefficients(b, n2, tol)
    return t


class HorizonKind(str, Enum):
    ALL_T_SINGULAR = "all_t_singular"
    FINITE_DEGREE = "finite_degree"
    NEVER_FINITE_T = "never_finite_t"
    APPROXIMATE = "approximate"


@dataclass(frozen=True)
class HorizonVerdict:
    """Outcome of :func:`no_loss_horizon`.

    ``t`` is the horizon (integer in discrete time, an exponential-type
    estimate in continuous time).  ``approximate`` marks verdicts that rest on
    the numerical Fourier-support test.
    """

    kind: HorizonKind
    t: float | None = None
    approximate: bool = False
    note: str = ""
    evidence: dict = field(default_factory=dict)

    def as_dict(self):
        return {"kind": self.kind.value, "t": self.t, "approximate": self.approximate,
                "note": self.note, **self.evidence}


def no_loss_horizon(measure: SpectralMeasure, ell: FrequencyCharacteristic,
                    tol=DEFAULT_CRITERIA_TOL, maxdeg=DEFAULT_MAXDEG, *, tau_max=40.0) -> HorizonVerdict:
    """Does prediction from the past up to horizon ``t`` lose nothing?

    Parameters
    ----------
    measure, ell
        Measure and filter on the same domain.
    tol : float
        Degree tolerance (circle) or constancy tolerance for ``|l|`` (line).
    maxdeg : int
        Largest trigonometric degree examined (circle).
    tau_max : float
        Largest exponential type resolved by the line test.
    """
    check_compatible(measure.domain, ell)
    li = log_integral(measure)
    evidence = {"log_integral": li.value if not li.diverged else math.inf, "log_diverged": li.diverged}
    if li.diverged:
        return HorizonVerdict(HorizonKind.ALL_T_SINGULAR, None, False,
                              "log-integral diverges (numerical verdict)", evidence)
    if measure.domain is Domain.CIRCLE:
        b, n2 = fourier_coefficients(ell, maxdeg)
        t, tails, rem = _degree_from_coefficients(b, n2, tol)
        evidence.update(maxdeg=maxdeg, parseval_remainder=rem,
                        tail_at_maxdeg=float(tails[-1]), b_abs=[float(x) for x in np.abs(b[:8])])
        if t is not None:
            return HorizonVerdict(HorizonKind.FINITE_DEGREE, t, False, "", evidence)
        return HorizonVerdict(HorizonKind.NEVER_FINITE_T, None, False,
                              f"no trigonometric degree up to {maxdeg}", evidence)
    return _line_horizon(ell, tol, tau_max, evidence)


def _line_horizon(ell, tol, tau_max, evidence):
    probe = np.concatenate([np.linspace(-50, 50, 20001), np.geomspace(50, 1e8, 2000), -np.geomspace(50, 1e8, 2000)])
    with np.errstate(all="ignore"):
        mod = np.sqrt(ell.abs2(probe))
    if np.all(np.isfinite(mod)) and float(np.ptp(mod)) < tol:
        evidence["ell_spread"] = float(np.ptp(mod))
        return HorizonVerdict(HorizonKind.FINITE_DEGREE, 0, False, "|l| is constant", evidence)

    psi = optimal_psi(ell)
    far = np.array([-1e12, 1e12])
    psi_inf = float(np.mean(psi(far)))
    n = 2**18
    du = math.pi / tau_max
    u = (np.arange(n) - n // 2) * du
    g = psi(u) - psi_inf
    W = n // 2 * du
    edge = np.abs(u) > 0.99 * W
    floor = 2.0 * W * float(np.max(np.abs(g[edge]))) + 1e-14 * float(np.sum(np.abs(g))) * du
    # ghat(tau_k) = du * sum_n g(u_n) e^{-i tau_k u_n}, tau_k = 2 pi k / (n du)
    ghat = np.abs(np.fft.fft(np.fft.ifftshift(g))) * du
    dtau = 2 * math.pi / (n * du)
    half = ghat[: n // 2]
    tau = np.arange(n // 2) * dtau
    evidence.update(psi_limit=psi_inf, noise_floor=floor, peak=float(half.max()))
    if not half.max() > 10 * floor:
        return HorizonVerdict(HorizonKind.APPROXIMATE, 0.0, True,
                              "psi indistinguishable from its limit; exponential type 0 (numerical)", evidence)
    above = np.nonzero(half > 10 * floor)[0]
    k_end = int(above[-1])
    T = float(tau[k_end])
    evidence["support_width"] = T
    if k_end >= len(half) - 2:
        return HorizonVerdict(HorizonKind.NEVER_FINITE_T, None, True,
                              f"Fourier support extends past the resolved band {tau_max}", evidence)
    # straight-line extrapolation of log|ghat| from [T/2, 3T/4] to T
    k1, k2 = max(1, int(0.5 * k_end)), max(2, int(0.75 * k_end))
    if k2 <= k1 or half[k1] <= 0 or half[k2] <= 0:
        drop = math.inf
    else:
        slope = (math.log(half[k2]) - math.log(half[k1])) / (tau[k2] - tau[k1])
        predicted = math.log(half[k2]) + slope * (T - tau[k2])
        drop = float(predicted - math.log(half[k_end]))
    evidence["cliff_drop"] = drop
    if drop > 3.0:
        return HorizonVerdict(HorizonKind.APPROXIMATE, T, True,
                              f"Fourier support ends abruptly near {T:.4g}: exponential type about {T:.4g} "
                              "(numerical)", evidence)
    return HorizonVerdict(HorizonKind.NEVER_FINITE_T, None, True,
                          "Fourier transform decays without a support edge; not of exponential type "
                          "(numerical)", evidence)


def regularity_limit(measure: SpectralMeasure, ell: FrequencyCharacteristic, tol=1e-11) -> float:
    """Limit of the prediction error as the horizon recedes into the remote past.

    Equals ``mu(domain) - sum_j m_j / (1 + |l(u_j)|^2)``: the atoms are
    predictable from the remote past, the absolutely continuous part is not.

    Raises
    ------
    DivergenceError
        If the log-integral of the density diverges.
    """
    if measure.domain is not Domain.CIRCLE:
        raise UnsupportedError("regularity limit is implemented for discrete time (circle) only")
    check_compatible(measure.domain, ell)
    li = log_integral(measure)
    if li.diverged:
        raise DivergenceError("regularity limit requires a finite log-integral of the density")
    mass = total_mass(measure, tol).value
    if not measure.atoms:
        return float(mass)
    locs = np.array([a for a, _ in measure.atoms])
    masses = np.array([m for _, m in measure.atoms])
    psi = optimal_psi(ell)(locs)
    return float(mass - math.fsum(masses * psi))
