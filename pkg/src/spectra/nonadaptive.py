"""
Optimal non-adaptive approximation (full knowledge of the process).

The optimal approximant of ``B(0)`` under the penalty ``E|LY|^2`` has the
spectral multiplier ``psi(u) = 1/(1 + |l(u)|^2)`` and error
``sigma^2 = int |l|^2/(1+|l|^2) d mu``.  For kinetic-energy filters the
multiplier is realized in time by a bilateral geometric kernel (discrete
time) or a Laplace kernel (continuous time).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ParameterError, UnsupportedError
from .quadrature import IntegralResult
from .spectral_model import (
    FrequencyCharacteristic,
    KineticContinuous,
    KineticDiscrete,
    ProcessModel,
    SpectralMeasure,
    check_compatible,
    damped,
    total_mass,
)

__all__ = [
    "optimal_psi",
    "OptimalMultiplier",
    "SolutionReport",
    "sigma2_nonadaptive",
    "closed_form_sigma2",
    "beta",
    "DiscreteKernel",
    "ContinuousKernel",
    "discrete_kernel",
    "continuous_kernel",
    "LimitRow",
    "discrete_to_continuous_limit",
]


@dataclass(frozen=True)
class OptimalMultiplier:
    """``u -> 1/(1+|l(u)|^2)``, zero where ``|l|`` is infinite."""

    ell: FrequencyCharacteristic

    def __call__(self, u):
        a2 = np.asarray(self.ell.abs2(u), dtype=float)
        with np.errstate(over="ignore"):
            return np.where(np.isinf(a2), 0.0, 1.0 / (1.0 + a2))

    def minus_one(self, u):
        """``psi(u) - 1 = -|l|^2/(1+|l|^2)`` without cancellation."""
        return -damped(self.ell.abs2(u))


def optimal_psi(ell: FrequencyCharacteristic) -> OptimalMultiplier:
    """Optimal spectral multiplier of the non-adaptive problem."""
    return OptimalMultiplier(ell)


@dataclass(frozen=True)
class SolutionReport:
    """Result of :func:`sigma2_nonadaptive`.

    Attributes
    ----------
    sigma2 : float
        ``inf`` when the error integral diverges (infinite measures only).
    sigma2_error_estimate : float
    psi : OptimalMultiplier
    kernel : DiscreteKernel or ContinuousKernel or None
        Filled in for kinetic filters.
    complement : IntegralResult or None
        ``int d mu / (1+|l|^2)``, finite measures only.
    mass : IntegralResult or None
    diverged : bool
    """

    sigma2: float
    sigma2_error_estimate: float
    psi: OptimalMultiplier
    kernel: object = None
    complement: IntegralResult | None = None
    mass: IntegralResult | None = None
    diverged: bool = False
    direct: IntegralResult | None = field(default=None, repr=False)

    @property
    def cross_check_gap(self):
        """``|direct + complement - mass|``; ``None`` for infinite measures."""
        if self.complement is None or self.mass is None:
            return None
        return abs(self.direct.value + self.complement.value - self.mass.value)


def sigma2_nonadaptive(measure: SpectralMeasure, ell: FrequencyCharacteristic,
                       tol=1e-11, *, cross_check=True, **quad_kw) -> SolutionReport:
    """Error of the optimal non-adaptive approximation.

    Parameters
    ----------
    measure : SpectralMeasure
    ell : FrequencyCharacteristic
    tol : float
        Absolute quadrature tolerance.
    cross_check : bool
        For finite measures also compute ``mu(domain) - int d mu/(1+|l|^2)``
        and require agreement with the direct integral.

    Returns
    -------
    SolutionReport
    """
    check_compatible(measure.domain, ell)
    points = tuple(getattr(ell, "points", ()))
    direct = measure.integrate(lambda u: damped(ell.abs2(u)), tol, points=points, **quad_kw)
    psi = optimal_psi(ell)
    kernel = None
    if isinstance(ell, KineticDiscrete):
        kernel = discrete_kernel(ell.alpha)
    elif isinstance(ell, KineticContinuous):
        kernel = continuous_kernel(ell.alpha)
    value = float(np.real(direct.value))
    if direct.diverged or not math.isfinite(value):
        if measure.finite:
            raise DivergenceError(
                f"error integral failed to converge on a finite measure (estimate {direct.abs_error_estimate:.3g})"
            )
        return SolutionReport(math.inf, math.inf, psi, kernel, diverged=True, direct=direct)
    complement = mass = None
    if measure.finite and cross_check:
        mass = total_mass(measure, tol)
        complement = measure.integrate(psi, tol, points=points, **quad_kw)
        gap = abs(direct.value + complement.value - mass.value)
        budget = 4 * (direct.abs_error_estimate + complement.abs_error_estimate + mass.abs_error_estimate) \
            + 64 * np.finfo(float).eps * abs(mass.value)
        if gap > budget:
            raise DivergenceError(
                f"cross-check failed: direct {direct.value!r} + complement {complement.value!r} "
                f"differs from mass {mass.value!r} by {gap:.3g}"
            )
    return SolutionReport(value, direct.abs_error_estimate, psi, kernel, complement, mass, False, direct)


def beta(alpha):
    """Larger root of ``b^2 - ((2 alpha^2 + 1)/alpha^2) b + 1 = 0``."""
    alpha = float(alpha)
    if not alpha > 0:
        raise ParameterError("alpha", f"must be positive, got {alpha}")
    return 1.0 + _beta_minus_one(alpha)


def _beta_minus_one(alpha):
    # (1 + sqrt(1+4a^2)) / (2a^2): no cancellation for large alpha
    return (1.0 + math.sqrt(1.0 + 4.0 * alpha * alpha)) / (2.0 * alpha * alpha)


def _beta_power_alpha(alpha):
    """``beta(alpha)**alpha`` via ``alpha ln beta = 2 alpha asinh(1/(2 alpha))``."""
    return math.exp(2.0 * alpha * math.asinh(0.5 / alpha))


def closed_form_sigma2(model: ProcessModel, alpha) -> float:
    """Closed-form error for a preset model under the kinetic penalty.

    Discrete-time presets use ``l(u) = alpha (e^{iu}-1)``, continuous-time
    presets ``l(u) = i alpha u``.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise ParameterError("alpha", f"must be positive, got {alpha}")
    V, rho, H = model.V, model.rho, model.H
    r = math.sqrt(1.0 + 4.0 * alpha * alpha)
    k = model.kind
    if k == "iid":
        return V * (4.0 * alpha * alpha / (r * (r + 1.0)))
    if k == "ar1":
        b = beta(alpha)
        return V / (1.0 - rho * rho) * (1.0 - (b + rho) / ((b - rho) * r))
    if k == "ma1":
        b = beta(alpha)
        return V * (1.0 + rho * rho - (1.0 + rho * rho + 2.0 * rho / b) / r)
    if k == "partial_sums":
        return V * alpha * alpha / r
    if k == "ou":
        return alpha / (2.0 + alpha)
    if k == "fbm":
        return math.gamma(2.0 * H + 1.0) * alpha ** (2.0 * H) / 2.0
    if k == "levy":
        return alpha * V / 2.0
    raise UnsupportedError(f"no closed form for model {k!r}")


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteKernel:
    """Bilateral geometric weights ``w_k = w0 beta^{-|k|}``, ``|k| <= K``."""

    alpha: float
    w0: float
    beta: float
    weights: np.ndarray
    truncation_K: int
    tail_bound: float

    def bilateral(self):
        """Weights for ``k = -K..K``."""
        return np.concatenate([self.weights[:0:-1], self.weights])

    def fourier_series(self, u):
        """``sum_{|k|<=K} w_k e^{iku}`` (real by symmetry)."""
        u = np.asarray(u, dtype=float)
        k = np.arange(1, self.truncation_K + 1)
        return self.weights[0] + 2.0 * np.cos(np.multiply.outer(u, k)) @ self.weights[1:]

    @property
    def total(self):
        return self.weights[0] + 2.0 * math.fsum(self.weights[1:])


def discrete_kernel(alpha, tail_tol=1e-12) -> DiscreteKernel:
    """Truncated kernel realizing ``1/(1 + 2 alpha^2 (1 - cos u))`` in discrete time.

    ``K`` is the smallest index whose bilateral geometric tail
    ``2 w0 beta^{-(K+1)} / (1 - 1/beta)`` is below ``tail_tol``.
    """
    alpha = float(alpha)
    if not tail_tol > 0:
        raise ParameterError("tail_tol", f"must be positive, got {tail_tol}")
    if alpha == 0.0:
        return DiscreteKernel(0.0, 1.0, math.inf, np.array([1.0]), 0, 0.0)
    b = beta(alpha)
    bm1 = _beta_minus_one(alpha)
    w0 = 1.0 / math.sqrt(1.0 + 4.0 * alpha * alpha)
    log_b = math.log1p(bm1)
    # 2 w0 q^{K+1}/(1-q) < tail_tol with q = 1/beta
    factor = 2.0 * w0 * b / bm1
    K = max(0, math.ceil(math.log(factor / tail_tol) / log_b - 1.0))
    while K > 0 and factor * math.exp(-K * log_b) < tail_tol:
        K -= 1
    while factor * math.exp(-(K + 1) * log_b) >= tail_tol:
        K += 1
    tail = factor * math.exp(-(K + 1) * log_b)
    weights = w0 * np.exp(-np.arange(K + 1) * log_b)
    return DiscreteKernel(alpha, w0, b, weights, K, tail)


@dataclass(frozen=True)
class ContinuousKernel:
    """Laplace kernel ``tau -> exp(-|tau|/alpha) / (2 alpha)``."""

    alpha: float

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.exp(-np.abs(tau) / self.alpha) / (2.0 * self.alpha)

    def fourier_transform(self, u):
        """Exact transform ``1/(1 + alpha^2 u^2)``."""
        u = np.asarray(u, dtype=float)
        return 1.0 / (1.0 + (self.alpha * u) ** 2)


def continuous_kernel(alpha) -> ContinuousKernel:
    alpha = float(alpha)
    if not alpha > 0:
        raise ParameterError("alpha", f"must be positive, got {alpha}")
    return ContinuousKernel(alpha)


# ---------------------------------------------------------------------------
# Discrete to continuous time
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitRow:
    delta: float
    alpha_delta: float
    beta_delta: float
    beta_pow_alpha: float
    e_gap: float
    sigma2_delta: float
    sigma2_limit: float
    sigma2_gap: float


def discrete_to_continuous_limit(alpha, deltas, V=1.0) -> list[LimitRow]:
    """Rescaling study from the step-``delta`` problem to continuous time.

    For each ``delta``: ``alpha_delta = alpha/delta``, ``beta_delta^{alpha_delta}``
    (which tends to ``e``) and the partial-sums error with increment variance
    ``V delta``, whose limit is the Levy value ``V alpha / 2``.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise ParameterError("alpha", f"must be positive, got {alpha}")
    deltas = [float(d) for d in deltas]
    if any(not d > 0 for d in deltas):
        raise ParameterError("deltas", "must be positive")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ParameterError("deltas", "must be strictly decreasing")
    limit = V * alpha / 2.0
    rows = []
    for d in deltas:
        ad = alpha / d
        bpa = _beta_power_alpha(ad)
        # V d ad^2 / sqrt(1 + 4 ad^2) = V alpha^2 / sqrt(d^2 + 4 alpha^2)
        s2 = V * alpha * alpha / math.sqrt(d * d + 4.0 * alpha * alpha)
        rows.append(LimitRow(d, ad, beta(ad), bpa, math.e - bpa, s2, limit, limit - s2))
    return rows
