"""
The objective functional of the non-adaptive problem and its optimality
conditions, expressed through spectral multipliers.

``G(psi) = int |psi - 1|^2 d mu + int |l psi|^2 d mu`` is strictly convex; its
minimizer satisfies the Euler equation ``int (psi - 1 + |l|^2 psi) conj(h) d mu = 0``
for every admissible direction ``h``.  These checks are independent of the
closed-form solution and serve as oracles for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .domain import Domain
from .errors import ParameterError
from .quadrature import IntegralResult
from .spectral_model import FrequencyCharacteristic, SpectralMeasure, check_compatible

__all__ = [
    "Subspace",
    "MultiplierFunction",
    "ObjectiveValue",
    "objective",
    "objective_value",
    "euler_residual",
    "random_trig_polynomial",
    "PerturbationOutcome",
    "perturbation_check",
    "quadratic_expansion",
    "square_norm",
]


class Subspace(str, Enum):
    FULL = "full"
    PAST_EXPONENT = "past_exponent"
    OUTSIDE_GAP = "outside_gap"


@dataclass(frozen=True)
class MultiplierFunction:
    """Complex spectral multiplier ``u -> psi(u)`` with a subspace tag.

    ``t`` is the horizon for :attr:`Subspace.PAST_EXPONENT`.  ``offset``
    optionally evaluates ``psi(u) - 1`` directly; near points where psi is
    close to 1 this avoids the cancellation in ``psi(u) - 1``.
    """

    func: Callable
    subspace: Subspace = Subspace.FULL
    t: int | None = None
    name: str = "psi"
    offset: Callable | None = None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.asarray(self.func(u))
        return np.broadcast_to(out, u.shape) if out.shape != u.shape else out

    def minus_one(self, u):
        if self.offset is None:
            return self(u) - 1.0
        u = np.asarray(u, dtype=float)
        out = np.asarray(self.offset(u))
        return np.broadcast_to(out, u.shape) if out.shape != u.shape else out

    def __add__(self, other):
        if isinstance(other, MultiplierFunction):
            return MultiplierFunction(lambda u: self(u) + other(u), Subspace.FULL, None,
                                      f"{self.name}+{other.name}", lambda u: self.minus_one(u) + other(u))
        return MultiplierFunction(lambda u: self(u) + other, self.subspace, self.t,
                                  f"{self.name}+{other!r}", lambda u: self.minus_one(u) + other)

    def scaled(self, eps):
        return MultiplierFunction(lambda u: eps * self(u), self.subspace, self.t, f"{eps!r}*{self.name}")


def _as_multiplier(psi):
    if isinstance(psi, MultiplierFunction):
        return psi
    return MultiplierFunction(psi, name=getattr(psi, "name", "psi"), offset=getattr(psi, "minus_one", None))


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    abs_error_estimate: float
    infinite: bool


def _penalized(a2, p):
    # |l|^2 |psi|^2 with the convention 0 * inf = 0
    with np.errstate(invalid="ignore", over="ignore"):
        out = a2 * np.abs(p) ** 2
    return np.where(np.abs(p) == 0, 0.0, out)


def objective_value(measure: SpectralMeasure, ell: FrequencyCharacteristic, psi, tol=1e-11) -> ObjectiveValue:
    """``G(psi)`` with its quadrature error; ``infinite`` flags divergence."""
    check_compatible(measure.domain, ell)
    psi = _as_multiplier(psi)
    pts = tuple(getattr(ell, "points", ()))

    def integrand(u):
        p = psi(u)
        return np.abs(psi.minus_one(u)) ** 2 + _penalized(ell.abs2(u), p)

    res = measure.integrate(integrand, tol, points=pts)
    value = float(np.real(res.value))
    if res.diverged or not math.isfinite(value):
        return ObjectiveValue(math.inf, math.inf, True)
    return ObjectiveValue(value, res.abs_error_estimate, False)


def objective(measure: SpectralMeasure, ell: FrequencyCharacteristic, psi, tol=1e-11) -> float:
    """``G(psi) = int |psi-1|^2 d mu + int |l psi|^2 d mu``; ``inf`` when divergent."""
    return objective_value(measure, ell, psi, tol).value


def square_norm(measure: SpectralMeasure, ell: FrequencyCharacteristic, h, tol=1e-11) -> IntegralResult:
    """``int (1 + |l|^2) |h|^2 d mu``."""
    h = _as_multiplier(h)
    pts = tuple(getattr(ell, "points", ()))
    return measure.integrate(lambda u: np.abs(h(u)) ** 2 + _penalized(ell.abs2(u), h(u)), tol, points=pts)


def euler_residual(measure: SpectralMeasure, ell: FrequencyCharacteristic, psi, h, tol=1e-11) -> complex:
    """``int (psi - 1) conj(h) d mu + int |l|^2 psi conj(h) d mu``."""
    check_compatible(measure.domain, ell)
    psi, h = _as_multiplier(psi), _as_multiplier(h)
    pts = tuple(getattr(ell, "points", ()))

    def integrand(u):
        p = psi(u)
        a2 = ell.abs2(u)
        with np.errstate(invalid="ignore", over="ignore"):
            lp = np.where(p == 0, 0.0, a2 * p)
        return (psi.minus_one(u) + lp) * np.conj(h(u))

    return complex(measure.integrate(integrand, tol, points=pts).value)


def random_trig_polynomial(rng: np.random.Generator, domain, degree=16, *, anchor_zero=False,
                           window_power=2) -> MultiplierFunction:
    """Random ``h(u) = sum_{|s|<=degree} a_s e^{isu}`` with ``a_s`` uniform on the unit disc.

    On the line ``h`` is multiplied by ``(1+u^2)^{-window_power}``.  The
    default power 2 makes the oscillatory tails of ``|h|^2`` negligible
    beyond a few dozen units, which keeps quadrature cheap.  ``anchor_zero``
    subtracts ``h(0)`` so that ``h`` vanishes at the origin, which keeps
    ``h`` square-integrable against infinite measures.
    """
    domain = Domain.parse(domain)
    if not 0 <= degree:
        raise ParameterError("degree", "must be non-negative")
    if not window_power >= 1:
        raise ParameterError("window_power", "must be at least 1")
    n = 2 * degree + 1
    radius = np.sqrt(rng.random(n))
    angle = 2 * math.pi * rng.random(n)
    a = radius * np.exp(1j * angle)
    s = np.arange(-degree, degree + 1)

    def h(u):
        u = np.asarray(u, dtype=float)
        su = np.multiply.outer(u, s)
        if anchor_zero:
            # e^{isu} - 1 without cancellation at small u
            basis = 2j * np.sin(0.5 * su) * np.exp(0.5j * su)
        else:
            basis = np.exp(1j * su)
        val = basis @ a
        if domain is Domain.LINE:
            val = val / (1.0 + u * u) ** window_power
        return val

    return MultiplierFunction(h, name=f"trig{degree}")


@dataclass(frozen=True)
class PerturbationOutcome:
    passed: bool
    base: float
    worst_margin: float
    failures: int
    trials: int


def _trial_rngs(seed, trials):
    return [np.random.Generator(np.random.Philox(ss)) for ss in np.random.SeedSequence(seed).spawn(trials)]


def perturbation_check(measure: SpectralMeasure, ell: FrequencyCharacteristic, psi_star, trials=100,
                       eps_grid=(0.1, -0.1, 1e-3, -1e-3), seed=0, tol=1e-9, quad_tol=1e-11) -> PerturbationOutcome:
    """Check ``G(psi* + eps h) >= G(psi*) - tol`` along random directions ``h``.

    Each trial draws its direction from an independent Philox substream of
    ``seed`` so results do not depend on evaluation order.  The slack is
    ``tol`` plus four times the quadrature error estimates.
    """
    psi_star = _as_multiplier(psi_star)
    base = objective_value(measure, ell, psi_star, quad_tol)
    if base.infinite:
        # an infinite objective cannot be a minimum
        return PerturbationOutcome(False, math.inf, -math.inf, trials * len(eps_grid), trials)
    worst = math.inf
    failures = 0
    for rng in _trial_rngs(seed, trials):
        h = random_trig_polynomial(rng, measure.domain, anchor_zero=not measure.finite)
        for eps in eps_grid:
            pert = objective_value(measure, ell, psi_star + h.scaled(eps), quad_tol)
            slack = tol + 4.0 * (base.abs_error_estimate + pert.abs_error_estimate)
            margin = pert.value - (base.value - slack)
            worst = min(worst, margin)
            if not margin >= 0:
                failures += 1
    return PerturbationOutcome(failures == 0, base.value, worst, failures, trials)


def quadratic_expansion(measure: SpectralMeasure, ell: FrequencyCharacteristic, psi_star, h, eps, tol=1e-11):
    """Compare ``G(psi*+eps h) - G(psi*)`` with ``eps^2 int (1+|l|^2)|h|^2 d mu``.

    The two sides come from separate quadratures; equality holds exactly
    when ``psi*`` is the optimum.

    Returns
    -------
    lhs, rhs, err : float
        ``err`` is the combined quadrature error estimate.
    """
    psi_star, h = _as_multiplier(psi_star), _as_multiplier(h)
    g0 = objective_value(measure, ell, psi_star, tol)
    g1 = objective_value(measure, ell, psi_star + h.scaled(eps), tol)
    q = square_norm(measure, ell, h, tol)
    err = g0.abs_error_estimate + g1.abs_error_estimate + eps * eps * q.abs_error_estimate
    return g1.value - g0.value, float(eps * eps * np.real(q.value)), err
