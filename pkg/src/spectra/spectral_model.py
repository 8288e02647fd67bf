"""
Spectral measures, frequency characteristics and the preset process models.

A wide-sense stationary process (or a process with stationary increments) is
described here only through its spectral measure: an absolutely continuous
density on the circle or on the line plus a finite list of atoms.  Filters
are described by their frequency characteristic, of which only the squared
modulus ``|l(u)|^2`` enters the energy-penalized problems.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate as sp_integrate

from .domain import Domain
from .errors import (
    DomainError,
    InfiniteMassError,
    OutOfRangeError,
    ParameterError,
    UnsupportedError,
)
from .quadrature import DEFAULT_TOL, IntegralResult, integrate

__all__ = [
    "Domain",
    "TabulatedFunction",
    "SpectralMeasure",
    "FrequencyCharacteristic",
    "ZeroFilter",
    "KineticDiscrete",
    "KineticContinuous",
    "PolynomialLine",
    "PolynomialCircle",
    "TabulatedFilter",
    "FunctionFilter",
    "ProcessModel",
    "MODEL_KINDS",
    "fbm_constant",
    "preset_measure",
    "ell_abs2",
    "ell_value",
    "damped",
    "check_compatible",
    "total_mass",
    "covariance",
    "levy_check",
    "LevyCheck",
    "model_from_config",
    "measure_from_csv",
    "filter_from_csv",
]


class TabulatedFunction:
    """Piecewise-linear interpolant of non-negative samples on a strictly increasing grid.

    Queries outside ``[grid[0], grid[-1]]`` raise :class:`OutOfRangeError`.
    """

    def __init__(self, grid, values, name="tabulated"):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 2:
            raise ParameterError(name, "grid and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError(name, "grid must be strictly increasing")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise ParameterError(name, "values must be finite and non-negative")
        self.grid = grid
        self.values = values
        self.name = name

    @property
    def support(self):
        return float(self.grid[0]), float(self.grid[-1])

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.support
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(u < lo - slack) or np.any(u > hi + slack):
            bad = u[(u < lo - slack) | (u > hi + slack)].ravel()[0]
            raise OutOfRangeError(f"{self.name}: u={bad!r} outside tabulated range [{lo}, {hi}]")
        return np.interp(u, self.grid, self.values)


# ---------------------------------------------------------------------------
# Spectral measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralMeasure:
    """Spectral measure ``mu = f_a du + sum_j m_j delta_{u_j}``.

    Parameters
    ----------
    domain : Domain
    density : callable or None
        Vectorized absolutely continuous density ``f_a``; ``None`` means zero.
    atoms : tuple of (location, mass)
    finite : bool
        ``False`` for stationary-increment processes whose measure has infinite mass.
    hints : tuple of (location, exponent)
        Power-law singularities or zeros of the density.
    log_density : callable, optional
        ``ln f_a`` evaluated directly, for densities that underflow.
    points : tuple of float
        Kinks of the density (tabulated grids), used as plain break points.
    support : (a, b), optional
        Integration range on the line when the density vanishes outside it.
    name : str
    """

    domain: Domain
    density: Callable | None = None
    atoms: tuple = ()
    finite: bool = True
    hints: tuple = ()
    log_density: Callable | None = None
    points: tuple = ()
    support: tuple | None = None
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain.parse(self.domain))
        atoms = tuple((float(loc), float(m)) for loc, m in self.atoms)
        locs = [loc for loc, _ in atoms]
        if len(set(locs)) != len(locs):
            raise ParameterError("atoms", "duplicate atom locations")
        for loc, m in atoms:
            if not m >= 0:
                raise ParameterError("atoms", f"negative mass {m} at u={loc}")
            if self.domain is Domain.CIRCLE and not -math.pi <= loc < math.pi:
                raise ParameterError("atoms", f"location {loc} outside [-pi, pi)")
            if not math.isfinite(loc):
                raise ParameterError("atoms", "atom locations must be finite")
        if not self.finite and any(loc == 0.0 for loc in locs):
            raise ParameterError("atoms", "an infinite measure may not carry an atom at u=0")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "hints", tuple((float(a), float(b)) for a, b in self.hints))
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))

    def f(self, u):
        """Evaluate the absolutely continuous density."""
        u = np.asarray(u, dtype=float)
        if self.density is None:
            return np.zeros_like(u)
        out = np.asarray(self.density(u), dtype=float)
        return np.broadcast_to(out, u.shape) if out.shape != u.shape else out

    def log_f(self, u):
        if self.log_density is not None:
            return np.asarray(self.log_density(np.asarray(u, dtype=float)), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(self.f(u))

    @property
    def interval(self):
        if self.support is not None:
            return self.support
        return None

    def integrate_ac(self, g, tol=DEFAULT_TOL, hints=(), points=(), **kw) -> IntegralResult:
        """``int g(u) f_a(u) du`` over the domain (atoms excluded)."""
        if self.density is None:
            return IntegralResult(0.0, 0.0, 0, False)

        def integrand(u):
            gv = g(u)
            fv = self.f(u)
            with np.errstate(invalid="ignore"):
                out = gv * fv
            # g vanishing where the density blows up counts as zero
            return np.where((gv == 0) & ~np.isfinite(fv), 0.0, out)

        return integrate(
            integrand, self.domain, tol,
            hints=tuple(self.hints) + tuple(hints),
            points=tuple(self.points) + tuple(points),
            interval=kw.pop("interval", self.interval), **kw,
        )

    def integrate(self, g, tol=DEFAULT_TOL, hints=(), points=(), **kw) -> IntegralResult:
        """``int g d mu`` including the atoms, which are summed exactly."""
        res = self.integrate_ac(g, tol, hints, points, **kw)
        if not self.atoms:
            return res
        locs = np.array([a for a, _ in self.atoms])
        masses = np.array([m for _, m in self.atoms])
        atom_part = np.sum(np.asarray(g(locs)) * masses)
        value = res.value + atom_part
        if isinstance(value, complex) or np.iscomplexobj(value):
            value = complex(value)
        else:
            value = float(value)
        return IntegralResult(value, res.abs_error_estimate, res.subdivisions, res.diverged)


# ---------------------------------------------------------------------------
# Frequency characteristics
# ---------------------------------------------------------------------------

class FrequencyCharacteristic:
    """Base class; subclasses implement :meth:`abs2` returning ``|l(u)|^2``."""

    domain: Domain | None = None
    points: tuple = ()

    def abs2(self, u):
        raise NotImplementedError

    def __call__(self, u):
        return self.abs2(u)


@dataclass(frozen=True)
class ZeroFilter(FrequencyCharacteristic):
    def abs2(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class KineticDiscrete(FrequencyCharacteristic):
    """``l(u) = alpha (e^{iu} - 1)``, the penalty on ``alpha^2 |X(1) - X(0)|^2``."""

    alpha: float
    domain = Domain.CIRCLE

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha", f"must be positive, got {self.alpha}")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return self.alpha * 2j * np.sin(0.5 * u) * np.exp(0.5j * u)

    def abs2(self, u):
        # 2 alpha^2 (1 - cos u) without cancellation near u = 0
        s = np.sin(0.5 * np.asarray(u, dtype=float))
        return 4.0 * self.alpha**2 * s * s


@dataclass(frozen=True)
class KineticContinuous(FrequencyCharacteristic):
    """``l(u) = alpha i u``, the penalty on ``alpha^2 |X'(0)|^2``."""

    alpha: float
    domain = Domain.LINE

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha", f"must be positive, got {self.alpha}")

    def value(self, u):
        return 1j * self.alpha * np.asarray(u, dtype=float)

    def abs2(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            return (self.alpha * u) ** 2


def _horner(coeffs, z):
    acc = np.zeros_like(z) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc * z


@dataclass(frozen=True)
class PolynomialLine(FrequencyCharacteristic):
    """``l(u) = sum_{k>=1} c_k u^k``; ``coeffs[0]`` is ``c_1``."""

    coeffs: tuple
    domain = Domain.LINE

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ParameterError("coeffs", "at least one coefficient required")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def value(self, u):
        with np.errstate(over="ignore", invalid="ignore"):
            return _horner(self.coeffs, np.asarray(u, dtype=complex))

    def abs2(self, u):
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.abs(self.value(u)) ** 2
        return np.where(np.isnan(out), np.inf, out)


@dataclass(frozen=True)
class PolynomialCircle(FrequencyCharacteristic):
    """``l(u) = sum_{k>=1} c_k (e^{iu} - 1)^k``; ``coeffs[0]`` is ``c_1``."""

    coeffs: tuple
    domain = Domain.CIRCLE

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ParameterError("coeffs", "at least one coefficient required")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def value(self, u):
        u = np.asarray(u, dtype=float)
        z = 2j * np.sin(0.5 * u) * np.exp(0.5j * u)
        return _horner(self.coeffs, z)

    def abs2(self, u):
        return np.abs(self.value(u)) ** 2


class TabulatedFilter(FrequencyCharacteristic):
    """``|l(u)|^2`` given on a grid, linearly interpolated, no extrapolation."""

    def __init__(self, grid, abs2_values, domain=None):
        self.table = TabulatedFunction(grid, abs2_values, name="filter")
        self.domain = Domain.parse(domain) if domain is not None else None
        self.points = tuple(float(x) for x in self.table.grid[1:-1])

    def abs2(self, u):
        return self.table(u)

    def __repr__(self):
        lo, hi = self.table.support
        return f"TabulatedFilter(n={len(self.table.grid)}, range=[{lo}, {hi}])"


class FunctionFilter(FrequencyCharacteristic):
    """``|l(u)|^2`` from an arbitrary vectorized callable (``inf`` allowed)."""

    def __init__(self, func, domain=None, name="function"):
        self.func = func
        self.domain = Domain.parse(domain) if domain is not None else None
        self.name = name

    def abs2(self, u):
        with np.errstate(all="ignore"):
            out = np.asarray(self.func(np.asarray(u, dtype=float)), dtype=float)
        if np.any(out < 0):
            raise ParameterError(self.name, "squared modulus must be non-negative")
        return out

    def __repr__(self):
        return f"FunctionFilter({self.name})"


def ell_value(ell: FrequencyCharacteristic, u):
    """Complex ``l(u)`` where the variant knows its phase, else ``|l(u)|``."""
    if hasattr(ell, "value"):
        return np.asarray(ell.value(u), dtype=complex)
    return np.sqrt(np.asarray(ell.abs2(u), dtype=float)).astype(complex)


def damped(abs2):
    """``|l|^2 / (1 + |l|^2)``, equal to 1 where ``|l|^2`` is infinite."""
    abs2 = np.asarray(abs2, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        out = abs2 / (1.0 + abs2)
    return np.where(np.isinf(abs2), 1.0, out)


def check_compatible(measure_domain, ell):
    if ell.domain is not None and Domain.parse(measure_domain) is not ell.domain:
        raise DomainError(
            f"filter {type(ell).__name__} lives on the {ell.domain.value}, "
            f"measure on the {Domain.parse(measure_domain).value}"
        )


def ell_abs2(ell: FrequencyCharacteristic, u, domain=None):
    """Squared modulus of the frequency characteristic at ``u``."""
    if domain is not None:
        check_compatible(domain, ell)
    return ell.abs2(u)


# ---------------------------------------------------------------------------
# Process models
# ---------------------------------------------------------------------------

MODEL_KINDS = ("iid", "ar1", "ma1", "partial_sums", "ou", "fbm", "levy", "custom")
_ALIASES = {"partial-sums": "partial_sums", "partialsums": "partial_sums", "wiener": "levy"}


@dataclass(frozen=True)
class ProcessModel:
    """Named preset process with its parameters.

    ``V`` is the innovation variance (IID, AR1, MA1, partial sums) or
    ``Var B(1)`` (Levy); ``rho`` the AR/MA coefficient; ``H`` the Hurst index.
    """

    kind: str
    V: float = 1.0
    rho: float = 0.0
    H: float = 0.5
    measure: SpectralMeasure | None = field(default=None, compare=False)

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower(), str(self.kind).lower())
        if kind not in MODEL_KINDS:
            raise ParameterError("model", f"unknown model {self.kind!r}; expected one of {MODEL_KINDS}")
        object.__setattr__(self, "kind", kind)
        if not (math.isfinite(self.V) and self.V > 0):
            raise ParameterError("V", f"must be positive, got {self.V}")
        if not abs(self.rho) < 1:
            raise ParameterError("rho", f"must satisfy |rho| < 1, got {self.rho}")
        if not 0 < self.H <= 1:
            raise ParameterError("H", f"must lie in (0, 1], got {self.H}")
        if kind == "custom" and self.measure is None:
            raise ParameterError("measure", "custom model needs a spectral measure")

    @property
    def domain(self):
        if self.kind in ("iid", "ar1", "ma1", "partial_sums"):
            return Domain.CIRCLE
        if self.kind == "custom":
            return self.measure.domain
        return Domain.LINE


def fbm_constant(H):
    """``M_H = Gamma(2H+1) sin(pi H) / (2 pi)`` of the fBm spectral density."""
    return math.gamma(2 * H + 1) * math.sin(math.pi * H) / (2 * math.pi)


def preset_measure(model: ProcessModel) -> SpectralMeasure:
    """Exact spectral measure of a preset model."""
    V, rho, H = model.V, model.rho, model.H
    k = model.kind
    two_pi = 2 * math.pi
    if k == "iid":
        return SpectralMeasure(Domain.CIRCLE, lambda u: np.full(np.shape(u), V / two_pi),
                               name="iid")
    if k == "ar1":
        def ar1(u):
            return V / (two_pi * (1.0 - 2.0 * rho * np.cos(u) + rho * rho))
        return SpectralMeasure(Domain.CIRCLE, ar1, name="ar1")
    if k == "ma1":
        def ma1(u):
            return V * (1.0 + 2.0 * rho * np.cos(u) + rho * rho) / two_pi
        return SpectralMeasure(Domain.CIRCLE, ma1, name="ma1")
    if k == "partial_sums":
        def sums(u):
            s = np.sin(0.5 * np.asarray(u, dtype=float))
            with np.errstate(divide="ignore"):
                return V / (two_pi * 4.0 * s * s)
        return SpectralMeasure(Domain.CIRCLE, sums, finite=False, hints=((0.0, 2.0),),
                               name="partial_sums")
    if k == "ou":
        return SpectralMeasure(Domain.LINE, lambda u: 2.0 / (math.pi * (4.0 * np.asarray(u) ** 2 + 1.0)),
                               name="ou")
    if k == "fbm":
        if H == 1:
            raise UnsupportedError(
                "fBm with H=1 is the degenerate line t*xi; its spectral density vanishes identically"
            )
        MH = fbm_constant(H)
        p = 2 * H + 1

        def fbm(u):
            with np.errstate(divide="ignore", over="ignore"):
                return MH * np.abs(np.asarray(u, dtype=float)) ** (-p)

        def log_fbm(u):
            with np.errstate(divide="ignore"):
                return math.log(MH) - p * np.log(np.abs(u))

        return SpectralMeasure(Domain.LINE, fbm, finite=False, hints=((0.0, p),),
                               log_density=log_fbm, name=f"fbm(H={H})")
    if k == "levy":
        def levy(u):
            u = np.asarray(u, dtype=float)
            with np.errstate(divide="ignore"):
                return V / (two_pi * u * u)
        return SpectralMeasure(Domain.LINE, levy, finite=False, hints=((0.0, 2.0),), name="levy")
    return model.measure


# ---------------------------------------------------------------------------
# Basic spectral quantities
# ---------------------------------------------------------------------------

def total_mass(measure: SpectralMeasure, tol=DEFAULT_TOL) -> IntegralResult:
    """``mu(domain) = E|B(0)|^2``."""
    if not measure.finite:
        raise InfiniteMassError(f"measure {measure.name} has infinite mass")
    return measure.integrate(lambda u: np.ones_like(u), tol)


def covariance(measure: SpectralMeasure, t, tol=1e-10) -> IntegralResult:
    """``K(t) = int e^{itu} mu(du)``.

    On the line the oscillatory tails beyond a cut-off are handled by
    QUADPACK's Fourier-integral routine.
    """
    if not measure.finite:
        raise InfiniteMassError(f"measure {measure.name} has infinite mass")
    t = float(t)
    if t == 0.0:
        res = total_mass(measure, tol)
        return IntegralResult(complex(res.value), res.abs_error_estimate, res.subdivisions, res.diverged)

    def phase(u):
        return np.exp(1j * t * np.asarray(u))

    if measure.domain is Domain.CIRCLE or measure.support is not None:
        res = measure.integrate(phase, tol)
        return IntegralResult(complex(res.value), res.abs_error_estimate, res.subdivisions, res.diverged)

    reach = max([1.0] + [abs(loc) for loc, _ in measure.hints] + [abs(loc) for loc, _ in measure.atoms])
    X = 10.0 * reach
    core = measure.integrate(phase, 0.5 * tol, interval=(-X, X))
    omega = abs(t)
    sign = 1.0 if t > 0 else -1.0

    def dens(x):
        return float(measure.f(np.array([x]))[0])

    def dens_neg(x):
        return float(measure.f(np.array([-x]))[0])

    parts, errs = [], [core.abs_error_estimate]
    for fn in (dens, dens_neg):
        c, ec = sp_integrate.quad(fn, X, np.inf, weight="cos", wvar=omega, epsabs=tol / 8, limlst=200)
        s, es = sp_integrate.quad(fn, X, np.inf, weight="sin", wvar=omega, epsabs=tol / 8, limlst=200)
        parts.append((c, s))
        errs.extend([ec, es])
    (c_pos, s_pos), (c_neg, s_neg) = parts
    # int_X^inf f(u) e^{itu} du + int_X^inf f(-v) e^{-itv} dv
    tails = complex(c_pos + c_neg, sign * (s_pos - s_neg))
    err = float(sum(errs))
    return IntegralResult(complex(core.value) + tails, err, core.subdivisions, core.diverged or err > tol)


class LevyCheck(NamedTuple):
    passed: bool
    value: float
    result: IntegralResult


def levy_check(measure: SpectralMeasure, tol=1e-9) -> LevyCheck:
    """Levy integrability of a (possibly infinite) spectral measure.

    Circle: ``int u^2 mu(du) < inf``; line: ``int min(u^2, 1) mu(du) < inf``.
    Divergence is reported as a failed check, not raised.
    """
    if measure.domain is Domain.CIRCLE:
        res = measure.integrate(lambda u: np.asarray(u) ** 2, tol)
    else:
        res = measure.integrate(lambda u: np.minimum(np.asarray(u) ** 2, 1.0), tol, points=(-1.0, 1.0))
    value = float(np.real(res.value))
    return LevyCheck(not res.diverged and math.isfinite(value), value, res)


# ---------------------------------------------------------------------------
# Configuration documents
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {"model", "V", "rho", "H", "density_csv", "domain"}


def _read_two_column_csv(path, names):
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParameterError("density_csv", f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParameterError("density_csv", f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if [h.lower() for h in header] != [n.lower() for n in names]:
        raise ParameterError("density_csv", f"{path}: header row must be {','.join(names)}, got {','.join(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        try:
            data.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            raise ParameterError("density_csv", f"{path}:{lineno}: malformed row {row}") from None
    arr = np.array(data, dtype=float)
    if arr.ndim != 2 or len(arr) < 2:
        raise ParameterError("density_csv", f"{path}: need at least two data rows")
    return arr[:, 0], arr[:, 1]


def measure_from_csv(path, domain) -> SpectralMeasure:
    """Tabulated density from a CSV with header ``u,f_a``.

    On the circle the grid must cover ``[-pi, pi]``.  On the line the density
    is taken to be supported on the grid range; integrals run over that range.
    """
    domain = Domain.parse(domain)
    u, fa = _read_two_column_csv(path, ("u", "f_a"))
    table = TabulatedFunction(u, fa, name="density")
    lo, hi = table.support
    support = None
    if domain is Domain.CIRCLE:
        if lo > -math.pi + 1e-9 or hi < math.pi - 1e-9:
            raise ParameterError("density_csv", f"circle density must cover [-pi, pi], got [{lo}, {hi}]")
        inside = table.grid[(table.grid > -math.pi) & (table.grid < math.pi)]
    else:
        support = (lo, hi)
        inside = table.grid[1:-1]
    zeros = table.grid[table.values == 0.0]
    hints = tuple((float(z), 1.0) for z in zeros if (domain is Domain.LINE or -math.pi <= z < math.pi))
    return SpectralMeasure(domain, table, points=tuple(inside), support=support,
                           hints=hints, name=f"csv:{Path(path).name}")


def filter_from_csv(path, domain=None) -> TabulatedFilter:
    """Tabulated ``|l(u)|^2`` from a CSV with header ``u,abs2``."""
    u, a2 = _read_two_column_csv(path, ("u", "abs2"))
    return TabulatedFilter(u, a2, domain=domain)


def model_from_config(cfg: dict, base_dir=None) -> ProcessModel:
    """Build a :class:`ProcessModel` from a JSON-style mapping.

    ``{"model": "ar1", "V": 1.0, "rho": 0.5}`` or
    ``{"model": "custom", "density_csv": "f.csv", "domain": "circle"}``.
    """
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ParameterError(sorted(unknown)[0], "unknown configuration key")
    if "model" not in cfg:
        raise ParameterError("model", "missing")
    kind = cfg["model"]
    params = {}
    for key in ("V", "rho", "H"):
        if key in cfg and cfg[key] is not None:
            try:
                params[key] = float(cfg[key])
            except (TypeError, ValueError):
                raise ParameterError(key, f"not a number: {cfg[key]!r}") from None
    if str(kind).lower() == "custom":
        if "density_csv" not in cfg:
            raise ParameterError("density_csv", "custom model needs a density CSV")
        path = Path(cfg["density_csv"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        measure = measure_from_csv(path, cfg.get("domain", "circle"))
        return ProcessModel("custom", measure=measure, **params)
    return ProcessModel(kind, **params)
