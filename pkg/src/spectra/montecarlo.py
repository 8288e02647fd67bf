"""
Monte Carlo checks of the spectral predictions.

*Spectral synthesis* replaces the orthogonal random measure by independent
complex circular Gaussians ``Z_j`` on a frequency grid, with
``E|Z_j|^2 = mu(cell_j)``.  For a multiplier ``psi`` each sample of the
functional is ``|sum (psi_j - 1) Z_j|^2 + |sum l_j psi_j Z_j|^2``, an unbiased
estimate of the grid-level value of ``G(psi)``.

*Time-domain experiments* simulate AR(1), MA(1) or white-noise paths, apply
the truncated geometric kernel and average the penalized error along the
path.

Random numbers come from Philox counter-based generators.  Batch ``b`` of a
run with seed ``s`` always uses ``SeedSequence(s, spawn_key=(b,))``, whatever
the number of worker threads, and batch results are reduced in batch order,
so estimates are bit-for-bit reproducible.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .domain import Domain
from .errors import ParameterError, SizingError, UnsupportedError
from .nonadaptive import closed_form_sigma2, discrete_kernel, optimal_psi
from .quadrature import integrate_cells
from .spectral_model import (
    FrequencyCharacteristic,
    ProcessModel,
    SpectralMeasure,
    check_compatible,
    ell_value,
    preset_measure,
    total_mass,
)
from .variational import _as_multiplier, objective_value

__all__ = [
    "SynthesisGrid",
    "MonteCarloEstimate",
    "build_grid",
    "grid_functional",
    "estimate_functional",
    "time_domain_experiment",
    "DEFAULT_BATCH",
    "DEFAULT_WINDOW",
]

DEFAULT_BATCH = 8192
DEFAULT_WINDOW = 1e4
MIN_SAMPLES = 1000


def _rng(seed, batch):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


@dataclass(frozen=True)
class SynthesisGrid:
    """Frequencies and cell masses for spectral synthesis.

    ``excluded`` lists the cells ``(a, b)`` left out around singular points of
    an infinite measure; ``tail_mass`` is the finite-measure mass outside the
    window and the excluded cells.
    """

    frequencies: np.ndarray
    masses: np.ndarray
    edges: np.ndarray
    domain: Domain
    increments: bool
    window: float | None
    excluded: tuple = ()
    tail_mass: float = 0.0

    @property
    def size(self):
        return len(self.frequencies)


def build_grid(measure: SpectralMeasure, M: int = 256, window: float = DEFAULT_WINDOW, *,
               increments: bool | None = None, scale: float = 1.0, tail_budget: float = 0.01,
               refine: int = 40, tol: float = 1e-10) -> SynthesisGrid:
    """Discretize a spectral measure into ``M`` cells plus its atoms.

    Parameters
    ----------
    measure : SpectralMeasure
    M : int
        Number of cells, at least 16.
    window : float
        Line only: cells cover ``[-window, window]``, graded as
        ``scale * tan(theta)`` with ``theta`` uniform, so they are fine near
        the origin and coarse far out.
    increments : bool, optional
        Stationary-increments mode; defaults to ``not measure.finite``.  The
        cells next to each hinted singular point are graded geometrically
        toward it over ``refine`` halvings and the innermost pair is left out.
    tail_budget : float
        Finite measures: largest admissible fraction of the total mass left
        outside the grid.

    Raises
    ------
    SizingError
        If the truncated tail mass exceeds ``tail_budget`` of the total.
    """
    if int(M) != M or M < 16:
        raise ParameterError("grid", f"need at least 16 cells, got {M}")
    M = int(M)
    if increments is None:
        increments = not measure.finite
    if measure.domain is Domain.CIRCLE:
        edges = np.linspace(-math.pi, math.pi, M + 1)
        freqs = 0.5 * (edges[:-1] + edges[1:])
        window = None
    else:
        if not window > 0:
            raise ParameterError("window", f"must be positive, got {window}")
        th = math.atan(window / scale)
        theta = np.linspace(-th, th, M + 1)
        edges = scale * np.tan(theta)
        freqs = scale * np.tan(0.5 * (theta[:-1] + theta[1:]))
        if measure.support is not None:
            lo, hi = measure.support
            edges = np.clip(edges, lo, hi)
    excluded = []
    if increments:
        for loc in (loc for loc, _ in measure.hints):
            edges, freqs, gap = _refine_at(edges, freqs, loc, refine)
            if gap is not None:
                excluded.append(gap)
        # every cell of an increment grid gets a moment-matched frequency
        freqs = np.full(len(freqs), np.nan)
    keep = np.ones(len(freqs), bool)
    for lo_x, hi_x in excluded:
        keep &= ~((edges[:-1] >= lo_x) & (edges[1:] <= hi_x))
    masses = np.zeros(len(freqs))
    if measure.density is not None and keep.any():
        cell_lo, cell_hi = edges[:-1][keep], edges[1:][keep]
        vals, _ = _split_cells(measure.f, cell_lo, cell_hi, tol, measure.hints)
        masses[keep] = vals
    graded = np.isnan(freqs)
    if graded.any():
        # centre of |l|^2-type weights: u_j^2 = int u^2 f / int f over the cell
        lo_g, hi_g = edges[:-1][graded], edges[1:][graded]
        second, _ = _split_cells(lambda u: u * u * measure.f(u) if measure.density is not None else 0 * u,
                                 lo_g, hi_g, tol * 1e-6, measure.hints)
        with np.errstate(invalid="ignore", divide="ignore"):
            rep = np.sqrt(second / masses[graded])
        rep = np.where(np.isfinite(rep) & (rep >= np.abs(np.minimum(np.abs(lo_g), np.abs(hi_g)))),
                       rep, np.sqrt(np.abs(lo_g * hi_g)))
        freqs[graded] = np.sign(lo_g + hi_g) * rep
    freqs, masses = freqs[keep], masses[keep]
    if measure.atoms:
        a_loc = np.array([a for a, _ in measure.atoms])
        a_mass = np.array([m for _, m in measure.atoms])
        inside = np.ones(len(a_loc), bool) if window is None else np.abs(a_loc) <= window
        freqs = np.concatenate([freqs, a_loc[inside]])
        masses = np.concatenate([masses, a_mass[inside]])
    tail = 0.0
    if measure.finite:
        total = total_mass(measure, tol).value
        tail = max(total - math.fsum(masses), 0.0)
        if tail > tail_budget * total:
            raise SizingError(
                f"window {window} leaves mass {tail:.3g} outside the grid (budget {tail_budget * total:.3g})"
            )
    return SynthesisGrid(freqs, masses, edges, measure.domain, bool(increments), window,
                         tuple(excluded), float(tail))


def _refine_at(edges, freqs, loc, levels):
    """Grade the cells next to ``loc`` geometrically toward it.

    Returns new edges and representative frequencies plus the interval
    around ``loc`` left out of the grid (``None`` if ``loc`` is outside).
    Graded cells get ``nan`` frequencies, filled in later from moments.
    """
    if not edges[0] <= loc <= edges[-1]:
        return edges, freqs, None
    j = int(np.searchsorted(edges, loc))
    if edges[j] != loc:
        # split the cell containing loc
        edges = np.insert(edges, j, loc)
        freqs = np.insert(freqs, j - 1, np.nan)
    k = 2.0 ** -np.arange(1, levels + 1)
    left_w = loc - edges[j - 1] if j > 0 else 0.0
    right_w = edges[j + 1] - loc if j + 1 < len(edges) else 0.0
    lo_part = loc - left_w * k if left_w > 0 else np.zeros(0)
    hi_part = loc + right_w * k[::-1] if right_w > 0 else np.zeros(0)
    n_cells = len(edges) - 1
    has_left, has_right = j > 0, j < n_cells
    edges = np.concatenate([edges[:j], lo_part, [loc], hi_part, edges[j + 1:]])
    first = j - 1 if has_left else j
    count = (len(lo_part) + 1 if has_left else 0) + (len(hi_part) + 1 if has_right else 0)
    freqs = np.concatenate([freqs[:first], np.full(count, np.nan), freqs[j + 1 if has_right else j:]])
    gap = (float(lo_part[-1]) if len(lo_part) else loc, float(hi_part[0]) if len(hi_part) else loc)
    return edges, freqs, gap


def _split_cells(f, lo, hi, tol, hints):
    vals, errs = [], []
    breaks = np.flatnonzero(lo[1:] != hi[:-1]) + 1
    for a, b in zip(np.split(lo, breaks), np.split(hi, breaks)):
        v, e = integrate_cells(f, np.append(a, b[-1]), tol, hints=hints)
        vals.append(v); errs.append(e)
    return np.concatenate(vals), np.concatenate(errs)


def _weights(grid, ell, psi):
    psi = _as_multiplier(psi)
    u = grid.frequencies
    pv = np.asarray(psi(u), dtype=complex)
    a = np.asarray(psi.minus_one(u), dtype=complex)
    lv = ell_value(ell, u)
    with np.errstate(invalid="ignore"):
        c = np.where(pv == 0, 0.0, lv * pv)
    return a, c


def grid_functional(grid: SynthesisGrid, ell, psi) -> float:
    """Exact grid-level ``sum m_j (|psi_j - 1|^2 + |l_j psi_j|^2)``."""
    a, c = _weights(grid, ell, psi)
    return math.fsum(grid.masses * (np.abs(a) ** 2 + np.abs(c) ** 2))


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean of the penalized error with its standard error.

    ``theory`` is the quadrature value of the functional (``None`` when not
    computed); ``grid_bias_bound`` is ``|theory_grid - theory|``, the
    discretization bias of the synthesis grid.
    """

    mean: float
    std_error: float
    n: int
    seed: int
    grid_bias_bound: float
    theory: float | None = None
    theory_grid: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def z_score(self):
        if self.theory is None or self.std_error == 0:
            return 0.0 if self.theory is None or self.mean == self.theory else math.copysign(math.inf, self.mean - self.theory)
        return (self.mean - self.theory) / self.std_error


def _batch_moments(seed, b, size, sd, W):
    rng = _rng(seed, b)
    X = rng.standard_normal((size, len(sd)))
    Y = rng.standard_normal((size, len(sd)))
    P = X @ W
    Q = Y @ W
    # (X + iY) @ (w a) with a = ar + i ai: real part P0 - Q1, imaginary P1 + Q0
    s1 = (P[:, 0] - Q[:, 1]) ** 2 + (P[:, 1] + Q[:, 0]) ** 2
    s2 = (P[:, 2] - Q[:, 3]) ** 2 + (P[:, 3] + Q[:, 2]) ** 2
    v = s1 + s2
    return math.fsum(v), math.fsum(v * v)


def estimate_functional(measure: SpectralMeasure, ell: FrequencyCharacteristic, psi=None, n: int = 10**6,
                        seed: int = 0, *, grid: SynthesisGrid | None = None, M: int = 256,
                        window: float = DEFAULT_WINDOW, threads: int = 1, batch: int = DEFAULT_BATCH,
                        theory: bool = True, tol: float = 1e-10) -> MonteCarloEstimate:
    """Spectral-synthesis estimate of ``E|xi - B(0)|^2 + E|L xi|^2``.

    Parameters
    ----------
    measure, ell
    psi : callable, optional
        Multiplier defining ``xi``; defaults to the optimal one.
    n : int
        Number of samples, at least 1000.
    seed : int
        Master seed; see the module notes on stream splitting.
    grid : SynthesisGrid, optional
        Prebuilt grid; otherwise ``build_grid(measure, M, window)``.
    threads : int
        Worker threads; the result does not depend on it.
    theory : bool
        Also compute the quadrature value of the functional.
    """
    check_compatible(measure.domain, ell)
    if int(n) != n or n < MIN_SAMPLES:
        raise ParameterError("n", f"need at least {MIN_SAMPLES} samples, got {n}")
    if int(threads) != threads or threads < 1:
        raise ParameterError("threads", f"must be a positive integer, got {threads}")
    if batch < 1:
        raise ParameterError("batch", "must be positive")
    n, threads = int(n), int(threads)
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ParameterError("seed", "must be a 64-bit unsigned integer")
    if psi is None:
        psi = optimal_psi(ell)
    psi = _as_multiplier(psi)
    if grid is None:
        grid = build_grid(measure, M, window, tol=tol)
    a, c = _weights(grid, ell, psi)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c))):
        raise UnsupportedError("multiplier is not finite on the synthesis grid")
    sd = np.sqrt(0.5 * grid.masses)
    W = np.column_stack([sd * a.real, sd * a.imag, sd * c.real, sd * c.imag])
    sizes = [batch] * (n // batch) + ([n % batch] if n % batch else [])
    jobs = list(enumerate(sizes))
    if threads == 1:
        parts = [_batch_moments(seed, b, size, sd, W) for b, size in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _batch_moments(seed, job[0], job[1], sd, W), jobs))
    s = math.fsum(p[0] for p in parts)
    ss = math.fsum(p[1] for p in parts)
    mean = s / n
    var = max(ss / n - mean * mean, 0.0) * n / (n - 1)
    se = math.sqrt(var / n)
    tg = grid_functional(grid, ell, psi)
    th = None
    bias = 0.0
    if theory:
        ov = objective_value(measure, ell, psi, tol)
        if ov.infinite:
            raise UnsupportedError("the functional is infinite for this multiplier "
                                   "(psi - 1 and l psi must be square integrable against the measure)")
        th = ov.value
        bias = abs(tg - th)
    extra = {"grid_cells": grid.size, "tail_mass": grid.tail_mass, "excluded": list(grid.excluded),
             "batches": len(sizes), "batch_size": batch}
    return MonteCarloEstimate(mean, se, n, seed, bias, th, tg, extra)


_TIME_MODELS = ("iid", "ar1", "ma1")


def _simulate_path(model: ProcessModel, n, rng):
    V, rho = model.V, model.rho
    xi = math.sqrt(V) * rng.standard_normal(n + 1)
    if model.kind == "iid":
        return xi[1:]
    if model.kind == "ma1":
        return xi[1:] + rho * xi[:-1]
    # stationary start B(0) ~ N(0, V/(1-rho^2)), then B(t) = rho B(t-1) + xi(t)
    b0 = xi[0] / math.sqrt(1.0 - rho * rho)
    out, _ = signal.lfilter([1.0], [1.0, -rho], xi[1:], zi=[rho * b0])
    return out


def time_domain_experiment(model: ProcessModel, alpha: float, n_steps: int = 10**6,
                           truncation_tol: float = 1e-10, seed: int = 0, n_blocks: int = 100) -> MonteCarloEstimate:
    """Path-wise check of the discrete kernel on AR(1), MA(1) or white noise.

    The kernel ``X(t) = sum_{|k|<=K} w_k B(t-k)`` is applied to a simulated
    path and ``|X(t) - B(t)|^2 + alpha^2 |X(t+1) - X(t)|^2`` is averaged over
    the interior points, away from the edges by ``K``.  The standard error
    comes from ``n_blocks`` contiguous block means, which absorbs the serial
    correlation of the summands.

    Raises
    ------
    SizingError
        If ``n_steps`` leaves fewer than ``n_blocks`` interior points per block
        after the margins.
    """
    if model.kind not in _TIME_MODELS:
        raise UnsupportedError(f"time-domain experiments support {_TIME_MODELS}, not {model.kind!r}")
    alpha = float(alpha)
    if alpha < 0:
        raise ParameterError("alpha", f"must be non-negative, got {alpha}")
    kernel = discrete_kernel(alpha, truncation_tol)
    K = kernel.truncation_K
    n_steps = int(n_steps)
    interior = n_steps - 2 * K - 1
    if n_blocks < 2 or interior < 10 * n_blocks:
        raise SizingError(f"n_steps={n_steps} too small for kernel margin K={K} and {n_blocks} blocks")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    B = _simulate_path(model, n_steps, rng)
    X = np.convolve(B, kernel.bilateral(), mode="valid")    # X[i] is centred at t = i + K
    Bc = B[K:n_steps - K]
    err = np.abs(X[:-1] - Bc[:-1]) ** 2 + alpha * alpha * np.abs(np.diff(X)) ** 2
    m = (len(err) // n_blocks) * n_blocks
    blocks = err[:m].reshape(n_blocks, -1).mean(axis=1)
    mean = float(math.fsum(err[:m]) / m)
    se = float(np.std(blocks, ddof=1) / math.sqrt(n_blocks))
    th = closed_form_sigma2(model, alpha) if alpha > 0 else 0.0
    extra = {"kernel_K": K, "kernel_tail_bound": kernel.tail_bound, "n_blocks": n_blocks,
             "block_length": m // n_blocks}
    return MonteCarloEstimate(mean, se, m, int(seed), kernel.tail_bound, th, None, extra)
