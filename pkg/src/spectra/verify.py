"""
Self-verification suite.

Every check recomputes a closed-form result through an independent route
(quadrature, brute-force Galerkin, Monte Carlo, arithmetic) and compares at
a fixed tolerance.  :func:`run_suite` returns one :class:`CheckResult` per
check; the CLI ``verify`` subcommand exits non-zero unless all pass.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .criteria import HorizonKind, no_loss_horizon, regularity_limit, trig_poly_degree
from .domain import Domain
from .interpolation import galerkin_sequence, interpolation_residuals, sigma2_interpolation
from .montecarlo import estimate_functional, time_domain_experiment
from .nonadaptive import (
    closed_form_sigma2,
    discrete_kernel,
    discrete_to_continuous_limit,
    optimal_psi,
    sigma2_nonadaptive,
)
from .spectral_model import (
    FunctionFilter,
    KineticContinuous,
    KineticDiscrete,
    ProcessModel,
    SpectralMeasure,
    ZeroFilter,
    covariance,
    levy_check,
    preset_measure,
)
from .variational import MultiplierFunction, euler_residual, quadratic_expansion, random_trig_polynomial

__all__ = ["CheckResult", "CHECKS", "run_suite", "SWEEP_MODELS", "SWEEP_ALPHAS", "FINITE_PRESETS"]

QUAD_TOL = 1e-11
SWEEP_ALPHAS = (0.1, 1.0, 5.0)
SWEEP_MODELS = (
    ProcessModel("iid"),
    ProcessModel("ar1", rho=-0.5),
    ProcessModel("ar1", rho=0.5),
    ProcessModel("ar1", rho=0.9),
    ProcessModel("ma1", rho=0.4),
    ProcessModel("partial_sums"),
    ProcessModel("ou"),
    ProcessModel("fbm", H=0.25),
    ProcessModel("fbm", H=0.5),
    ProcessModel("fbm", H=0.75),
    ProcessModel("levy"),
)
FINITE_PRESETS = (
    ProcessModel("iid"),
    ProcessModel("ar1", rho=0.5),
    ProcessModel("ma1", rho=0.4),
    ProcessModel("ou"),
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "summary": self.summary,
                "seconds": self.seconds, **self.details}


def kinetic_for(model: ProcessModel, alpha):
    return KineticDiscrete(alpha) if model.domain is Domain.CIRCLE else KineticContinuous(alpha)


def _label(model):
    k = model.kind
    if k in ("ar1", "ma1"):
        return f"{k}(rho={model.rho:g})"
    if k == "fbm":
        return f"fbm(H={model.H:g})"
    return k


def check_closed_forms(**_):
    """Closed form against quadrature across the preset sweep."""
    worst, where = 0.0, ""
    rows = []
    for model in SWEEP_MODELS:
        measure = preset_measure(model)
        for a in SWEEP_ALPHAS:
            exact = closed_form_sigma2(model, a)
            got = sigma2_nonadaptive(measure, kinetic_for(model, a)).sigma2
            rel = abs(got - exact) / exact
            rows.append({"model": _label(model), "alpha": a, "quadrature": got, "closed_form": exact, "rel_err": rel})
            if rel > worst:
                worst, where = rel, f"{_label(model)} alpha={a:g}"
    return worst <= 1e-6, f"worst relative error {worst:.3g} at {where}", {"worst_rel_err": worst, "rows": rows}


def check_ou_exact(**_):
    got = sigma2_nonadaptive(preset_measure(ProcessModel("ou")), KineticContinuous(2.0)).sigma2
    err = abs(got - 0.5)
    return err <= 1e-8, f"OU alpha=2: sigma2={got:.15g}, |err|={err:.3g}", {"sigma2": got, "abs_err": err}


def check_fbm_levy(**_):
    fbm = preset_measure(ProcessModel("fbm", H=0.5))
    levy = preset_measure(ProcessModel("levy"))
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        s1 = sigma2_nonadaptive(fbm, KineticContinuous(a)).sigma2
        s2 = sigma2_nonadaptive(levy, KineticContinuous(a)).sigma2
        worst = max(worst, abs(s1 - s2) / abs(s2))
    return worst <= 1e-9, f"fBm(H=1/2) vs Levy: worst relative gap {worst:.3g}", {"worst_rel_gap": worst}


def check_kernel(**_):
    a = 1.0
    k = discrete_kernel(a, tail_tol=1e-10)
    u = np.linspace(-math.pi, math.pi, 256)
    err = float(np.max(np.abs(k.fourier_series(u) - 1.0 / (1.0 + 2 * a * a * (1 - np.cos(u))))))
    return err <= 1e-9, f"K={k.truncation_K}, max error {err:.3g} on 256 points", \
        {"K": k.truncation_K, "max_err": err, "tail_bound": k.tail_bound}


def check_euler_and_expansion(n_directions=100, **_):
    worst_res = 0.0
    worst_ratio = 0.0
    for model in FINITE_PRESETS:
        measure = preset_measure(model)
        ell = kinetic_for(model, 1.0)
        psi = optimal_psi(ell)
        for s in range(-10, 11):
            if s == 0:
                continue
            h = MultiplierFunction(lambda u, s=s: np.exp(1j * s * np.asarray(u, dtype=float)), name=f"e^{s}iu")
            worst_res = max(worst_res, abs(euler_residual(measure, ell, psi, h)))
        rngs = [np.random.Generator(np.random.Philox(ss)) for ss in np.random.SeedSequence(2024).spawn(n_directions)]
        for rng in rngs:
            h = random_trig_polynomial(rng, measure.domain)
            lhs, rhs, err = quadratic_expansion(measure, ell, psi, h, 0.1, tol=QUAD_TOL)
            # three quadratures, each accurate to QUAD_TOL
            worst_ratio = max(worst_ratio, abs(lhs - rhs) / max(err, 3 * QUAD_TOL))
    ok = worst_res < 1e-8 and worst_ratio <= 1.0
    return ok, (f"max Euler residual {worst_res:.3g}; quadratic expansion worst |lhs-rhs|/tolerance = {worst_ratio:.3g} "
                f"over {n_directions} directions per preset"), \
        {"max_euler_residual": worst_res, "expansion_worst_ratio": worst_ratio, "directions": n_directions}


def check_interpolation(**_):
    iid = preset_measure(ProcessModel("iid"))
    a = sigma2_interpolation(iid, ZeroFilter()).sigma2_int
    ar = preset_measure(ProcessModel("ar1", rho=0.5))
    ell = KineticDiscrete(1.0)
    rep = sigma2_interpolation(ar, ell)
    seq = galerkin_sequence(ar, ell, [1, 2, 5, 10, 20, 50])
    objs = [o for _, o, _ in seq]
    gap50 = objs[-1] - rep.sigma2_int
    # differences below 1e-12 are quadrature noise once the sequence has converged
    monotone = all(b <= a_ + 1e-12 for a_, b in zip(objs, objs[1:]))
    res = interpolation_residuals(ar, ell, rep, s_max=10)
    rmax = max(abs(v) for v in res.values())
    ok = abs(a - 1.0) <= 1e-8 and -1e-12 <= gap50 <= 1e-3 and monotone and rmax < 1e-8
    return ok, (f"IID sigma_int^2={a:.12g}; AR1 galerkin(50)-sigma_int^2={gap50:.3g}, monotone={monotone}; "
                f"residual max {rmax:.3g}"), \
        {"iid_sigma2_int": a, "ar1_sigma2_int": rep.sigma2_int, "galerkin": [[S, o] for S, o, _ in seq],
         "gap50": gap50, "monotone": monotone, "residual_max": rmax}


def check_criteria(**_):
    const = FunctionFilter(lambda u: np.full(np.shape(u), 2.0), domain="circle", name="const")
    deg1 = FunctionFilter(lambda u: np.tan(0.5 * np.asarray(u)) ** 2, domain="circle", name="tan2")
    iid = preset_measure(ProcessModel("iid"))
    v0 = no_loss_horizon(iid, const)
    v1 = no_loss_horizon(iid, deg1)
    vk = no_loss_horizon(iid, KineticDiscrete(1.0), maxdeg=64)
    singular = SpectralMeasure(Domain.CIRCLE, lambda u: np.exp(-1.0 / np.abs(u)), hints=((0.0, 0.0),),
                               name="exp(-1/|u|)")
    vs = no_loss_horizon(singular, KineticDiscrete(1.0))
    base = preset_measure(ProcessModel("ar1", rho=0.0))
    with_atom = SpectralMeasure(Domain.CIRCLE, base.density, atoms=((1.0, 0.5),), name="ar1+atom")
    r0 = regularity_limit(with_atom, ZeroFilter())
    ar = preset_measure(ProcessModel("ar1", rho=0.5))
    ar_atom = SpectralMeasure(Domain.CIRCLE, ar.density, atoms=((1.0, 0.5),), name="ar1(0.5)+atom")
    r1 = regularity_limit(ar_atom, KineticDiscrete(1.0))
    hand1 = 1.0 / 0.75 + 0.5 - 0.5 / (1.0 + 4.0 * math.sin(0.5) ** 2)
    checks = {
        "constant": v0.kind is HorizonKind.FINITE_DEGREE and v0.t == 0,
        "degree_one": v1.kind is HorizonKind.FINITE_DEGREE and v1.t == 1,
        "kinetic": vk.kind is HorizonKind.NEVER_FINITE_T,
        "singular": vs.kind is HorizonKind.ALL_T_SINGULAR,
        "regularity_zero_filter": abs(r0 - 1.0) <= 1e-8,
        "regularity_kinetic": abs(r1 - hand1) <= 1e-8,
    }
    summary = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items())
    return all(checks.values()), summary, {"verdicts": [v.kind.value for v in (v0, v1, vk, vs)],
                                           "regularity": [r0, r1], "hand": [1.0, hand1], **checks}


def check_monte_carlo(n=10**6, n_steps=10**6, seed=0, threads=1, **_):
    ou = preset_measure(ProcessModel("ou"))
    est = estimate_functional(ou, KineticContinuous(2.0), n=n, seed=seed, threads=threads)
    z1 = (est.mean - 0.5) / est.std_error
    ar = ProcessModel("ar1", rho=0.5)
    td = time_domain_experiment(ar, 1.0, n_steps, seed=seed)
    exact = closed_form_sigma2(ar, 1.0)
    dev = abs(td.mean - exact)
    ok = abs(z1) <= 3 and dev <= 3 * td.std_error + td.grid_bias_bound
    return ok, (f"OU spectral {est.mean:.6f} +- {est.std_error:.2g} (z={z1:.2f}); AR1 time domain "
                f"{td.mean:.6f} +- {td.std_error:.2g} vs {exact:.6f}"), \
        {"spectral_mean": est.mean, "spectral_se": est.std_error, "spectral_z": z1,
         "grid_bias_bound": est.grid_bias_bound, "time_mean": td.mean, "time_se": td.std_error,
         "time_exact": exact, "kernel_tail_bound": td.grid_bias_bound}


def limit_rates(alpha=1.0, V=1.0, kmin=4, kmax=14):
    """Rows of the rescaling study and fitted log-log rates."""
    deltas = [2.0 ** -k for k in range(kmin, kmax + 1)]
    rows = discrete_to_continuous_limit(alpha, deltas, V)
    a = np.array([r.alpha_delta for r in rows])
    e_gap = np.array([r.e_gap for r in rows])
    s_gap = np.array([r.sigma2_gap for r in rows])
    d = np.array(deltas)
    e_slope = float(np.polyfit(np.log(a), np.log(e_gap), 1)[0])
    s_slope = float(np.polyfit(np.log(d), np.log(s_gap), 1)[0])
    return rows, {"C_fit": float(np.max(e_gap * a)), "e_gap_slope_in_alpha": e_slope,
                  "sigma2_gap_slope_in_delta": s_slope}


def check_limit(**_):
    rows, fit = limit_rates()
    bpa = [r.beta_pow_alpha for r in rows]
    gaps = [r.e_gap for r in rows]
    monotone = all(b > a for a, b in zip(bpa, bpa[1:])) and all(g > 0 for g in gaps)
    C = fit["C_fit"]
    bound = all(g <= C / r.alpha_delta * (1 + 1e-12) for g, r in zip(gaps, rows))
    sig_mono = all(abs(b.sigma2_gap) < abs(a.sigma2_gap) for a, b in zip(rows, rows[1:]))
    ok = monotone and bound and fit["e_gap_slope_in_alpha"] <= -1 + 1e-3 and sig_mono \
        and fit["sigma2_gap_slope_in_delta"] >= 1 - 1e-3
    return ok, (f"beta^alpha -> e monotone={monotone}, C={C:.3g}, e-gap slope {fit['e_gap_slope_in_alpha']:.3f} in alpha; "
                f"sigma2 gap slope {fit['sigma2_gap_slope_in_delta']:.3f} in delta"), \
        {**fit, "monotone": monotone, "sigma2_monotone": sig_mono}


def check_determinism(n=20000, seed=7, **_):
    from .cli import run_capture

    outs = []
    for th in (1, 2, 8):
        code, out, _ = run_capture(["simulate", "--mode", "spectral", "--model", "ou", "--alpha", "2",
                                    "--n", str(n), "--seed", str(seed), "--threads", str(th)])
        outs.append((code, out))
    same = all(o == outs[0] for o in outs) and outs[0][0] == 0
    return same, f"simulate output identical across 1/2/8 threads: {same}", {"outputs": [o for _, o in outs[:1]]}


def check_model_invariants(**_):
    """Covariances, Levy integrability and the nonadaptive cross-check."""
    ou = preset_measure(ProcessModel("ou"))
    c2 = covariance(ou, 2.0).value
    ar = preset_measure(ProcessModel("ar1", rho=0.5))
    c1 = covariance(ar, 1).value
    levy_ok = levy_check(preset_measure(ProcessModel("levy"))).passed and \
        levy_check(preset_measure(ProcessModel("fbm", H=0.75))).passed
    gaps = [sigma2_nonadaptive(preset_measure(m), kinetic_for(m, 1.0)).cross_check_gap for m in FINITE_PRESETS]
    ok = abs(c2 - math.exp(-1)) < 1e-9 and abs(c1 - 2 / 3) < 1e-9 and levy_ok and max(gaps) < 1e-9
    return ok, f"OU cov(2)={c2.real:.12g}, AR1 cov(1)={c1.real:.12g}, Levy checks={levy_ok}, max cross gap {max(gaps):.2g}", \
        {"ou_cov2": float(np.real(c2)), "ar1_cov1": float(np.real(c1)), "levy_ok": levy_ok, "cross_gaps": gaps}


def check_time_vs_spectral(n_cross=2 * 10**5, n_steps=10**6, seed=11, **_):
    worst = 0.0
    for m in (ProcessModel("iid"), ProcessModel("ar1", rho=0.5), ProcessModel("ma1", rho=0.4)):
        td = time_domain_experiment(m, 1.0, n_steps, seed=seed)
        sp = estimate_functional(preset_measure(m), KineticDiscrete(1.0), n=n_cross, seed=seed)
        z = (abs(td.mean - sp.mean) - td.grid_bias_bound - sp.grid_bias_bound) / math.hypot(td.std_error, sp.std_error)
        worst = max(worst, z)
    return worst <= 3, f"worst combined z between time-domain and spectral estimates {worst:.2f}", {"worst_z": worst}


CHECKS = (
    ("1 closed form vs quadrature", check_closed_forms),
    ("2 OU exact value", check_ou_exact),
    ("3 fBm(1/2) equals Levy", check_fbm_levy),
    ("4 kernel Fourier identity", check_kernel),
    ("5 Euler residuals and quadratic expansion", check_euler_and_expansion),
    ("6 interpolation", check_interpolation),
    ("7 prediction criteria", check_criteria),
    ("8 Monte Carlo", check_monte_carlo),
    ("9 discrete to continuous limit", check_limit),
    ("10 determinism across threads", check_determinism),
    ("model invariants", check_model_invariants),
    ("time domain vs spectral synthesis", check_time_vs_spectral),
)


def run_one(name, fn, **options) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, summary, details = fn(**options)
    except Exception as exc:  # a crashing check is a failing check
        ok, summary, details = False, f"{type(exc).__name__}: {exc}", {}
    return CheckResult(name, bool(ok), summary, details, time.perf_counter() - t0)


def run_suite(quick=False, only=None, progress=None, **options) -> list[CheckResult]:
    """Run all checks (or those whose name starts with an entry of ``only``).

    ``quick`` lowers Monte Carlo sample sizes and the number of random
    directions; tolerances stay the same.
    """
    if quick:
        options.setdefault("n", 10**5)
        options.setdefault("n_steps", 2 * 10**5)
        options.setdefault("n_directions", 10)
        options.setdefault("n_cross", 5 * 10**4)
    results = []
    for name, fn in CHECKS:
        if only and not any(name.startswith(o) for o in only):
            continue
        res = run_one(name, fn, **options)
        if progress is not None:
            progress(res)
        results.append(res)
    return results
