"""
Command-line front end: ``spectra <subcommand> [options]``.

Subcommands print one JSON object (or a CSV table with ``--format csv``) on
standard output and diagnostics on standard error.  Exit codes: 0 success,
1 input or configuration error, 2 numerical failure, 3 a failed ``verify``
check.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .criteria import DEFAULT_CRITERIA_TOL, DEFAULT_MAXDEG, log_integral, no_loss_horizon, regularity_limit
from .domain import Domain
from .errors import NumericalError, ParameterError, SpectraError
from .quadrature import DEFAULT_MAX_PANELS, panel_limit

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
DIGITS = 12

# option name -> (type, default); shared by flags and --config
_OPTIONS = {
    "model": (str, None),
    "V": (float, None),
    "rho": (float, None),
    "H": (float, None),
    "density_csv": (str, None),
    "domain": (str, None),
    "filter": (str, "kinetic"),
    "alpha": (float, None),
    "tol": (float, None),
    "max_panels": (int, DEFAULT_MAX_PANELS),
    "format": (str, "json"),
    "time": (str, "discrete"),
    "tail_tol": (float, 1e-12),
    "maxdeg": (int, DEFAULT_MAXDEG),
    "galerkin": (int, None),
    "mode": (str, "spectral"),
    "n": (int, 10**6),
    "seed": (int, None),
    "grid": (int, 256),
    "window": (float, 1e4),
    "threads": (int, 1),
    "n_steps": (int, None),
    "quick": (bool, False),
    "only": (str, None),
    "kmin": (int, 4),
    "kmax": (int, 14),
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _round(x):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return float(f"{x:.{DIGITS}g}")
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _round(x.real), "im": _round(x.imag)}
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_round(v) for v in x]
    if hasattr(x, "value"):   # enums
        return x.value
    return str(x)


def emit_json(obj, out):
    out.write(json.dumps(_round(obj), sort_keys=False) + "\n")


def emit_csv(header, rows, out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt_cell(v) for v in r])


def _fmt_cell(v):
    v = _round(v)
    return repr(v) if isinstance(v, float) else v


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON file with option values; explicit flags win")
    p.add_argument("--tol", type=float, help="absolute quadrature tolerance")
    p.add_argument("--max-panels", dest="max_panels", type=int, help="panel budget per integral")
    p.add_argument("--format", choices=("json", "csv"))


def _model_args(p):
    p.add_argument("--model", help="iid, ar1, ma1, partial-sums, ou, fbm, levy or custom")
    p.add_argument("--V", type=float, help="innovation variance / scale")
    p.add_argument("--rho", type=float)
    p.add_argument("--H", type=float, help="Hurst index for fbm")
    p.add_argument("--density-csv", dest="density_csv", help="custom density table with header u,f_a")
    p.add_argument("--domain", choices=("circle", "line"), help="domain of a custom density")


def _filter_args(p):
    p.add_argument("--filter", help="kinetic, zero, const:C, poly:c1,c2,... or csv:PATH (header u,abs2)")
    p.add_argument("--alpha", type=float, help="kinetic penalty weight")


def build_parser():
    parser = argparse.ArgumentParser(prog="spectra", description="Energy-penalized spectral approximation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("error", help="optimal non-adaptive error")
    _common(p); _model_args(p); _filter_args(p)

    p = sub.add_parser("kernel", help="time-domain kernel of the optimal kinetic approximation")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--time", choices=("discrete", "continuous"))
    p.add_argument("--tail-tol", dest="tail_tol", type=float)

    p = sub.add_parser("criteria", help="log-integral, no-loss horizon and regularity limit")
    _common(p); _model_args(p); _filter_args(p)
    p.add_argument("--maxdeg", type=int)

    p = sub.add_parser("interp", help="interpolation error from all other integer times")
    _common(p); _model_args(p); _filter_args(p)
    p.add_argument("--galerkin", type=int, metavar="S", help="also compute the Galerkin value with 2S modes")

    p = sub.add_parser("simulate", help="Monte Carlo check")
    _common(p); _model_args(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--mode", choices=("spectral", "time"))
    p.add_argument("--n", type=int, help="samples (spectral) or path length (time)")
    p.add_argument("--seed", type=int, help="defaults to $SPECTRA_SEED, else 0")
    p.add_argument("--grid", type=int, metavar="M")
    p.add_argument("--window", type=float)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("verify", help="run the self-verification suite")
    _common(p)
    p.add_argument("--quick", action="store_true", default=None, help="smaller Monte Carlo runs")
    p.add_argument("--only", help="comma-separated check-name prefixes, e.g. 1,2,8")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)

    p = sub.add_parser("limit", help="discrete to continuous rescaling study")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--V", type=float)
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    return parser


class _Options:
    def __init__(self, ns, config):
        self._ns, self._config = ns, config

    def __getattr__(self, name):
        v = getattr(self._ns, name, None)
        if v is None and name in self._config:
            v = self._config[name]
        if v is None:
            v = _OPTIONS.get(name, (None, None))[1]
        return v


def _load_config(path, ns):
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParameterError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParameterError("config", f"invalid JSON in {path}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ParameterError("config", "top level must be an object")
    out = {}
    for key, val in cfg.items():
        name = key.replace("-", "_")
        if name not in _OPTIONS or not hasattr(ns, name):
            raise ParameterError(key, f"unknown configuration key for '{ns.command}'")
        typ = _OPTIONS[name][0]
        if val is not None:
            try:
                val = typ(val) if typ is not bool else bool(val)
            except (TypeError, ValueError):
                raise ParameterError(key, f"expected {typ.__name__}, got {val!r}") from None
            if typ is int and isinstance(cfg[key], float) and cfg[key] != int(cfg[key]):
                raise ParameterError(key, f"expected an integer, got {cfg[key]!r}")
        if name == "density_csv" and val is not None and not Path(val).is_absolute():
            val = str(Path(path).resolve().parent / val)
        out[name] = val
    return out


def _default_seed():
    env = os.environ.get("SPECTRA_SEED")
    if env is None or env == "":
        return 0
    try:
        seed = int(env)
    except ValueError:
        raise ParameterError("SPECTRA_SEED", f"not an integer: {env!r}") from None
    return seed


def _model(opt):
    from .spectral_model import ProcessModel, model_from_config

    if opt.model is None:
        raise ParameterError("model", "required (--model)")
    cfg = {"model": opt.model}
    for key in ("V", "rho", "H", "density_csv", "domain"):
        v = getattr(opt, key)
        if v is not None:
            cfg[key] = v
    return model_from_config(cfg)


def _measure(model):
    from .spectral_model import preset_measure

    return preset_measure(model)


def _filter(opt, domain: Domain):
    from .spectral_model import (
        FunctionFilter,
        KineticContinuous,
        KineticDiscrete,
        PolynomialCircle,
        PolynomialLine,
        ZeroFilter,
        filter_from_csv,
    )

    spec = opt.filter
    if spec == "kinetic":
        if opt.alpha is None:
            raise ParameterError("alpha", "kinetic filter needs --alpha")
        return KineticDiscrete(opt.alpha) if domain is Domain.CIRCLE else KineticContinuous(opt.alpha)
    if spec == "zero":
        return ZeroFilter()
    kind, _, arg = spec.partition(":")
    if kind == "const":
        try:
            c = float(arg)
        except ValueError:
            raise ParameterError("filter", f"const needs a number, got {arg!r}") from None
        if c < 0:
            raise ParameterError("filter", "const modulus must be non-negative")
        return FunctionFilter(lambda u, c=c: np.full(np.shape(u), c * c), domain=domain, name=f"const:{c:g}")
    if kind == "poly":
        try:
            coeffs = tuple(complex(x.strip().replace("i", "j")) for x in arg.split(",") if x.strip())
        except ValueError:
            raise ParameterError("filter", f"bad polynomial coefficients {arg!r}") from None
        return PolynomialCircle(coeffs) if domain is Domain.CIRCLE else PolynomialLine(coeffs)
    if kind == "csv":
        return filter_from_csv(arg, domain=domain)
    raise ParameterError("filter", f"unknown filter spec {spec!r}")


def _tol(opt, default):
    t = opt.tol if opt.tol is not None else default
    if not t > 0:
        raise ParameterError("tol", f"must be positive, got {t}")
    return t


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_error(opt, out):
    from .nonadaptive import closed_form_sigma2, sigma2_nonadaptive

    model = _model(opt)
    measure = _measure(model)
    ell = _filter(opt, measure.domain)
    rep = sigma2_nonadaptive(measure, ell, _tol(opt, 1e-11))
    closed = None
    if opt.filter == "kinetic" and model.kind != "custom":
        closed = closed_form_sigma2(model, opt.alpha)
    res = {
        "model": model.kind, "alpha": opt.alpha, "filter": opt.filter,
        "sigma2": rep.sigma2, "sigma2_error_estimate": rep.sigma2_error_estimate,
        "sigma2_closed_form": closed,
        "abs_diff": None if closed is None else abs(rep.sigma2 - closed),
        "diverged": rep.diverged, "cross_check_gap": rep.cross_check_gap,
    }
    if opt.format == "csv":
        emit_csv(list(res), [list(res.values())], out)
    else:
        emit_json(res, out)
    return EXIT_OK


def cmd_kernel(opt, out):
    from .nonadaptive import continuous_kernel, discrete_kernel

    if opt.alpha is None:
        raise ParameterError("alpha", "required (--alpha)")
    if opt.time == "discrete":
        k = discrete_kernel(opt.alpha, opt.tail_tol)
        rows = [(i, w) for i, w in zip(range(-k.truncation_K, k.truncation_K + 1), k.bilateral())]
        meta = {"alpha": k.alpha, "beta": k.beta, "w0": k.w0, "K": k.truncation_K, "tail_bound": k.tail_bound}
        header = ["k", "weight"]
    else:
        k = continuous_kernel(opt.alpha)
        # the Laplace kernel falls below tail_tol relative to its peak at |tau| = alpha ln(1/tail_tol)
        reach = opt.alpha * math.log(1.0 / opt.tail_tol)
        taus = np.linspace(-reach, reach, 401)
        rows = list(zip(taus, k(taus)))
        meta = {"alpha": k.alpha, "reach": reach}
        header = ["tau", "weight"]
    if opt.format == "json":
        emit_json({**meta, header[0]: [r[0] for r in rows], "weight": [r[1] for r in rows]}, out)
    else:
        emit_csv(header, rows, out)
    return EXIT_OK


def cmd_criteria(opt, out):
    model = _model(opt)
    measure = _measure(model)
    ell = _filter(opt, measure.domain)
    tol = _tol(opt, DEFAULT_CRITERIA_TOL)
    li = log_integral(measure)
    verdict = no_loss_horizon(measure, ell, tol, opt.maxdeg)
    reg = None
    reg_note = ""
    if measure.domain is Domain.CIRCLE and measure.finite and not li.diverged:
        reg = regularity_limit(measure, ell)
    else:
        reg_note = "defined for finite circle measures with a finite log-integral"
    res = {"model": model.kind, "filter": opt.filter, "log_integral": None if li.diverged else li.value,
           "diverged": li.diverged, "horizon_verdict": verdict.as_dict(), "regularity_limit": reg}
    if reg_note:
        res["regularity_note"] = reg_note
    if opt.format == "csv":
        emit_csv(["log_integral", "diverged", "verdict", "t", "approximate", "regularity_limit"],
                 [[res["log_integral"], li.diverged, verdict.kind.value, verdict.t, verdict.approximate, reg]], out)
    else:
        emit_json(res, out)
    return EXIT_OK


def cmd_interp(opt, out):
    from .interpolation import galerkin_oracle, interpolation_residuals, sigma2_interpolation

    model = _model(opt)
    measure = _measure(model)
    if opt.filter == "kinetic" and opt.alpha is None:
        raise ParameterError("alpha", "kinetic filter needs --alpha")
    ell = _filter(opt, measure.domain)
    rep = sigma2_interpolation(measure, ell, _tol(opt, 1e-11))
    res = {"model": model.kind, "filter": opt.filter, "sigma2_int": rep.sigma2_int, "c": rep.c,
           "precise": rep.precise, "sigma2_nonadaptive": rep.sigma2_nonadaptive}
    if opt.galerkin is not None:
        res["galerkin_S"] = opt.galerkin
        res["galerkin_value"] = galerkin_oracle(measure, ell, opt.galerkin)
    if not rep.precise:
        r = interpolation_residuals(measure, ell, rep)
        res["residual_max"] = max(abs(v) for v in r.values())
    if opt.format == "csv":
        emit_csv(list(res), [list(res.values())], out)
    else:
        emit_json(res, out)
    return EXIT_OK


def cmd_simulate(opt, out):
    from .montecarlo import estimate_functional, time_domain_experiment
    from .nonadaptive import closed_form_sigma2
    from .spectral_model import KineticContinuous, KineticDiscrete

    model = _model(opt)
    if opt.alpha is None:
        raise ParameterError("alpha", "required (--alpha)")
    seed = opt.seed if opt.seed is not None else _default_seed()
    if opt.mode == "spectral":
        measure = _measure(model)
        ell = KineticDiscrete(opt.alpha) if measure.domain is Domain.CIRCLE else KineticContinuous(opt.alpha)
        est = estimate_functional(measure, ell, n=opt.n, seed=seed, M=opt.grid, window=opt.window,
                                  threads=opt.threads, tol=_tol(opt, 1e-10))
        theory = est.theory
    else:
        est = time_domain_experiment(model, opt.alpha, opt.n, seed=seed)
        theory = est.theory
    closed = None
    if model.kind != "custom":
        closed = closed_form_sigma2(model, opt.alpha)
    z = (est.mean - theory) / est.std_error if est.std_error > 0 else 0.0
    res = {"mode": opt.mode, "model": model.kind, "alpha": opt.alpha, "n": est.n, "seed": seed,
           "estimate": est.mean, "std_error": est.std_error, "theory": theory, "closed_form": closed,
           "z_score": z, "grid_bias_bound": est.grid_bias_bound}
    if est.theory_grid is not None:
        res["theory_grid"] = est.theory_grid
    if opt.format == "csv":
        emit_csv(list(res), [list(res.values())], out)
    else:
        emit_json(res, out)
    return EXIT_OK


def cmd_verify(opt, out):
    from .verify import run_suite

    only = [s.strip() for s in opt.only.split(",")] if opt.only else None
    kw = {"seed": opt.seed if opt.seed is not None else _default_seed(), "threads": opt.threads}

    def progress(r):
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.summary} ({r.seconds:.1f} s)", file=sys.stderr)

    results = run_suite(quick=bool(opt.quick), only=only, progress=progress, **kw)
    ok = all(r.passed for r in results)
    if opt.format == "csv":
        emit_csv(["check", "passed", "seconds", "summary"], [[r.name, r.passed, r.seconds, r.summary] for r in results],
                 out)
    else:
        emit_json({"passed": ok, "checks": [{"name": r.name, "passed": r.passed, "summary": r.summary,
                                             "seconds": r.seconds} for r in results]}, out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_limit(opt, out):
    from .verify import limit_rates

    alpha = opt.alpha if opt.alpha is not None else 1.0
    V = opt.V if opt.V is not None else 1.0
    if opt.kmax < opt.kmin:
        raise ParameterError("kmax", "must be at least kmin")
    rows, fit = limit_rates(alpha, V, opt.kmin, opt.kmax)
    fields = ["delta", "alpha_delta", "beta_delta", "beta_pow_alpha", "e_gap", "sigma2_delta", "sigma2_limit",
              "sigma2_gap"]
    if opt.format == "csv":
        emit_csv(fields, [[getattr(r, f) for f in fields] for r in rows], out)
    else:
        emit_json({"alpha": alpha, "V": V, "rows": [{f: getattr(r, f) for f in fields} for r in rows], **fit}, out)
    return EXIT_OK


COMMANDS = {
    "error": cmd_error,
    "kernel": cmd_kernel,
    "criteria": cmd_criteria,
    "interp": cmd_interp,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "limit": cmd_limit,
}


def run(argv=None, out=None) -> int:
    """Parse ``argv``, dispatch and return the exit code."""
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:   # argparse reports usage errors itself
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        opt = _Options(ns, _load_config(ns.config, ns))
        if opt.threads is not None and opt.threads < 1:
            raise ParameterError("threads", "must be at least 1")
        with panel_limit(opt.max_panels):
            return COMMANDS[ns.command](opt, out)
    except NumericalError as exc:
        print(f"spectra {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpectraError, ValueError, OSError) as exc:
        print(f"spectra {ns.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run_capture(argv):
    """Run in-process; returns ``(exit_code, stdout_text, stderr_text)``."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stderr(err):
        code = run(argv, out)
    return code, out.getvalue(), err.getvalue()


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
