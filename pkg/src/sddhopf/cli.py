"""Command-line front end for the delayed-feedback analysis pipeline.

One JSON config document drives every subcommand; it has three blocks
(model, analysis, output) and unknown keys anywhere are rejected so typos
fail loudly. Individual flags override single fields. Exit codes:
0 success, 1 config error, 2 solver failure, 3 resonance violation,
4 integration failure.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dde
from .errors import (ConfigError, InsufficientCycles, IntegrationError,
                     ResonanceViolation, SddhopfError)
from .model import ModelParams, find_equilibrium
from .nonlinearity import NonlinearitySpec, ZeroMap, hes1_nonlinearity
from .normalform import analyze_normal_form
from .stability import StabilityKind, classify_stability

_TOP_KEYS = {"model", "analysis", "output"}
_MODEL_KEYS = {"nonlinearity", "mu_m", "mu_p", "c", "eps"}
_NONLIN_KEYS = {"hes1": {"kind", "alpha_m", "ybar", "h", "alpha_p"},
                "zero": {"kind"}}
_ANALYSIS_KEYS = {"eps_k", "fit_points", "c_max", "system", "t_end",
                  "kick_scale", "rtol", "atol", "transient_fraction",
                  "grid", "small_kick", "probe_scales"}
_OUTPUT_KEYS = {"format", "path", "n_samples"}
_SWEEPABLE = ("mu_m", "mu_p", "c", "eps")


def _reject_unknown(block, allowed, where):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError("unknown key(s) %s in %s block"
                          % (", ".join(sorted(unknown)), where))


def _need_number(block, key, where, default=None):
    if key not in block:
        if default is None:
            raise ConfigError("missing required field '%s' in %s block" % (key, where))
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("field '%s' in %s block must be a number" % (key, where))
    return float(v)


class RunConfig:
    """Validated view over the raw config dict; the raw dict is kept verbatim
    so serialization round-trips losslessly."""

    def __init__(self, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a JSON object")
        _reject_unknown(raw, _TOP_KEYS, "top-level")
        self.raw = raw
        self.model = dict(raw.get("model") or {})
        self.analysis = dict(raw.get("analysis") or {})
        self.output = dict(raw.get("output") or {})
        _reject_unknown(self.model, _MODEL_KEYS, "model")
        _reject_unknown(self.analysis, _ANALYSIS_KEYS, "analysis")
        _reject_unknown(self.output, _OUTPUT_KEYS, "output")
        nl = self.model.get("nonlinearity", {"kind": "hes1"})
        if not isinstance(nl, dict):
            raise ConfigError("model.nonlinearity must be an object")
        kind = nl.get("kind", "hes1")
        if kind not in _NONLIN_KEYS:
            raise ConfigError("unknown nonlinearity kind '%s' (expected %s)"
                              % (kind, " or ".join(sorted(_NONLIN_KEYS))))
        _reject_unknown(nl, _NONLIN_KEYS[kind], "model.nonlinearity")
        self.nonlinearity_block = dict(nl, kind=kind)
        grid = self.analysis.get("grid")
        if grid is not None:
            if (not isinstance(grid, dict) or len(grid) != 2
                    or any(k not in _SWEEPABLE for k in grid)
                    or any(not isinstance(v, list) or not v for v in grid.values())):
                raise ConfigError("analysis.grid must map exactly two of %s "
                                  "to non-empty value lists" % (_SWEEPABLE,))

    def to_dict(self):
        return self.raw

    def nonlinearity(self) -> NonlinearitySpec:
        nl = self.nonlinearity_block
        if nl["kind"] == "zero":
            return NonlinearitySpec(f=ZeroMap(), g=ZeroMap())
        return hes1_nonlinearity(
            alpha_m=_need_number(nl, "alpha_m", "nonlinearity", 35.0),
            ybar=_need_number(nl, "ybar", "nonlinearity", 1200.0),
            h=int(_need_number(nl, "h", "nonlinearity", 5.0)),
            alpha_p=_need_number(nl, "alpha_p", "nonlinearity", 10.0))

    def params(self) -> ModelParams:
        try:
            return ModelParams(
                mu_m=_need_number(self.model, "mu_m", "model", 0.03),
                mu_p=_need_number(self.model, "mu_p", "model", 0.04),
                c=_need_number(self.model, "c", "model"),
                eps=_need_number(self.model, "eps", "model"),
                nonlinearity=self.nonlinearity())
        except ValueError as exc:
            raise ConfigError(str(exc))

    # analysis/output accessors with defaults
    def opt(self, key, default):
        return self.analysis.get(key, default)

    def out_format(self):
        fmt = self.output.get("format", "text")
        if fmt not in ("csv", "json", "text"):
            raise ConfigError("output.format must be csv, json, or text")
        return fmt

    def out_path(self):
        return self.output.get("path")

    def n_samples(self):
        n = int(_need_number(self.output, "n_samples", "output", 1000.0))
        if n < 2:
            raise ConfigError("output.n_samples must be at least 2")
        return n


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (path, exc))
    return RunConfig(raw)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if args.eps is not None:
        cfg.model["eps"] = args.eps
    if args.c is not None:
        cfg.model["c"] = args.c
    if args.system is not None:
        cfg.analysis["system"] = args.system
    if args.t_end is not None:
        cfg.analysis["t_end"] = args.t_end
    if args.eps_k is not None:
        cfg.analysis["eps_k"] = args.eps_k
    if args.fmt is not None:
        cfg.output["format"] = args.fmt
    if args.output is not None:
        cfg.output["path"] = args.output
    return cfg


# -- output plumbing -----------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kv_csv(payload):
    """Two-column key,value CSV; complex values split into .re/.im rows."""
    lines = ["key,value"]

    def emit(prefix, value):
        if isinstance(value, complex):
            emit(prefix + ".re", value.real)
            emit(prefix + ".im", value.imag)
        elif isinstance(value, dict):
            for k, v in value.items():
                emit(prefix + "." + k if prefix else k, v)
        elif isinstance(value, (list, tuple, np.ndarray)):
            for i, v in enumerate(value):
                emit("%s[%d]" % (prefix, i), v)
        elif isinstance(value, float):
            lines.append("%s,%.17g" % (prefix, value))
        else:
            lines.append("%s,%s" % (prefix, value))

    for key, value in payload.items():
        emit(key, value)
    return "\n".join(lines) + "\n"


def _emit_report(payload, text, command, cfg):
    fmt = cfg.out_format()
    if fmt == "json":
        doc = {"command": command, "config": cfg.to_dict(), "results": _jsonable(payload)}
        _write(json.dumps(doc, indent=2) + "\n", cfg.out_path())
    elif fmt == "csv":
        _write(_kv_csv(payload), cfg.out_path())
    else:
        _write(text, cfg.out_path())
    return 0


def _cfmt(z):
    return "%.10g %+.10gi" % (z.real, z.imag)


# -- subcommands ---------------------------------------------------------------

def cmd_equilibrium(cfg: RunConfig):
    params = cfg.params()
    eq = find_equilibrium(params)
    f, g = params.nonlinearity.f, params.nonlinearity.g
    res_r = -params.mu_m * eq.r_star + f.value(eq.xi_star)
    res_xi = -params.mu_p * eq.xi_star + g.value(eq.r_star)
    payload = {"r_star": eq.r_star, "xi_star": eq.xi_star,
               "f_prime": eq.f1, "g_prime": eq.g1, "p": eq.p,
               "residual_r": res_r, "residual_xi": res_xi}
    text = ("equilibrium: r* = %.10g, xi* = %.10g\n"
            "f'(xi*) = %.10g\ng'(r*) = %.10g\ncoupling p = f' g' = %.10g\n"
            "residuals: %.3e, %.3e\n"
            % (eq.r_star, eq.xi_star, eq.f1, eq.g1, eq.p, res_r, res_xi))
    return _emit_report(payload, text, "equilibrium", cfg)


def cmd_stability(cfg: RunConfig):
    params = cfg.params()
    k_count = int(cfg.opt("eps_k", 0))
    eq = find_equilibrium(params)
    cls = classify_stability(eq, params.mu_m, params.mu_p, params.eps)
    if cls.kind is StabilityKind.STABLE_FOR_ALL_EPS:
        payload = {"classification": cls.kind.value, "eps0": None}
        text = ("equilibrium is stable for all eps > 0 "
                "(no purely imaginary characteristic roots exist)\n")
        return _emit_report(payload, text, "stability", cfg)
    hp = cls.hopf
    eps_k = [hp.eps_k(k) for k in range(1, k_count + 1)]
    payload = {"classification": cls.kind.value, "eps": params.eps,
               "eps0": hp.eps0, "omega": hp.omega, "l": hp.l,
               "dalpha_deps": hp.dalpha_deps, "eps_k": eps_k}
    lines = ["classification at eps = %.10g: %s" % (params.eps, cls.kind.value),
             "eps0 = %.10g" % hp.eps0,
             "omega = %.10g" % hp.omega,
             "l = %.10g" % hp.l,
             "dalpha/deps at eps0 = %.10g" % hp.dalpha_deps]
    for k, ek in enumerate(eps_k, start=1):
        lines.append("eps_%d = %.10g" % (k, ek))
    return _emit_report(payload, "\n".join(lines) + "\n", "stability", cfg)


def cmd_normal_form(cfg: RunConfig):
    params = cfg.params()
    rep = analyze_normal_form(params,
                              fit_cs=tuple(cfg.opt("fit_points", (0.0, 0.01, 0.05))),
                              c_max=float(cfg.opt("c_max", 1.0)))
    payload = {"eps0": rep.hopf.eps0, "omega": rep.hopf.omega,
               "kappa1": rep.kappa1, "kappa3": rep.kappa3,
               "direction": rep.direction.value, "c": rep.c, "c0": rep.c0,
               "re_kappa3_coeffs": list(rep.poly.re_coeffs),
               "im_kappa3_coeffs": list(rep.poly.im_coeffs)}
    rq, iq = rep.poly.re_coeffs, rep.poly.im_coeffs
    lines = ["kappa1 = %s" % _cfmt(rep.kappa1),
             "kappa3(c = %.10g) = %s" % (rep.c, _cfmt(rep.kappa3)),
             "Re kappa3(c) = %.10g c^2 %+.10g c %+.10g" % rq,
             "Im kappa3(c) = %.10g c^2 %+.10g c %+.10g" % iq,
             "direction at c = %.10g: %s" % (rep.c, rep.direction.value),
             "c0 = %s" % ("%.10g" % rep.c0 if rep.c0 is not None
                          else "none in (0, c_max]")]
    return _emit_report(payload, "\n".join(lines) + "\n", "normal-form", cfg)


def _trajectory_csv(traj: dde.Trajectory) -> str:
    lines = [",".join(traj.columns)]
    for i in range(len(traj.t)):
        lines.append(",".join("%.17g" % v for v in
                              (traj.t[i], traj.states[i, 0],
                               traj.states[i, 1], traj.delay[i])))
    return "\n".join(lines) + "\n"


def _run_simulation(cfg: RunConfig):
    params = cfg.params()
    system = cfg.opt("system", "transformed")
    if system not in ("original", "transformed"):
        raise ConfigError("analysis.system must be 'original' or 'transformed'")
    t_end = float(cfg.opt("t_end", 400.0))
    kick_scale = float(cfg.opt("kick_scale", 0.05))
    rtol = float(cfg.opt("rtol", 1e-8))
    atol = float(cfg.opt("atol", 1e-9))
    eq = find_equilibrium(params)
    kick = kick_scale * eq.state
    samples = np.linspace(0.0, t_end, cfg.n_samples())
    if system == "original":
        hist = dde.bump_history(eq.state, kick, span=params.eps)
        traj = dde.integrate_sdd(hist, params.eps, params, t_end,
                                 rtol=rtol, atol=atol, sample_times=samples)
    else:
        hist = dde.bump_history(eq.state, kick, span=1.0)
        traj = dde.integrate_transformed(hist, params, t_end, rtol=rtol,
                                         atol=atol, sample_times=samples,
                                         raise_on_breach=False)
    return params, eq, traj


def _summary_dict(traj, transient_fraction):
    try:
        osc = dde.measure_oscillation(traj, component=0,
                                      transient_fraction=transient_fraction)
        return {"amplitude": osc.amplitude, "period": osc.period,
                "decay_rate": osc.decay_rate, "n_extrema": osc.n_extrema,
                "mean": osc.mean}
    except InsufficientCycles as exc:
        return {"note": "no oscillation detected (%s)" % exc}


def _summary_text(traj, summary):
    lines = ["system: %s" % traj.kind, "status: %s" % traj.status,
             "t_final = %.10g" % traj.t_final]
    if "note" in summary:
        lines.append(summary["note"])
    else:
        lines.append("oscillation: amplitude = %.10g, period = %.10g, "
                     "decay_rate = %.10g, extrema = %d"
                     % (summary["amplitude"], summary["period"],
                        summary["decay_rate"], summary["n_extrema"]))
    mons = ", ".join("%s = %.6g" % (k, v) for k, v in sorted(traj.monitors.items())
                     if isinstance(v, float) and math.isfinite(v))
    lines.append("monitors: %s" % mons)
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig):
    params, eq, traj = _run_simulation(cfg)
    summary = _summary_dict(traj, float(cfg.opt("transient_fraction", 0.5)))
    fmt = cfg.out_format()
    if fmt == "csv":
        _write(_trajectory_csv(traj), cfg.out_path())
        sys.stderr.write(_summary_text(traj, summary))
    elif fmt == "json":
        doc = {"command": "simulate", "config": cfg.to_dict(),
               "results": _jsonable({
                   "status": traj.status, "summary": summary,
                   "monitors": traj.monitors, "events": traj.events[:50],
                   "columns": list(traj.columns),
                   "rows": np.column_stack(
                       [traj.t, traj.states, traj.delay]).tolist()
                   if len(traj.t) else []})}
        _write(json.dumps(doc, indent=2) + "\n", cfg.out_path())
    else:
        _write(_summary_text(traj, summary), cfg.out_path())
    if traj.status != dde.STATUS_COMPLETED:
        sys.stderr.write("integration ended early: %s\n" % traj.status)
        for ev in traj.events[-20:]:
            sys.stderr.write("  event t = %.6g: %s %s\n"
                             % (ev["t"], ev["kind"], ev.get("detail", "")))
        return 4
    return 0


def _thread_count():
    raw = os.environ.get("SDDHOPF_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("SDDHOPF_THREADS must be an integer, got %r" % raw)
    if n < 1:
        raise ConfigError("SDDHOPF_THREADS must be positive")
    return n


def cmd_sweep(cfg: RunConfig):
    grid = cfg.analysis.get("grid")
    if grid is None:
        raise ConfigError("sweep requires an analysis.grid block")
    (row_name, row_vals), (col_name, col_vals) = grid.items()
    base = cfg.params()
    eta_end = float(cfg.opt("t_end", 400.0))
    small_kick = float(cfg.opt("small_kick", 0.05))
    probe_scales = tuple(cfg.opt("probe_scales", [0.25, 0.5, 1.0]))
    rtol = float(cfg.opt("rtol", 1e-7))

    def cell(rv, cv):
        try:
            par = base.with_overrides(**{row_name: rv, col_name: cv})
            eq = find_equilibrium(par)
            return dde.classify_dynamics(par, eq, small_kick=small_kick,
                                         probe_scales=probe_scales,
                                         eta_end=eta_end, rtol=rtol)
        except SddhopfError as exc:
            return "error:%s" % type(exc).__name__

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        futures = {(i, j): pool.submit(cell, rv, cv)
                   for i, rv in enumerate(row_vals)
                   for j, cv in enumerate(col_vals)}
        labels = [[futures[(i, j)].result() for j in range(len(col_vals))]
                  for i in range(len(row_vals))]

    overlays = {"eps0": None, "c0": None}
    try:
        eq0 = find_equilibrium(base)
        cls = classify_stability(eq0, base.mu_m, base.mu_p, base.eps)
        if cls.hopf is not None:
            overlays["eps0"] = cls.hopf.eps0
    except SddhopfError:
        pass
    try:
        overlays["c0"] = analyze_normal_form(base).c0
    except SddhopfError:
        pass

    payload = {"rows": {row_name: list(row_vals)},
               "cols": {col_name: list(col_vals)},
               "labels": labels, "overlays": overlays}
    fmt = cfg.out_format()
    if fmt == "csv":
        lines = ["%s\\%s," % (row_name, col_name)
                 + ",".join("%.17g" % v for v in col_vals)]
        for rv, row in zip(row_vals, labels):
            lines.append("%.17g," % rv + ",".join(row))
        _write("\n".join(lines) + "\n", cfg.out_path())
        return 0
    if fmt == "json":
        doc = {"command": "sweep", "config": cfg.to_dict(),
               "results": _jsonable(payload)}
        _write(json.dumps(doc, indent=2) + "\n", cfg.out_path())
        return 0
    width = max(12, max(len(s) for row in labels for s in row) + 2)
    head = " " * 18 + "".join(("%s=%-10.6g" % (col_name, v)).ljust(width)
                              for v in col_vals)
    lines = ["sweep: %s (rows) x %s (cols)" % (row_name, col_name),
             "overlays: eps0 = %s, c0 = %s"
             % tuple("%.10g" % v if v is not None else "n/a"
                     for v in (overlays["eps0"], overlays["c0"])),
             head]
    for rv, row in zip(row_vals, labels):
        lines.append(("%s=%-10.6g" % (row_name, rv)).ljust(18)
                     + "".join(s.ljust(width) for s in row))
    _write("\n".join(lines) + "\n", cfg.out_path())
    return 0


# -- entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):          # usage problems are config errors (exit 1)
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _build_parser():
    parser = _Parser(prog="sddhopf",
                     description="Analysis pipeline for a two-component "
                                 "feedback loop with threshold-type "
                                 "state-dependent delay.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("equilibrium", "stability", "normal-form", "simulate", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--eps", type=float, help="override model.eps")
        p.add_argument("--c", type=float, help="override model.c")
        p.add_argument("--system", choices=["original", "transformed"],
                       help="override analysis.system")
        p.add_argument("--t-end", dest="t_end", type=float,
                       help="override analysis.t_end")
        p.add_argument("--eps-k", dest="eps_k", type=int,
                       help="number of additional critical delay scales")
        p.add_argument("--format", dest="fmt", choices=["csv", "json", "text"],
                       help="override output.format")
        p.add_argument("--output", help="override output.path")
    return parser


_DISPATCH = {"equilibrium": cmd_equilibrium, "stability": cmd_stability,
             "normal-form": cmd_normal_form, "simulate": cmd_simulate,
             "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits for usage errors (1 via _Parser.error) and --help (0)
        return int(exc.code or 0)
    try:
        cfg = _apply_flags(load_config(args.config), args)
        return _DISPATCH[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write("config error: %s\n" % exc)
        return 1
    except ResonanceViolation as exc:
        sys.stderr.write("resonance violation: %s\n" % exc)
        return 3
    except IntegrationError as exc:
        sys.stderr.write("integration error: %s\n" % exc)
        return 4
    except SddhopfError as exc:
        sys.stderr.write("solver error: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
