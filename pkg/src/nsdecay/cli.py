"""Experiment orchestration: run / oracle / fit / verify / report subcommands.

Config files are flat key-value text with dotted keys (grid.n = 48), one
assignment per line, # comments allowed.  Every artifact a subcommand writes
is reproducible byte-for-byte from (config, seed, package version): numbers
are serialized with 17 significant digits, JSON keys are sorted, and all
randomness flows through counter-based generators.

Exit codes: 0 success; 1 a fitted verdict or inequality check failed;
2 config or schema error; 3 positivity violation (at synthesis or mid-run);
4 CFL violation.  NSDECAY_THREADS caps FFT worker threads.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, fitting, inequalities, integrator, oracle, runio
from . import spectral as sp
from .errors import (CflViolation, ConfigError, DensityNonpositive, NsdecayError,
                     PositivityUnachievable, RunAborted, TemperatureNonpositive)
from .initial_data import InitialDataSpec
from .integrator import RunConfig
from .models import MODEL_FCNS, MODEL_ICNS, ModelParams
from .oracle import SpectrumProfile

EXIT_OK = 0
EXIT_VERDICT_FAIL = 1
EXIT_CONFIG = 2
EXIT_POSITIVITY = 3
EXIT_CFL = 4

_MISSING = object()


def _parse_scalar(text: str):
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> dict:
    """Flat dotted-key assignments; values are scalars or comma lists."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if "," in value:
            out[key] = tuple(_parse_scalar(v.strip()) for v in value.split(",") if v.strip())
        else:
            out[key] = _parse_scalar(value)
    return out


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _take(cfg: dict, key: str, default=_MISSING):
    if key in cfg:
        return cfg.pop(key)
    if default is _MISSING:
        raise ConfigError(f"missing required config key {key!r}")
    return default


def _take_num(cfg: dict, key: str, default=_MISSING) -> float:
    val = _take(cfg, key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {val!r}")
    return float(val)


def _take_int(cfg: dict, key: str, default=_MISSING) -> int:
    val = _take(cfg, key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"config key {key!r} must be an integer, got {val!r}")
    return val


def _as_tuple(val) -> tuple:
    return val if isinstance(val, tuple) else (val,)


def _reject_unknown(cfg: dict) -> None:
    if cfg:
        raise ConfigError(f"unknown config keys: {sorted(cfg)}")


def _model_params(cfg: dict) -> ModelParams:
    name = str(_take(cfg, "model")).lower()
    if name not in ("icns", "fcns"):
        raise ConfigError(f"model must be icns or fcns, got {name!r}")
    model = MODEL_ICNS if name == "icns" else MODEL_FCNS
    try:
        return ModelParams(mu=_take_num(cfg, "model.mu"),
                           lambda_v=_take_num(cfg, "model.lambda"),
                           gamma=_take_num(cfg, "model.gamma", 1.4),
                           model=model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _profile(cfg: dict, prefix: str) -> SpectrumProfile:
    try:
        return SpectrumProfile(
            sigma=_take_num(cfg, f"{prefix}.sigma", 0.0),
            cutoff=_take_num(cfg, f"{prefix}.cutoff", 1.0),
            amplitude=_take_num(cfg, f"{prefix}.amplitude", 1.0),
            weight_a=_take_num(cfg, f"{prefix}.weight_a", 1.0),
            weight_u_long=_take_num(cfg, f"{prefix}.weight_u_long", 1.0),
            weight_u_trans=_take_num(cfg, f"{prefix}.weight_u_trans", 1.0),
            weight_theta=_take_num(cfg, f"{prefix}.weight_theta", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_run_config(cfg: dict, out_dir: str | None = None) -> RunConfig:
    cfg = dict(cfg)
    params = _model_params(cfg)
    kind = str(_take(cfg, "init.kind", "spectrum"))
    try:
        init = InitialDataSpec(kind=kind, profile=_profile(cfg, "init"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    s_values = tuple(float(s) for s in _as_tuple(_take(cfg, "diag.s_values",
                                                       (0.25, 0.5, 1.0, 1.4))))
    delta0 = _take(cfg, "diag.delta0", None)
    out = out_dir if out_dir is not None else _take(cfg, "out.dir", None)
    if out is None:
        raise ConfigError("output directory required: set out.dir or pass -o")
    try:
        rc = RunConfig(
            n=_take_int(cfg, "grid.n"),
            box_length=_take_num(cfg, "grid.box_length"),
            params=params,
            init=init,
            dt=_take_num(cfg, "time.dt"),
            t_end=_take_num(cfg, "time.t_end"),
            cadence=_take_num(cfg, "time.cadence"),
            s_values=s_values,
            delta0=None if delta0 is None else float(delta0),
            delta=_take_num(cfg, "diag.delta", 0.1),
            split_R=_take_num(cfg, "diag.split_R", 1.0),
            seed=_take_int(cfg, "seed", 0),
            out_dir=str(out),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _reject_unknown(cfg)
    return rc


def _cmd_run(args) -> int:
    raw = load_config(args.config)
    config = build_run_config(raw, out_dir=args.out)
    os.makedirs(config.out_dir, exist_ok=True)
    resolved = {k: (list(v) if isinstance(v, tuple) else v) for k, v in raw.items()}
    try:
        integrator.run(config, resolved_config=resolved)
    except RunAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        if isinstance(exc.cause, CflViolation):
            return EXIT_CFL
        return EXIT_POSITIVITY
    print(f"run complete: {os.path.join(config.out_dir, 'series.csv')}")
    return EXIT_OK


def _oracle_times(cfg: dict) -> np.ndarray:
    if "times.list" in cfg:
        times = np.array([float(v) for v in _as_tuple(_take(cfg, "times.list"))])
    else:
        start = _take_num(cfg, "times.start")
        stop = _take_num(cfg, "times.stop")
        count = _take_int(cfg, "times.count")
        if not 0 < start < stop:
            raise ConfigError("times must satisfy 0 < start < stop")
        if count < 2:
            raise ConfigError("times.count must be at least 2")
        times = np.geomspace(start, stop, count)
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ConfigError("times must be nonnegative and strictly increasing")
    return times


_ORDER_STEM = {0: "l2", 1: "grad", 2: "grad2"}


def _cmd_oracle(args) -> int:
    cfg = dict(load_config(args.config))
    params = _model_params(cfg)
    profile = _profile(cfg, "profile")
    times = _oracle_times(cfg)
    orders = tuple(int(k) for k in _as_tuple(_take(cfg, "orders", (0, 1, 2))))
    neg_s = tuple(float(s) for s in _as_tuple(_take(cfg, "neg_s", ())))
    out = args.out if args.out is not None else _take(cfg, "out.dir", None)
    if out is None:
        raise ConfigError("output directory required: set out.dir or pass -o")
    _reject_unknown(cfg)

    model = params.model
    names = ["a", "u"] + (["theta"] if model == MODEL_FCNS else [])
    columns = ["t"]
    table = {"t": times}
    for k in orders:
        if k not in _ORDER_STEM:
            raise ConfigError(f"orders must be from {{0,1,2}}, got {k}")
        comps = oracle.component_decay_curves(profile, params, model, k, times)
        for name in names:
            col = f"{_ORDER_STEM[k]}_{name}"
            columns.append(col)
            table[col] = np.sqrt(comps[name])
    for s in neg_s:
        comps = oracle.component_decay_curves(profile, params, model, -s, times)
        lbl = f"{s:g}"
        for name in names:
            col = f"neg_{name}_s{lbl}"
            columns.append(col)
            table[col] = np.sqrt(comps[name])
        col = f"neg_energy_s{lbl}"
        columns.append(col)
        if model == MODEL_ICNS:
            table[col] = params.gamma * comps["a"] + comps["u"]
        else:
            table[col] = comps["a"] + comps["u"] + comps["theta"]

    os.makedirs(out, exist_ok=True)
    rows = [{c: table[c][i] for c in columns} for i in range(len(times))]
    runio.write_table(os.path.join(out, "oracle.csv"), columns, rows)
    manifest = {
        "schema_version": runio.SCHEMA_VERSION,
        "kind": "oracle",
        "package": "nsdecay",
        "version": __version__,
        "model": model,
        "params": {"mu": params.mu, "lambda_v": params.lambda_v, "gamma": params.gamma,
                   "p_prime1": params.p_prime1},
        "profile": {"sigma": profile.sigma, "cutoff": profile.cutoff,
                    "amplitude": profile.amplitude, "weight_a": profile.weight_a,
                    "weight_u_long": profile.weight_u_long,
                    "weight_u_trans": profile.weight_u_trans,
                    "weight_theta": profile.weight_theta},
        "times": {"start": float(times[0]), "stop": float(times[-1]), "count": len(times)},
        "orders": list(orders),
        "neg_s": list(neg_s),
        "columns": columns,
        "status": "complete",
    }
    runio.write_json(os.path.join(out, "manifest.json"), manifest)
    print(f"oracle curves written: {os.path.join(out, 'oracle.csv')}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        _, data = runio.read_table(args.csv)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        spec = runio.read_json(args.rates)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read rates file {args.rates}: {exc}") from exc
    entries = spec.get("rates")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("rates file must carry a nonempty 'rates' list")
    t_box = spec.get("t_box")
    if t_box is None:
        manifest_path = os.path.join(os.path.dirname(os.path.abspath(args.csv)), "manifest.json")
        if os.path.exists(manifest_path):
            t_box = runio.read_json(manifest_path).get("t_box")
    window = spec.get("window")
    times = data.get("t")
    if times is None:
        raise ConfigError("series CSV has no 't' column")

    fits = {}
    all_pass = True
    for entry in entries:
        column = entry.get("column")
        if column not in data:
            raise ConfigError(f"rates entry names unknown column {column!r}")
        theoretical = entry.get("theoretical")
        tol = entry.get("tol", 0.05)
        one_sided = bool(entry.get("one_sided", args.one_sided))
        win = entry.get("window", window)
        try:
            fit = fitting.fit_exponent(times, data[column],
                                       window=None if win is None else tuple(win),
                                       t_box=t_box)
        except ValueError as exc:
            raise ConfigError(f"fit on column {column!r} failed: {exc}") from exc
        if theoretical is not None:
            fit = fitting.compare_rates(fit, float(theoretical), float(tol), one_sided=one_sided)
            all_pass = all_pass and bool(fit.verdict)
        fits[column] = {
            "exponent": fit.exponent,
            "stderr": fit.stderr,
            "window": list(fit.window),
            "n_points": fit.n_points,
            "theoretical": fit.theoretical,
            "tol": tol if theoretical is not None else None,
            "one_sided": one_sided,
            "verdict": fit.verdict,
            "box_saturated": fit.box_saturated,
            "stable_window": fitting.first_stable_window(times, data[column]),
        }
    payload = {
        "schema_version": runio.SCHEMA_VERSION,
        "kind": "verdicts",
        "version": __version__,
        "source": os.path.basename(args.csv),
        "t_box": t_box,
        "fits": fits,
        "all_pass": all_pass,
    }
    out = args.out if args.out is not None else os.path.join(
        os.path.dirname(os.path.abspath(args.csv)), "verdicts.json")
    runio.write_json(out, payload)
    print(f"verdicts written: {out} (all_pass={all_pass})")
    return EXIT_OK if all_pass else EXIT_VERDICT_FAIL


def _cmd_verify(args) -> int:
    if args.n % 2 or args.n < 8:
        raise ConfigError(f"grid n must be even and >= 8, got {args.n}")
    grid = sp.make_grid(args.n, args.box_length)
    reports = inequalities.run_battery(grid, seed=args.seed, n_samples=args.samples)
    payload = {
        "schema_version": runio.SCHEMA_VERSION,
        "kind": "inequalities",
        "version": __version__,
        "seed": args.seed,
        "grid": {"n": args.n, "box_length": args.box_length},
        "samples": args.samples,
        "reports": [dict(rep.as_dict(), ratios=list(rep.ratios)) for rep in reports],
        "all_pass": all(rep.passed for rep in reports),
    }
    out = args.out if args.out is not None else "verify.json"
    runio.write_json(out, payload)
    ok = payload["all_pass"]
    print(f"inequality reports written: {out} (all_pass={ok})")
    return EXIT_OK if ok else EXIT_VERDICT_FAIL


def _cmd_report(args) -> int:
    manifest_path = os.path.join(args.dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ConfigError(f"{args.dir}: no manifest.json; not a run or oracle directory")
    try:
        manifest = runio.read_json(manifest_path)
    except ValueError as exc:
        raise ConfigError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if manifest.get("schema_version") != runio.SCHEMA_VERSION:
        raise ConfigError(f"{manifest_path}: schema_version mismatch")
    kind = manifest.get("kind")
    series = "series.csv" if kind == "run" else "oracle.csv"
    if not os.path.exists(os.path.join(args.dir, series)):
        raise ConfigError(f"{args.dir}: expected {series} alongside the manifest")
    verdicts = None
    verdicts_path = os.path.join(args.dir, "verdicts.json")
    if os.path.exists(verdicts_path):
        verdicts = runio.read_json(verdicts_path)
    payload = {
        "schema_version": runio.SCHEMA_VERSION,
        "kind": "report",
        "version": __version__,
        "source_kind": kind,
        "manifest": manifest,
        "verdicts": verdicts,
        "series_csv": series,
        "events_log": "events.log" if os.path.exists(os.path.join(args.dir, "events.log")) else None,
    }
    out = os.path.join(args.dir, "report.json")
    runio.write_json(out, payload)
    print(f"report written: {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsdecay",
        description="Pseudo-spectral decay experiments for compressible Navier-Stokes perturbations.",
    )
    parser.add_argument("--version", action="version", version=f"nsdecay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configured system and record diagnostics")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--out", default=None, help="output directory (overrides out.dir)")
    p_run.set_defaults(func=_cmd_run)

    p_or = sub.add_parser("oracle", help="emit semi-analytic linear decay curves")
    p_or.add_argument("config")
    p_or.add_argument("-o", "--out", default=None, help="output directory (overrides out.dir)")
    p_or.set_defaults(func=_cmd_oracle)

    p_fit = sub.add_parser("fit", help="fit decay exponents from a series CSV")
    p_fit.add_argument("csv")
    p_fit.add_argument("--rates", required=True, help="JSON rate table")
    p_fit.add_argument("--one-sided", action="store_true",
                       help="default to upper-bound comparison semantics")
    p_fit.add_argument("-o", "--out", default=None, help="verdicts JSON path")
    p_fit.set_defaults(func=_cmd_fit)

    p_ver = sub.add_parser("verify", help="run the functional-inequality battery")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--n", type=int, default=16, help="grid points per axis")
    p_ver.add_argument("--box-length", type=float, default=1.0)
    p_ver.add_argument("--samples", type=int, default=200)
    p_ver.add_argument("-o", "--out", default=None, help="report JSON path")
    p_ver.set_defaults(func=_cmd_verify)

    p_rep = sub.add_parser("report", help="bundle manifest and verdicts for plotting")
    p_rep.add_argument("dir")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    threads = os.environ.get("NSDECAY_THREADS")
    if threads:
        try:
            sp.set_fft_workers(int(threads))
        except ValueError:
            print(f"error: NSDECAY_THREADS={threads!r} is not an integer", file=sys.stderr)
            return EXIT_CONFIG
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DensityNonpositive, TemperatureNonpositive, PositivityUnachievable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except CflViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CFL
    except NsdecayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERDICT_FAIL


if __name__ == "__main__":
    sys.exit(main())
