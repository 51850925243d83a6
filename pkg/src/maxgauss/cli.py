"""Command-line front end.

    maxgauss <bound|tune|simulate|verify> --config PATH [--seed N] [--reps N]
             [--out PATH] [--format json|csv] [--workers K]

Exit status: 0 success, 1 unreadable or incomplete config, 2 domain or
constraint error, 3 verification failure.  The config grammar is described
in docs/config.md.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import bounds, reports, tune, verify
from .errors import InfeasibleError, MaxGaussError
from .simulate import DistributionSpec, run_experiment
from .smoothmax import SmoothingParams

COMMANDS = ("bound", "tune", "simulate", "verify")
EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(Exception):
    """Config cannot be read or lacks a field; the message names the field."""


@dataclass
class RunConfig:
    command: str
    spec: DistributionSpec | None
    params: SmoothingParams | None
    reps: int
    seed: int | None
    out_path: str | None
    format: str = "json"
    workers: int = 1
    iota: float | None = None
    moments: dict = field(default_factory=dict)
    tune: dict = field(default_factory=dict)
    verify_scale: str = "quick"

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "spec": self.spec.to_dict() if self.spec else None,
            "params": self.params.to_dict() if self.params else None,
            "iota": self.iota,
            "reps": self.reps,
            "seed": self.seed,
            "format": self.format,
            "workers": self.workers,
            "moments": self.moments,
            "tune": self.tune,
        }


def _get(section, key, conv, name, default=None, required=False):
    if section is None or key not in section:
        if required:
            raise ConfigError(f"missing required field {name}")
        return default
    raw = section[key].strip()
    try:
        if conv is bool:
            return section.getboolean(key)
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"field {name}: cannot parse {raw!r} ({exc})") from None


def _section(cp, name):
    return cp[name] if cp.has_section(name) else None


def _spec_from(cp, required):
    sec = _section(cp, "distribution")
    if sec is None:
        if required:
            raise ConfigError("missing required section [distribution]")
        return None
    tail = _get(sec, "tail", float, "distribution.tail")
    for alias in ("dof", "alpha"):
        tail = _get(sec, alias, float, f"distribution.{alias}", tail)
    try:
        return DistributionSpec(
            family=_get(sec, "family", str, "distribution.family", required=True),
            n=_get(sec, "n", int, "distribution.n", required=True),
            d=_get(sec, "d", int, "distribution.d", required=True),
            tail=tail,
            covariance=_get(sec, "covariance", str, "distribution.covariance", "identity"),
            rho=_get(sec, "rho", float, "distribution.rho", 0.0),
            standardized=_get(sec, "standardized", bool, "distribution.standardized", True),
        )
    except MaxGaussError as exc:
        raise type(exc)(f"section [distribution]: {exc}") from None


def load_config(path, command, seed=None, reps=None, out=None, fmt=None, workers=None, environ=None) -> RunConfig:
    """Parse ``path``; flags beat ``MAXGAUSS_SEED``/``MAXGAUSS_OUT``, which beat the file."""
    environ = os.environ if environ is None else environ
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config {path} is not valid: {exc}") from None
    run = _section(cp, "run")
    if command is None:
        command = _get(run, "command", str, "run.command", required=True)
    if command not in COMMANDS:
        raise ConfigError(f"field run.command: unknown command {command!r}")

    cfg_seed = _get(run, "seed", int, "run.seed")
    if "MAXGAUSS_SEED" in environ:
        try:
            cfg_seed = int(environ["MAXGAUSS_SEED"])
        except ValueError:
            raise ConfigError(f"MAXGAUSS_SEED is not an integer: {environ['MAXGAUSS_SEED']!r}") from None
    cfg_seed = seed if seed is not None else cfg_seed
    if cfg_seed is None and command in ("simulate", "verify"):
        raise ConfigError(f"missing required field run.seed (mandatory for {command})")
    if cfg_seed is not None and cfg_seed < 0:
        raise ConfigError("field run.seed must be nonnegative")
    out_path = out or environ.get("MAXGAUSS_OUT") or _get(run, "out", str, "run.out")
    fmt = fmt or _get(run, "format", str, "run.format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"field run.format: expected json or csv, got {fmt!r}")
    cfg_reps = reps if reps is not None else _get(run, "reps", int, "run.reps", 10_000)
    cfg_workers = workers if workers is not None else _get(run, "workers", int, "run.workers", 1)

    spec = _spec_from(cp, required=command != "verify")
    psec = _section(cp, "params")
    iota = _get(psec, "iota", float, "params.iota", required=command in ("bound", "tune", "simulate"))
    params = None
    if psec is not None and ("gamma" in psec or "delta" in psec):
        gamma = _get(psec, "gamma", float, "params.gamma", required=True)
        delta = _get(psec, "delta", float, "params.delta", required=True)
        try:
            params = SmoothingParams(gamma, delta, iota, spec.d if spec else 1)
        except MaxGaussError as exc:
            raise type(exc)(f"section [params]: {exc}") from None
    tsec = _section(cp, "tune")
    if command == "bound" and params is None:
        raise ConfigError("missing required field params.gamma")
    if command == "tune" and tsec is None:
        raise ConfigError("missing required section [tune]")
    if command == "simulate" and params is None and tsec is None:
        raise ConfigError("missing required field params.gamma (or a [tune] section)")
    tune_cfg = {}
    if tsec is not None:
        tune_cfg = {
            "objective": _get(tsec, "objective", str, "tune.objective", required=True),
            "value": _get(tsec, "value", float, "tune.value", required=True),
            "grid_points": _get(tsec, "grid_points", int, "tune.grid_points", 64),
            "refine_iters": _get(tsec, "refine_iters", int, "tune.refine_iters", 40),
            "gamma_min": _get(tsec, "gamma_min", float, "tune.gamma_min", 1e-3),
            "gamma_max": _get(tsec, "gamma_max", float, "tune.gamma_max", 1e3),
            "delta_min": _get(tsec, "delta_min", float, "tune.delta_min", 1e-3),
            "delta_max": _get(tsec, "delta_max", float, "tune.delta_max", 1e3),
        }
        if tune_cfg["objective"] not in ("budget", "radius_cap"):
            raise ConfigError(f"field tune.objective: expected budget or radius_cap, got {tune_cfg['objective']!r}")
    msec = _section(cp, "moments")
    moments = {
        "method": _get(msec, "method", str, "moments.method", "auto"),
        "reps": _get(msec, "reps", int, "moments.reps", cfg_reps),
    }
    scale = _get(_section(cp, "verify"), "scale", str, "verify.scale", "quick")
    if scale not in verify.SCALES:
        raise ConfigError(f"field verify.scale: expected one of {sorted(verify.SCALES)}, got {scale!r}")
    return RunConfig(
        command=command,
        spec=spec,
        params=params,
        reps=cfg_reps,
        seed=cfg_seed,
        out_path=out_path,
        format=fmt,
        workers=cfg_workers,
        iota=iota,
        moments=moments,
        tune=tune_cfg,
        verify_scale=scale,
    )


def _profile(cfg: RunConfig):
    return bounds.moment_profile(cfg.spec, cfg.iota, cfg.moments["reps"], cfg.seed or 0,
                                 method=cfg.moments["method"], workers=cfg.workers)


def _tune(cfg: RunConfig, profile):
    t = cfg.tune
    objective = tune.Objective(t["objective"], t["value"])
    req = tune.TuneRequest(
        profile=profile,
        d=cfg.spec.d,
        objective=objective,
        grid_points_per_axis=t["grid_points"],
        refine_iters=t["refine_iters"],
        gamma_range=(t["gamma_min"], t["gamma_max"]),
        delta_range=(t["delta_min"], t["delta_max"]),
    )
    return tune.optimize(req)


def _emit(cfg: RunConfig, text: str, suffix_files=None):
    if cfg.out_path:
        Path(cfg.out_path).write_text(text, encoding="utf-8")
        for suffix, body in (suffix_files or {}).items():
            out = Path(cfg.out_path)
            out.with_name(out.stem + suffix).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _kv_csv(result: dict) -> str:
    flat = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        elif not isinstance(obj, list):
            flat.append((prefix, obj))

    walk("", result)
    return reports.write_csv(("key", "value"), flat)


def run(cfg: RunConfig) -> int:
    """Execute one configured command and write its report; returns the exit status."""
    if cfg.command == "verify":
        suites = verify.run_suites(cfg.verify_scale, cfg.seed)
        result = {"suites": [s.to_dict() for s in suites], "passed": all(s.passed for s in suites)}
        if cfg.format == "json":
            _emit(cfg, reports.dumps(reports.envelope("verify", cfg.to_dict(), result)))
        else:
            rows = ((s.name, s.cases, s.failures, s.passed) for s in suites)
            _emit(cfg, reports.write_csv(("suite", "cases", "failures", "passed"), rows))
        return EXIT_OK if result["passed"] else EXIT_VERIFY

    profile = _profile(cfg)
    if cfg.command == "bound":
        report = bounds.l_n(cfg.params, profile)
        result = {"params": cfg.params.to_dict(), "profile": profile.to_dict(), "report": report.to_dict()}
        text = reports.dumps(reports.envelope("bound", cfg.to_dict(), result)) if cfg.format == "json" else _kv_csv(result)
        _emit(cfg, text)
        return EXIT_OK

    if cfg.command == "tune":
        try:
            res = _tune(cfg, profile)
        except InfeasibleError as exc:
            result = {"profile": profile.to_dict(), "feasible": False, "grid_minimum": exc.grid_minimum,
                      "message": str(exc)}
            if cfg.format == "json":
                _emit(cfg, reports.dumps(reports.envelope("tune", cfg.to_dict(), result)))
            else:
                _emit(cfg, _kv_csv(result))
            raise
        result = {"profile": profile.to_dict(), **res.to_dict()}
        if cfg.format == "json":
            _emit(cfg, reports.dumps(reports.envelope("tune", cfg.to_dict(), result)))
        else:
            rows = ((p.gamma, p.delta, p.radius, p.prob_bound, p.feasible, p.stage) for p in res.trace)
            _emit(cfg, reports.write_csv(("gamma", "delta", "radius", "prob_bound", "feasible", "stage"), rows))
        return EXIT_OK

    tuned = None
    params = cfg.params
    if params is None:
        tuned = _tune(cfg, profile)
        params = SmoothingParams(tuned.gamma, tuned.delta, cfg.iota, cfg.spec.d)
    res = run_experiment(cfg.spec, params, cfg.reps, cfg.seed, workers=cfg.workers, profile=profile)
    if cfg.format == "json":
        result = res.to_dict()
        if tuned is not None:
            result["tune"] = {k: v for k, v in tuned.to_dict().items() if k != "trace"}
        _emit(cfg, reports.dumps(reports.envelope("simulate", cfg.to_dict(), result)))
    else:
        _emit(cfg, reports.strassen_csv(res), {".samples.csv": reports.samples_csv(res)})
    return EXIT_VERIFY if res.violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxgauss", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="path to the run configuration")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--out", help="report path (stdout if omitted)")
    ap.add_argument("--format", choices=("json", "csv"))
    ap.add_argument("--workers", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, seed=args.seed, reps=args.reps,
                          out=args.out, fmt=args.format, workers=args.workers)
        return run(cfg)
    except ConfigError as exc:
        print(f"maxgauss: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"maxgauss: infeasible: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except MaxGaussError as exc:
        print(f"maxgauss: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
