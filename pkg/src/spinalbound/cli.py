"""Command-line entry point: ``spinalbound {bound,simulate,optimize,verify}``.

Every result file starts with the fully resolved configuration (a ``# config:``
comment line in CSV, a ``config`` object in JSON), and that echo can be fed
back through ``--config`` to reproduce the run.

Exit codes: 0 success, 1 configuration error, 2 property or dominance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bounds import ThetaPartition, bler_bound
from .channel import FAMILIES, FadingModel, sigma2_from_snr_db
from .codec import CodeParams
from .decoder import MAX_EXHAUSTIVE_BITS
from .optimizer import (MAX_COMPOSITIONS, brute_force_best_pattern, composition_count, greedy_pattern,
                        ttp_pattern)
from .pattern import TransmissionPattern
from .sim import SimConfig, sweep
from .verify import FAULTS, run_checks

log = logging.getLogger("spinalbound")

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2

CHANNEL_COLUMNS = ["family", "omega", "m", "kfactor", "flavor", "snr_db"]
BOUND_COLUMNS = CHANNEL_COLUMNS + ["kind", "theta_n", "a", "epsilon_a", "p_e"]
SIMULATE_COLUMNS = CHANNEL_COLUMNS + ["theta_n", "errors", "trials", "bler", "ci95_lo", "ci95_hi",
                                      "bound_refined", "bound_gallager", "dominance_ok"]
OPTIMIZE_COLUMNS = CHANNEL_COLUMNS + ["kind", "theta_n", "source", "step", "pattern", "p_e"]
VERIFY_COLUMNS = ["name", "passed", "measured", "tolerance", "detail"]

DEFAULTS = {
    "code": {"n": 8, "k": 2, "c": 8, "v": 32, "flavor": "complex"},
    "pattern": [6, 6, 6, 6],
    "channels": [
        {"family": "rayleigh", "omega": 1.0},
        {"family": "nakagami", "omega": 1.0, "m": 2.0},
        {"family": "rician", "omega": 1.0, "kfactor": 1.0},
    ],
    "snr_db": {"start": 0.0, "stop": 20.0, "step": 2.5},
    "theta_n": 20,
    "bound": "both",
    "trials": 10_000,
    "seed": 0,
    "code_mode": "fixed",
    "optimize": {"p_ini": 3, "budget": 19, "snr_db": 10.0},
}


class ConfigError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class RunConfig:
    params: CodeParams
    pattern: TransmissionPattern
    channels: tuple[FadingModel, ...]
    snr_db: tuple[float, ...]
    theta_n: int
    bound: str
    trials: int
    seed: int
    code_mode: str
    p_ini: int
    budget: int
    opt_snr_db: float
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def kinds(self) -> tuple[str, ...]:
        return ("refined", "gallager") if self.bound == "both" else (self.bound,)


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config_file(path: str | Path) -> dict:
    """YAML mapping, or a previous result file whose header echoes its config."""
    text = Path(path).read_text()
    first = text.splitlines()[0] if text else ""
    if first.startswith("# config:"):
        return json.loads(first[len("# config:"):])
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(where, f"not valid YAML ({getattr(exc, 'problem', exc)})") from None
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    if set(raw) >= {"config", "rows"}:
        return raw["config"]
    return raw


def _int(raw, where: str, minimum: int | None = None) -> int:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or raw != int(raw):
        raise ConfigError(where, f"expected an integer, got {raw!r}")
    val = int(raw)
    if minimum is not None and val < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {val}")
    return val


def _float(raw, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
        raise ConfigError(where, f"expected a finite number, got {raw!r}")
    return float(raw)


def _snr_grid(raw) -> tuple[float, ...]:
    if isinstance(raw, dict):
        unknown = set(raw) - {"start", "stop", "step"}
        if unknown:
            raise ConfigError("snr_db", f"unknown keys {sorted(unknown)}")
        try:
            start, stop, step = (_float(raw[k], f"snr_db.{k}") for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise ConfigError("snr_db", f"range needs start, stop and step (missing {exc.args[0]})") from None
        if step <= 0:
            raise ConfigError("snr_db.step", "must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [start + i * step for i in range(max(count, 0))]
    elif isinstance(raw, (list, tuple)):
        grid = [_float(v, f"snr_db[{i}]") for i, v in enumerate(raw)]
    else:
        grid = [_float(raw, "snr_db")]
    if not grid:
        raise ConfigError("snr_db", "SNR grid is empty")
    return tuple(grid)


def _channel(raw, i: int, flavor: str) -> FadingModel:
    where = f"channels[{i}]"
    if not isinstance(raw, dict):
        raise ConfigError(where, "expected a mapping with a 'family' key")
    unknown = set(raw) - {"family", "omega", "m", "kfactor"}
    if unknown:
        raise ConfigError(where, f"unknown keys {sorted(unknown)}")
    family = raw.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"{where}.family", f"must be one of {list(FAMILIES)}, got {family!r}")
    omega = _float(raw.get("omega", 1.0), f"{where}.omega")
    m = raw.get("m")
    kfactor = raw.get("kfactor")
    try:
        return FadingModel(family, omega,
                           None if m is None else _float(m, f"{where}.m"),
                           None if kfactor is None else _float(kfactor, f"{where}.kfactor"),
                           flavor)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from None


def resolve(raw: dict) -> RunConfig:
    """Validate a merged configuration mapping into a :class:`RunConfig`."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError("config", f"unknown keys {sorted(unknown)}")
    code = raw["code"]
    if not isinstance(code, dict):
        raise ConfigError("code", "expected a mapping")
    if set(code) - {"n", "k", "c", "v", "flavor"}:
        raise ConfigError("code", f"unknown keys {sorted(set(code) - {'n', 'k', 'c', 'v', 'flavor'})}")
    try:
        params = CodeParams(_int(code["n"], "code.n"), _int(code["k"], "code.k"), _int(code["c"], "code.c"),
                            _int(code["v"], "code.v"), code["flavor"])
    except KeyError as exc:
        raise ConfigError("code", f"missing {exc.args[0]}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("code", str(exc)) from None

    pat = raw["pattern"]
    if not isinstance(pat, (list, tuple)):
        raise ConfigError("pattern", "expected a list of symbol counts")
    ells = [_int(v, f"pattern[{i}]", 0) for i, v in enumerate(pat)]
    if len(ells) != params.spines:
        raise ConfigError("pattern", f"has {len(ells)} entries but n/k = {params.spines}")
    if ells[-1] < 1:
        raise ConfigError("pattern", "the last spine needs at least one symbol")
    pattern = TransmissionPattern(tuple(ells))

    chans = raw["channels"]
    if not isinstance(chans, (list, tuple)) or not chans:
        raise ConfigError("channels", "expected a nonempty list")
    channels = tuple(_channel(c, i, params.flavor) for i, c in enumerate(chans))

    bound = raw["bound"]
    if bound not in ("gallager", "refined", "both"):
        raise ConfigError("bound", f"must be gallager, refined or both, got {bound!r}")
    code_mode = raw["code_mode"]
    if code_mode not in ("fixed", "ensemble"):
        raise ConfigError("code_mode", f"must be fixed or ensemble, got {code_mode!r}")
    opt = raw["optimize"]
    if not isinstance(opt, dict) or set(opt) - {"p_ini", "budget", "snr_db"}:
        raise ConfigError("optimize", "expected a mapping with p_ini, budget, snr_db")
    seed = _int(raw["seed"], "seed", 0)
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    return RunConfig(
        params=params,
        pattern=pattern,
        channels=channels,
        snr_db=_snr_grid(raw["snr_db"]),
        theta_n=_int(raw["theta_n"], "theta_n", 1),
        bound=bound,
        trials=_int(raw["trials"], "trials", 1),
        seed=seed,
        code_mode=code_mode,
        p_ini=_int(opt["p_ini"], "optimize.p_ini", 1),
        budget=_int(opt["budget"], "optimize.budget", 1),
        opt_snr_db=_float(opt["snr_db"], "optimize.snr_db"),
        raw=raw,
    )


def build_config(args: argparse.Namespace) -> RunConfig:
    raw = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            raw = _merge(raw, load_config_file(args.config))
        except OSError as exc:
            raise ConfigError(str(args.config), exc.strerror or str(exc)) from None
    flags = {
        "seed": getattr(args, "seed", None),
        "theta_n": getattr(args, "theta_n", None),
        "trials": getattr(args, "trials", None),
        "bound": getattr(args, "bound", None),
        "code_mode": getattr(args, "code_mode", None),
    }
    raw = _merge(raw, {k: v for k, v in flags.items() if v is not None})
    opt = {"p_ini": getattr(args, "p_ini", None), "budget": getattr(args, "budget", None),
           "snr_db": getattr(args, "snr_db", None)}
    raw = _merge(raw, {"optimize": {k: v for k, v in opt.items() if v is not None}})
    return resolve(raw)


def fmt(value) -> str:
    """Shortest round-trip text for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def render(rows: list[dict], columns: list[str], config: dict, form: str) -> str:
    if form == "json":
        body = {"config": config, "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows]}
        return json.dumps(body, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _channel_cells(model: FadingModel, snr_db: float) -> dict:
    return {"family": model.family, "omega": model.omega, "m": model.m, "kfactor": model.kfactor,
            "flavor": model.flavor, "snr_db": snr_db}


def _config_echo(cfg: RunConfig) -> dict:
    return json.loads(json.dumps(cfg.raw))


def cmd_bound(cfg: RunConfig, args) -> int:
    partition = ThetaPartition.uniform(cfg.theta_n)
    rows = []
    for model in cfg.channels:
        for snr in cfg.snr_db:
            sigma2 = sigma2_from_snr_db(snr, model.omega)
            for kind in cfg.kinds:
                rep = bler_bound(kind, cfg.params, cfg.pattern, sigma2, model,
                                 partition if kind == "refined" else None)
                for a, eps in enumerate(rep.epsilons, start=1):
                    rows.append({**_channel_cells(model, snr), "kind": kind,
                                 "theta_n": cfg.theta_n if kind == "refined" else None,
                                 "a": a, "epsilon_a": eps, "p_e": rep.p_e})
    emit(render(rows, BOUND_COLUMNS, _config_echo(cfg), args.format), args.out)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    if cfg.params.n > MAX_EXHAUSTIVE_BITS:
        raise ConfigError("code.n", f"n={cfg.params.n} exceeds the exhaustive-search limit of "
                                    f"{MAX_EXHAUSTIVE_BITS} bits")
    configs = [SimConfig(cfg.params, cfg.pattern, model, cfg.snr_db, cfg.trials, cfg.seed, cfg.theta_n,
                         cfg.code_mode) for model in cfg.channels]
    results = sweep(configs, workers=args.workers, seed=cfg.seed)
    rows, failed = [], 0
    total = above = violations = 0
    for res in results:
        if res.error:
            print(f"error: {res.config.model.label}: {res.error}", file=sys.stderr)
            failed += 1
            continue
        for p in res.points:
            total += 1
            above += not p.dominance_ok
            violations += p.violation
            rows.append({**_channel_cells(res.config.model, p.snr_db), "theta_n": cfg.theta_n,
                         "errors": p.errors, "trials": p.trials, "bler": p.bler,
                         "ci95_lo": p.ci95[0], "ci95_hi": p.ci95[1], "bound_refined": p.bound_refined,
                         "bound_gallager": p.bound_gallager, "dominance_ok": p.dominance_ok})
            if not p.dominance_ok:
                print(f"  {res.config.model.label} {p.snr_db:g} dB: {p.errors}/{p.trials} errors, "
                      f"Wilson upper {p.ci95[1]:.3e} > refined bound {p.bound_refined:.3e}", file=sys.stderr)
    emit(render(rows, SIMULATE_COLUMNS, _config_echo(cfg), args.format), args.out)
    print(f"dominance: {above} of {total} points have a Wilson upper limit above the refined bound; "
          f"{violations} with the whole interval above it", file=sys.stderr)
    return EXIT_FAILURE if above or failed else EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    partition = ThetaPartition.uniform(cfg.theta_n)
    kind = "gallager" if cfg.bound == "gallager" else "refined"
    part = partition if kind == "refined" else None
    extra = cfg.budget - cfg.p_ini * cfg.params.spines
    if extra < 0:
        raise ConfigError("optimize.budget", f"budget {cfg.budget} is below p_ini * n/k = "
                                             f"{cfg.p_ini * cfg.params.spines}")
    rows = []
    for model in cfg.channels:
        sigma2 = sigma2_from_snr_db(cfg.opt_snr_db, model.omega)
        cells = {**_channel_cells(model, cfg.opt_snr_db), "kind": kind,
                 "theta_n": cfg.theta_n if kind == "refined" else None}
        final, trajectory = greedy_pattern(cfg.params, model, sigma2, part, cfg.p_ini, cfg.budget, kind)
        for i, step in enumerate(trajectory):
            rows.append({**cells, "source": "greedy", "step": i, "pattern": str(step.pattern), "p_e": step.p_e})
        ttp = ttp_pattern(TransmissionPattern.uniform(cfg.p_ini, cfg.params.spines), extra)
        ttp_val = bler_bound(kind, cfg.params, ttp, sigma2, model, part).p_e
        rows.append({**cells, "source": "ttp", "step": None, "pattern": str(ttp), "p_e": ttp_val})
        if composition_count(cfg.budget, cfg.params.spines) <= MAX_COMPOSITIONS:
            best, val = brute_force_best_pattern(cfg.params, model, sigma2, part, cfg.budget, kind)
            rows.append({**cells, "source": "brute_force", "step": None, "pattern": str(best), "p_e": val})
        else:
            log.warning("brute-force enumeration skipped: more than %d compositions", MAX_COMPOSITIONS)
        print(f"{model.label}: greedy {final} (P_e {trajectory[-1].p_e:.4e}), TTP {ttp} (P_e {ttp_val:.4e})",
              file=sys.stderr)
    emit(render(rows, OPTIMIZE_COLUMNS, _config_echo(cfg), args.format), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_checks(args.inject_fault)
    for c in checks:
        print(c.line(), file=sys.stderr)
    if args.out:
        rows = [{"name": c.name, "passed": c.passed, "measured": c.measured, "tolerance": c.tolerance,
                 "detail": c.detail} for c in checks]
        emit(render(rows, VERIFY_COLUMNS, {"inject_fault": args.inject_fault}, args.format), args.out)
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed} of {len(checks)} properties pass", file=sys.stderr)
    return EXIT_FAILURE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinalbound",
                                     description="BLER bounds, Monte Carlo checks and transmission-pattern "
                                                 "search for ML-decoded Spinal codes over fading channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    run = argparse.ArgumentParser(add_help=False, parents=[common])
    run.add_argument("--config", help="YAML config, or a previous result file to replay")
    run.add_argument("--seed", type=int)
    run.add_argument("--theta-n", type=int, help="number of theta intervals (default 20)")
    run.add_argument("--bound", choices=("gallager", "refined", "both"))

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bound", parents=[run], help="bound curves over channels and SNR")
    sim = sub.add_parser("simulate", parents=[run], help="Monte Carlo BLER with paired bounds")
    sim.add_argument("--trials", type=int, help="trials per SNR point (default 10000)")
    sim.add_argument("--code-mode", choices=("fixed", "ensemble"),
                     help="fixed hash key, or a fresh key per trial")
    sim.add_argument("--workers", type=int, default=1)
    opt = sub.add_parser("optimize", parents=[run], help="greedy, TTP and brute-force patterns")
    opt.add_argument("--p-ini", type=int)
    opt.add_argument("--budget", type=int)
    opt.add_argument("--snr-db", type=float)
    ver = sub.add_parser("verify", parents=[common], help="run the property suite")
    ver.add_argument("--inject-fault", choices=FAULTS, help="negative control")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args)
    try:
        cfg = build_config(args)
        handler = {"bound": cmd_bound, "simulate": cmd_simulate, "optimize": cmd_optimize}[args.command]
        return handler(cfg, args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
