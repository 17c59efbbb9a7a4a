"""Batch front-end: one subcommand per pipeline.

Every run merges three layers of settings (built-in defaults, an optional JSON
``--config`` file, explicit flags), computes everything in memory, and only
then writes ``<out-dir>/<command>.csv`` and ``<out-dir>/<command>.json``.
The CSV is also printed to standard output; progress goes to standard error.

Exit codes: 0 success, 1 failure inside a mathematical stage, 2 bad config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ConfigError, RieszLabError
from .freq import build_lambda_set, collinear_centers, riesz_product_expand
from .kernels import G_plane, fejer_transfer, h_theta, inv_ft_l1, ratio_multiplier_l1, theta_search
from .scheme import (
    Case,
    construct_scheme,
    rescale_to_integers,
    scheme_from_dict,
    verify_conditions,
)
from .symbols import RadialCase, classify_radial, get_symbol
from .torus import Builder, QuadratureSpec, growth_profile, l1_norm
from .witness import DELEEUW_NOTE, WitnessParams, reports_to_csv, witness_report

log = logging.getLogger("rieszlab")

EXIT_OK, EXIT_MATH, EXIT_CONFIG = 0, 1, 2


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

QUADRATURE_DEFAULTS = {"mode": "auto", "grid_n": None, "samples": 1_000_000}

DEFAULTS: dict[str, dict[str, Any]] = {
    "riesz-norm": {"s_min": 1, "s_max": 6, "ratio": 4, "direction": [1, 0], "quadrature": QUADRATURE_DEFAULTS},
    "z-growth": {
        "builder": "SymmetricZ",
        "s_min": 1,
        "s_max": 6,
        "ratio": 16,
        "direction": [1, 0],
        "quadrature": QUADRATURE_DEFAULTS,
    },
    "scheme": {
        "symbol": "logcos",
        "case": "auto",
        "s": 3,
        "epsilon": 0.01,
        "N": 8,
        "sampler_budget": 64,
        "integer": True,
        "scheme_file": None,
    },
    "transfer-check": {
        "symbol": "logcos",
        "case": "auto",
        "s": 3,
        "epsilon": 0.01,
        "N": 8,
        "theta": None,
        "points": 100,
        "plane_samples": 100_000,
    },
    "classify": {"symbol": "gaussian", "direction_count": 64, "scale_depth": 40},
    "witness": {
        "symbol": "logcos",
        "case": "auto",
        "s_min": 2,
        "s_max": 6,
        "N": 8,
        "c_hat": None,
        "torus_samples": 200_000,
        "plane_samples": 100_000,
        "scheme_symbol": None,
        "direct_p": True,
    },
}

COMMON_DEFAULTS = {"seed": 0, "workers": 1}


def _expect(cfg: dict, key: str, kind, allow_none: bool = False) -> None:
    v = cfg[key]
    if v is None and allow_none:
        return
    ok = isinstance(v, kind) and not (kind in (int, (int, float)) and isinstance(v, bool))
    if not ok:
        raise ConfigError(f"config key {key!r} has invalid value {v!r}")


def build_config(command: str, file_cfg: dict | None, overrides: dict) -> dict:
    """Defaults, then the JSON file, then flags; unknown keys are rejected."""
    cfg = {**COMMON_DEFAULTS, **json.loads(json.dumps(DEFAULTS[command]))}
    for layer in (file_cfg or {}, overrides):
        if not isinstance(layer, dict):
            raise ConfigError("config must be a JSON object")
        for k, v in layer.items():
            if k not in cfg:
                raise ConfigError(f"unknown config key {k!r} for {command}")
            if k == "quadrature":
                if not isinstance(v, dict) or set(v) - set(QUADRATURE_DEFAULTS):
                    raise ConfigError(f"invalid quadrature block {v!r}")
                cfg[k] = {**cfg[k], **v}
            else:
                cfg[k] = v
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    _expect(cfg, "seed", int)
    _expect(cfg, "workers", int)
    if cfg["workers"] < 1:
        raise ConfigError("workers must be positive")
    for k in ("s_min", "s_max", "s", "N", "ratio", "points", "sampler_budget", "direction_count", "scale_depth",
              "torus_samples", "plane_samples"):
        if k in cfg:
            _expect(cfg, k, int)
            if cfg[k] < 1:
                raise ConfigError(f"{k} must be a positive integer, got {cfg[k]}")
    if "s_min" in cfg and cfg["s_min"] > cfg["s_max"]:
        raise ConfigError("s_min exceeds s_max")
    for k in ("epsilon", "c_hat"):
        if k in cfg:
            _expect(cfg, k, (int, float), allow_none=k == "c_hat")
            if cfg[k] is not None and not cfg[k] > 0:
                raise ConfigError(f"{k} must be positive")
    for k in ("symbol", "builder", "case"):
        if k in cfg:
            _expect(cfg, k, str)
    if "case" in cfg and cfg["case"] != "auto":
        Case.parse(cfg["case"])
    if "builder" in cfg:
        try:
            Builder(cfg["builder"])
        except ValueError:
            raise ConfigError(f"unknown builder {cfg['builder']!r}") from None
    if "theta" in cfg and cfg["theta"] is not None:
        _expect(cfg, "theta", int)
    if "direction" in cfg:
        d = cfg["direction"]
        if not (isinstance(d, list) and len(d) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in d)) or d == [0, 0]:
            raise ConfigError("direction must be a nonzero pair of integers")
    if "quadrature" in cfg:
        q = cfg["quadrature"]
        if q["mode"] not in ("auto", "grid", "mc"):
            raise ConfigError(f"unknown quadrature mode {q['mode']!r}")
        if not isinstance(q["samples"], int) or q["samples"] < 2:
            raise ConfigError("quadrature samples must be an integer >= 2")
        if q["mode"] == "grid" and q["grid_n"] is None:
            raise ConfigError("quadrature mode 'grid' needs grid_n")
        if q["grid_n"] is not None and not (isinstance(q["grid_n"], int) and q["grid_n"] >= 1):
            raise ConfigError("quadrature grid_n must be a positive integer")
    if "symbol" in cfg:
        get_symbol(cfg["symbol"])  # parse errors surface as config errors


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quadrature(cfg: dict) -> QuadratureSpec:
    q = cfg["quadrature"]
    if q["mode"] == "mc":
        return QuadratureSpec.monte_carlo(q["samples"], seed=cfg["seed"])
    if q["mode"] == "grid":
        return QuadratureSpec.fixed_grid(q["grid_n"], seed=cfg["seed"], samples=q["samples"])
    return QuadratureSpec(mode="auto", samples=q["samples"], seed=cfg["seed"])


def _resolve_case(symbol, case: str):
    if case != "auto":
        return Case.parse(case), None
    cls = classify_radial(symbol)
    if cls.case is RadialCase.IIA:
        return Case.IIA, cls
    if cls.case is RadialCase.IIB:
        return Case.IIB, cls
    raise ConfigError(f"symbol {symbol.id} classifies as {cls.case.value}; set case explicitly")


# ---------------------------------------------------------------------------
# Commands: each returns (csv fieldnames, csv rows, json payload)
# ---------------------------------------------------------------------------


@dataclass
class Result:
    fields: list[str]
    rows: list[dict]
    payload: dict


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def cmd_riesz_norm(cfg: dict) -> Result:
    spec = _quadrature(cfg)
    rows, out = [], []
    for s in range(cfg["s_min"], cfg["s_max"] + 1):
        log.info("riesz-norm: s=%d", s)
        prod = riesz_product_expand(collinear_centers(s, cfg["ratio"], tuple(cfg["direction"])))
        pn = l1_norm(prod, spec)
        rn = l1_norm(prod.add_constant(-1), spec)
        rows.append({
            "s": s,
            "product_norm": _fmt(pn.value),
            "product_error": _fmt(pn.error_bound),
            "r_norm": _fmt(rn.value),
            "r_error": _fmt(rn.error_bound),
            "method": rn.method.value,
        })
        out.append({"s": s, "product": pn.to_dict(), "r": rn.to_dict()})
    return Result(list(rows[0]), rows, {"rows": out})


def cmd_z_growth(cfg: dict) -> Result:
    spec = _quadrature(cfg)
    direction = tuple(cfg["direction"])
    rows, out = [], []
    for s in range(cfg["s_min"], cfg["s_max"] + 1):
        log.info("z-growth: s=%d", s)
        (r,) = growth_profile(cfg["builder"], lambda k: collinear_centers(k, cfg["ratio"], direction), [s], spec)
        rows.append({
            "s": s,
            "norm": _fmt(r.norm.value),
            "error": _fmt(r.norm.error_bound),
            "norm_per_s": _fmt(r.per_s),
            "method": r.norm.method.value,
        })
        out.append({"s": s, "norm": r.norm.to_dict(), "norm_per_s": r.per_s})
    return Result(list(rows[0]), rows, {"builder": cfg["builder"], "rows": out})


def _build_scheme(cfg: dict):
    symbol = get_symbol(cfg["symbol"])
    case, cls = _resolve_case(symbol, cfg["case"])
    log.info("constructing %s scheme for %s, s=%d", case.value, symbol.id, cfg["s"])
    return construct_scheme(symbol, case, cfg["s"], cfg["epsilon"], cfg["N"], cfg.get("sampler_budget", 64),
                            classification=cls)


def cmd_scheme(cfg: dict) -> Result:
    if cfg["scheme_file"] is not None:
        try:
            data = json.loads(Path(cfg["scheme_file"]).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read scheme file: {exc}") from None
        scheme = scheme_from_dict(data)
    else:
        scheme = _build_scheme(cfg)
    if cfg["integer"]:
        scheme = rescale_to_integers(scheme)
    report = verify_conditions(scheme)
    rows = [
        {"condition": name, "ok": r.ok, "index": "" if r.index is None else r.index, "detail": r.detail}
        for name, r in report.results.items()
    ]
    payload = {"scheme": scheme.to_dict(), "fingerprint": scheme.fingerprint(), "verification": report.to_dict()}
    if not report.passed:
        raise _StageFailure("verify", f"conditions failed: {sorted(report.failures())}", Result(list(rows[0]), rows, payload))
    return Result(list(rows[0]), rows, payload)


def cmd_transfer_check(cfg: dict) -> Result:
    ig = rescale_to_integers(_build_scheme(cfg))
    plane = QuadratureSpec(samples=cfg["plane_samples"], seed=cfg["seed"])
    if cfg["theta"] is None:
        choice = theta_search(ig, plane)
        theta = choice.theta
    else:
        theta = cfg["theta"]
    H = h_theta(ig, theta)
    scale = 2**theta
    phi = riesz_product_expand([c.scaled(scale) for c in ig.frequencies]).add_constant(-1)
    W = fejer_transfer(dict(phi.items()))
    qs = list(build_lambda_set(ig.frequencies).elements)
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    for _ in range(cfg["points"]):
        q = qs[rng.integers(len(qs))]
        u = rng.uniform(-1.5, 1.5, size=2) / scale
        xi = (q.k1 + Fraction(float(u[0])), q.k2 + Fraction(float(u[1])))
        worst = max(worst, abs(H.at(xi) - W.at((xi[0] * scale, xi[1] * scale))))
    g = inv_ft_l1(G_plane(1))
    hn = inv_ft_l1(H, None, plane)
    rn = ratio_multiplier_l1(ig, theta, plane)
    rows = [
        {"quantity": "identity_residual_max", "value": _fmt(worst), "error": "0.0", "tail": "0.0"},
        {"quantity": "G_inv_ft_norm", "value": _fmt(g.value), "error": _fmt(g.error_bound), "tail": _fmt(g.tail)},
        {"quantity": "H_inv_ft_norm", "value": _fmt(hn.value), "error": _fmt(hn.error_bound), "tail": _fmt(hn.tail)},
        {"quantity": "ratio_multiplier_norm", "value": _fmt(rn.value), "error": _fmt(rn.error_bound),
         "tail": _fmt(getattr(rn, "tail", 0.0))},
    ]
    payload = {
        "theta": theta,
        "points": cfg["points"],
        "identity_residual_max": worst,
        "G": g.to_dict(),
        "H": hn.to_dict(),
        "ratio_multiplier": rn.to_dict(),
        "scheme_fingerprint": ig.fingerprint(),
    }
    return Result(["quantity", "value", "error", "tail"], rows, payload)


def cmd_classify(cfg: dict) -> Result:
    symbol = get_symbol(cfg["symbol"])
    cls = classify_radial(symbol, cfg["direction_count"], cfg["scale_depth"])
    d = cls.to_dict()
    row = {
        "symbol": symbol.id,
        "case": d["case"],
        "direction": "" if cls.direction is None else f"{cls.direction[0]!r} {cls.direction[1]!r}",
        "a": "" if cls.a is None else _fmt(cls.a),
        "b": "" if cls.b is None else _fmt(cls.b),
        "omega_constant": "" if cls.omega_constant is None else cls.omega_constant,
        "obstruction": cls.bonami_poornima_obstruction,
    }
    return Result(list(row), [row], {"symbol": symbol.id, "classification": d})


def cmd_witness(cfg: dict) -> Result:
    symbol = get_symbol(cfg["symbol"])
    if cfg["scheme_symbol"] is not None:
        case, _ = _resolve_case(get_symbol(cfg["scheme_symbol"]), cfg["case"])
    else:
        case, _ = _resolve_case(symbol, cfg["case"])
    params = WitnessParams(
        N=cfg["N"],
        c_hat=cfg["c_hat"],
        torus_samples=cfg["torus_samples"],
        plane_samples=cfg["plane_samples"],
        seed=cfg["seed"],
        scheme_symbol=cfg["scheme_symbol"],
        direct_p=cfg["direct_p"],
        workers=cfg["workers"],
    )
    s_list = list(range(cfg["s_min"], cfg["s_max"] + 1))
    log.info("witness: %s case %s, s=%s", symbol.id, case.value, s_list)
    reports = witness_report(symbol, case, s_list, params)
    text = reports_to_csv(reports)
    rows = list(csv.DictReader(io.StringIO(text)))
    return Result(list(rows[0]), rows, {"reports": [r.to_dict() for r in reports], "note": DELEEUW_NOTE})


COMMANDS: dict[str, Callable[[dict], Result]] = {
    "riesz-norm": cmd_riesz_norm,
    "z-growth": cmd_z_growth,
    "scheme": cmd_scheme,
    "transfer-check": cmd_transfer_check,
    "classify": cmd_classify,
    "witness": cmd_witness,
}


class _StageFailure(RieszLabError):
    """A math stage finished but its outcome is a failure; outputs are still written."""

    def __init__(self, stage: str, message: str, result: Result):
        super().__init__(message)
        self.stage = stage
        self.result = result


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def render_csv(result: Result, meta: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=result.fields, lineterminator="\n")
    w.writeheader()
    for row in result.rows:
        w.writerow(row)
    for k, v in meta.items():
        buf.write(f"# {k}: {v if isinstance(v, str) else canonical_json(v)}\n")
    return buf.getvalue()


def render_json(result: Result, meta: dict) -> str:
    return json.dumps({**meta, "result": result.payload}, indent=2, sort_keys=True, default=_json_default) + "\n"


def _write_outputs(command: str, result: Result, cfg: dict, out_dir: Path, wall_time: float | None, status: str) -> str:
    meta = {
        "command": command,
        "status": status,
        "version": __version__,
        "seed": cfg["seed"],
        "config_hash": config_hash(cfg),
        "config": cfg,
    }
    if wall_time is not None:
        meta["wall_time_s"] = f"{wall_time:.3f}"
    text = render_csv(result, meta)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = command.replace("-", "_")
    (out_dir / f"{stem}.json").write_text(render_json(result, meta))
    (out_dir / f"{stem}.csv").write_text(text)
    return text


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

FLAGS: dict[str, list[tuple[str, type]]] = {
    "riesz-norm": [("s_min", int), ("s_max", int), ("ratio", int)],
    "z-growth": [("builder", str), ("s_min", int), ("s_max", int), ("ratio", int)],
    "scheme": [("symbol", str), ("case", str), ("s", int), ("epsilon", float), ("N", int), ("scheme_file", str)],
    "transfer-check": [("symbol", str), ("case", str), ("s", int), ("epsilon", float), ("N", int), ("theta", int),
                       ("points", int), ("plane_samples", int)],
    "classify": [("symbol", str), ("direction_count", int), ("scale_depth", int)],
    "witness": [("symbol", str), ("case", str), ("s_min", int), ("s_max", int), ("N", int), ("c_hat", float),
                ("torus_samples", int), ("plane_samples", int), ("scheme_symbol", str)],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rieszlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rieszlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, flags in FLAGS.items():
        sp = sub.add_parser(name, help=COMMANDS[name].__doc__ or name)
        sp.add_argument("--config", type=Path, help="JSON file with parameters")
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--workers", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--out-dir", type=Path, default=Path("."))
        sp.add_argument("--wall-time", action="store_true", help="add wall time to the metadata (breaks byte identity)")
        sp.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")
        for key, kind in flags:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=kind, default=argparse.SUPPRESS)
        if name in ("riesz-norm", "z-growth"):
            sp.add_argument("--mode", choices=("auto", "grid", "mc"), default=argparse.SUPPRESS)
            sp.add_argument("--samples", type=int, default=argparse.SUPPRESS)
            sp.add_argument("--grid-n", dest="grid_n", type=int, default=argparse.SUPPRESS)
        if name == "scheme":
            sp.add_argument("--rational", dest="integer", action="store_false", default=argparse.SUPPRESS)
        if name == "witness":
            sp.add_argument("--no-direct-p", dest="direct_p", action="store_false", default=argparse.SUPPRESS)
    return p


_META_KEYS = {"command", "config", "out_dir", "wall_time", "quiet", "mode", "samples", "grid_n"}


def _setup_logging(quiet: bool) -> None:
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING if quiet else logging.INFO)
    log.propagate = False


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    _setup_logging(args.quiet)
    command = args.command
    overrides = {k: v for k, v in vars(args).items() if k not in _META_KEYS}
    quad = {k: getattr(args, k) for k in ("mode", "samples", "grid_n") if hasattr(args, k)}
    if quad:
        overrides["quadrature"] = quad
    try:
        file_cfg = None
        if args.config is not None:
            try:
                file_cfg = json.loads(args.config.read_text())
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = build_config(command, file_cfg, overrides)
    except ConfigError as exc:
        print(f"rieszlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    status, code = "ok", EXIT_OK
    try:
        result = COMMANDS[command](cfg)
    except _StageFailure as exc:
        result, status, code = exc.result, f"failed at stage {exc.stage}", EXIT_MATH
        print(f"rieszlab: [{exc.stage}] {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"rieszlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RieszLabError as exc:
        print(f"rieszlab: [{exc.stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MATH
    wall = time.perf_counter() - start if args.wall_time else None
    text = _write_outputs(command, result, cfg, args.out_dir, wall, status)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
