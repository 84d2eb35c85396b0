"""Command-line front end.

Exit codes: 0 success (or "is a member"), 1 "not a member", 2 bad
configuration or input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import quantiles as quant
from .confset import CalibratedSet, calibrate
from .dataio import CsvFormatError, read_json, read_matrix_csv, read_regression_csv, read_vector_csv, write_json
from .errors import (
    DegenerateColumn,
    DimensionMismatch,
    InvalidSpec,
    NotFactorable,
    SelfNormError,
    SingularDesign,
    SingularRotation,
)
from .simharness import (
    METHODS,
    DgpSpec,
    run_concentration,
    run_coverage,
    run_hausdorff_similarity,
    run_width_scaling,
    write_coverage,
    write_table,
)

log = logging.getLogger("selfnorm")

EXIT_OK, EXIT_NOT_MEMBER, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_STAGES = {
    SingularDesign: "least-squares fit",
    SingularRotation: "rotation solve",
    DegenerateColumn: "plug-in correlation",
    NotFactorable: "bootstrap factorization",
}


class ConfigError(Exception):
    pass


def _stage(exc: Exception) -> str:
    for cls, name in _STAGES.items():
        if isinstance(exc, cls):
            return name
    return "computation"


def _load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = read_json(path)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg, path.parent


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required key {key!r}")
    return cfg[key]


def _alpha(value) -> float:
    try:
        a = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"alpha must be a number, got {value!r}") from None
    if not 0 < a < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {a}")
    return a


def _seed(cfg: dict, override) -> int:
    seed = cfg.get("seed", 0) if override is None else override
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _B(value):
    if value is None or value == "n":
        return value
    try:
        b = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"B must be an integer, null or \"n\", got {value!r}") from None
    if b < 1:
        raise ConfigError("B must be positive")
    return b


def cmd_calibrate(args) -> int:
    cfg, base = _load_config(args.config)
    data_path = base / _require(cfg, "data")
    variant = cfg.get("variant", "lin")
    if variant not in ("lin", "reclin", "wald"):
        raise ConfigError(f"variant must be lin, reclin or wald, got {variant!r}")
    alpha = _alpha(cfg.get("alpha", 0.1))
    seed = _seed(cfg, args.seed)
    B = _B(cfg.get("B"))
    if not data_path.is_file():
        raise ConfigError(f"data file not found: {data_path}")
    sample = read_regression_csv(data_path)
    if B == "n":
        B = -(-sample.n // 2)
    k_n = cfg.get("K_n")
    cset = calibrate(sample, variant, alpha, B, seed, K_n=k_n)
    resolved = {"data": str(cfg["data"]), "variant": variant, "alpha": alpha, "B": cset.B, "seed": seed,
                "K_n": cset.khat if variant == "wald" else None}
    doc = cset.to_dict()
    doc["config"] = resolved
    write_json(doc, args.out)
    print(f"variant: {variant}")
    print(f"khat: {cset.khat:.6f}")
    beta = cset.pilot_beta if cset.pilot_beta is not None else cset.wald_center
    print("pilot_beta: " + " ".join(f"{b:.6f}" for b in beta))
    print(f"written: {args.out}")
    return EXIT_OK


def cmd_member(args) -> int:
    try:
        cset = CalibratedSet.from_dict(read_json(args.set))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read calibrated set {args.set}: {exc}") from None
    if not Path(args.beta).is_file():
        raise ConfigError(f"beta file not found: {args.beta}")
    beta = read_vector_csv(args.beta)
    if beta.shape[0] != cset.p:
        raise ConfigError(f"beta has length {beta.shape[0]}, the set has p={cset.p}")
    stat = cset.statistic(beta)
    inside = bool(cset.contains(beta))
    print(f"member: {'true' if inside else 'false'}")
    print(f"statistic: {stat:.6f}")
    print(f"khat: {cset.khat:.6f}")
    return EXIT_OK if inside else EXIT_NOT_MEMBER


def cmd_quantile(args) -> int:
    alpha = _alpha(args.alpha)
    if args.method in ("bonferroni", "sidak"):
        if args.p is None:
            raise ConfigError("--p is required for bonferroni and sidak")
        if args.p < 1:
            raise ConfigError("--p must be positive")
        bonf = quant.bonferroni_quantile(alpha, args.p).khat
        if args.method == "bonferroni":
            print(f"bonferroni: {bonf:.6f}")
        else:
            sid = quant.sidak_quantile(alpha, args.p).khat
            print(f"sidak: {sid:.6f}")
            print(f"sidak <= bonferroni: {'true' if sid <= bonf else 'false'} ({sid:.6f} <= {bonf:.6f})")
        return EXIT_OK
    if args.gamma:
        if not Path(args.gamma).is_file():
            raise ConfigError(f"gamma file not found: {args.gamma}")
        gamma = read_matrix_csv(args.gamma)
    elif args.set:
        doc = read_json(args.set)
        if doc.get("gamma") is None:
            raise ConfigError("calibrated set carries no correlation matrix")
        gamma = np.asarray(doc["gamma"], dtype=np.float64)
    else:
        raise ConfigError("bootstrap needs --gamma CSV or --set JSON")
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ConfigError(f"correlation matrix must be square, got shape {gamma.shape}")
    if args.p is not None and args.p != gamma.shape[0]:
        raise ConfigError(f"--p {args.p} does not match the {gamma.shape[0]}x{gamma.shape[0]} matrix")
    B = args.B if args.B is not None else 2000
    if B < 1:
        raise ConfigError("--B must be positive")
    seed = 0 if args.seed is None else args.seed
    q = quant.bootstrap_quantile(gamma, alpha, B, seed, workers=args.workers)
    print(f"bootstrap: {q.khat:.6f}")
    print(f"B: {q.B_used} seed: {q.seed_used} jitter: {q.jitter:g}")
    return EXIT_OK


def _dgp(cfg: dict) -> DgpSpec:
    try:
        return DgpSpec.from_dict(_require(cfg, "dgp"))
    except TypeError as exc:
        raise ConfigError(f"bad dgp block: {exc}") from None


def cmd_simulate(args) -> int:
    cfg, _ = _load_config(args.config)
    spec = _dgp(cfg)
    methods = cfg.get("methods") or [cfg.get("method", "lin")]
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {list(METHODS)}")
    alpha = _alpha(cfg.get("alpha", 0.1))
    seed = _seed(cfg, args.seed)
    reps = int(cfg.get("reps", 100))
    B = _B(cfg.get("B"))
    workers = int(cfg.get("workers", 1))
    out = Path(args.out)
    summary = {"config": {"dgp": spec.to_dict(), "methods": methods, "alpha": alpha, "B": B,
                          "reps": reps, "seed": seed, "measure_width": bool(cfg.get("measure_width", False))},
               "results": {}}
    for m in methods:
        rep = run_coverage(spec, m, alpha, B, reps, seed, workers, bool(cfg.get("measure_width", False)))
        write_coverage(rep, out)
        summary["results"][m] = rep.summary()
        print(f"{m}: coverage {rep.coverage:.4f} (se {rep.mc_se:.4f}) hits {rep.hits}/{rep.reps} "
              f"failures {rep.failures}")
    write_json(summary, out / "summary.json")
    return EXIT_OK


def cmd_diag(args) -> int:
    cfg, _ = _load_config(args.config)
    spec = _dgp(cfg)
    seed = _seed(cfg, args.seed)
    reps = int(cfg.get("reps", 100))
    grid = [int(n) for n in _require(cfg, "n_grid")]
    workers = int(cfg.get("workers", 1))
    resolved = {"kind": args.kind, "dgp": spec.to_dict(), "n_grid": grid, "reps": reps, "seed": seed}
    if args.kind == "width":
        alpha = _alpha(cfg.get("alpha", 0.1))
        method = cfg.get("method", "reclin")
        if method not in ("lin", "reclin", "wald", "wald_oracle"):
            raise ConfigError(f"unknown method {method!r}")
        B = _B(cfg.get("B"))
        resolved.update(alpha=alpha, method=method, B=B, directions=int(cfg.get("directions", 50)))
        rows = run_width_scaling(spec, grid, method, alpha, reps, B, seed, resolved["directions"], workers)
    elif args.kind == "concentration":
        oracle_size = int(cfg.get("oracle_size", 10**6))
        resolved.update(oracle_size=oracle_size)
        rows = run_concentration(spec, grid, reps, seed, oracle_size, workers).rows()
    else:
        alpha = _alpha(cfg.get("alpha", 0.1))
        B = _B(cfg.get("B"))
        resolved.update(alpha=alpha, B=B, directions=int(cfg.get("directions", 50)),
                        n_faces=int(cfg.get("n_faces", 200)))
        rows = run_hausdorff_similarity(spec, grid, alpha, reps, B, seed, resolved["directions"],
                                        resolved["n_faces"], workers=workers)
    write_table(rows, {"config": resolved}, args.out, args.kind)
    for row in rows:
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selfnorm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def seed_opt(p):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("calibrate", help="calibrate a confidence set from a CSV dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    seed_opt(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("member", help="test a candidate coefficient vector")
    p.add_argument("--set", required=True)
    p.add_argument("--beta", required=True)
    p.set_defaults(func=cmd_member)

    p = sub.add_parser("quantile", help="critical value for the max statistic")
    p.add_argument("--method", choices=("bonferroni", "sidak", "bootstrap"), required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--gamma", default=None, help="correlation matrix CSV (bootstrap)")
    p.add_argument("--set", default=None, help="calibrated-set JSON supplying the correlation (bootstrap)")
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    seed_opt(p)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("simulate", help="Monte Carlo coverage study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    seed_opt(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diag", help="width, concentration or Hausdorff diagnostics")
    p.add_argument("--kind", choices=("width", "concentration", "hausdorff"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    seed_opt(p)
    p.set_defaults(func=cmd_diag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidSpec, DimensionMismatch, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SelfNormError as exc:
        print(f"error: numerical failure in {_stage(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
