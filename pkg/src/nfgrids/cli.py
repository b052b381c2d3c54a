"""Command-line entry point: ``nfgrids <subcommand> [flags]``.

Subcommands
    enumerate  populate the field cache up to --max-disc
    grids      compute grids for cached fields and write the grid cache
    stats      read the grid cache and write equidistribution reports
    report     enumerate, grids and stats in one go
    verify     run the acceptance criteria and print JSON pass/fail
    ingest     validate a JSONL file of degree 4/5 fields into the cache

Every flag can also be set through an ``NFGRIDS_<NAME>`` environment variable
(for example ``NFGRIDS_MAX_DISC=100000``); explicit flags win.

Exit codes: 0 success, 1 criterion failure, 2 config or input error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from .pipeline import (
    ConfigError,
    FieldCache,
    RunConfig,
    compute_grids,
    ingest_file,
    load_cached_fields,
    load_grid_cache,
    run_statistics,
    write_grid_cache,
    write_report,
)

EXIT_OK, EXIT_CRITERION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("nfgrids")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--degree", type=int)
    p.add_argument("--signature", help="r,s or 'all'")
    p.add_argument("--max-disc", dest="max_disc", type=float, help="bound T on |disc|")
    p.add_argument("--checkpoints", help="comma separated T values")
    p.add_argument("--E", dest="E", help="'(u1,...,un)' for E = u-perp, or V0")
    p.add_argument("--orderings", choices=("all", "first"))
    p.add_argument("--precision", type=int, help="root-finding precision in bits (>= 53)")
    p.add_argument("--tol", type=float)
    p.add_argument("--torsion-tol", dest="torsion_tol", type=float)
    p.add_argument("--norm-mode", dest="norm_mode")
    p.add_argument("--embedding")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--out")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nfgrids", description="Grids and shapes of number field lattices.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("enumerate", "populate the field cache"),
        ("grids", "compute and cache grids"),
        ("stats", "statistics from the grid cache"),
        ("report", "enumerate, grids and stats end to end"),
    ):
        _run_flags(sub.add_parser(name, help=help_))
    v = sub.add_parser("verify", help="run the acceptance criteria")
    _run_flags(v)
    v.add_argument("--scale", choices=("quick", "full"), default="quick")
    v.add_argument("--only", help="comma separated criterion numbers")
    v.add_argument("--tamper-mt3", action="store_true", help="negative control: flip the sign of alpha_2 in the MT3 check")
    ing = sub.add_parser("ingest", help="ingest degree 4/5 fields from a JSONL file")
    ing.add_argument("path")
    ing.add_argument("--cache-dir", dest="cache_dir")
    return ap


_CONFIG_KEYS = ("degree", "signature", "max_disc", "checkpoints", "E", "orderings", "precision", "tol", "torsion_tol", "norm_mode", "embedding", "cache_dir", "out", "fmt")


def config_from_args(args: argparse.Namespace, environ=None) -> RunConfig:
    return RunConfig.from_sources({k: getattr(args, k, None) for k in _CONFIG_KEYS}, environ)


def _grids(cfg: RunConfig, sig: str):
    fs = load_cached_fields(cfg, sig)
    gt = compute_grids(
        fs, cfg.E, cfg.orderings, cfg.norm_mode, cfg.embedding, cfg.precision, cfg.tol, cfg.torsion_tol, cfg.m_max, witness=True, chunk=cfg.chunk
    )
    return fs, gt


def cmd_enumerate(cfg: RunConfig) -> int:
    if cfg.degree >= 4:
        raise ConfigError("degree 4 and 5 fields enter the cache through 'nfgrids ingest'")
    cache = FieldCache(cfg)
    for sig in cfg.signatures():
        added = cache.populate(sig, cfg.max_disc)
        n = len(cache.load(sig, cfg.max_disc))
        print(f"signature ({sig}): {n} fields with |disc| <= {cfg.max_disc} ({added} appended) -> {cache.path(sig)}")
    return EXIT_OK


def cmd_grids(cfg: RunConfig) -> int:
    for sig in cfg.signatures():
        fs, gt = _grids(cfg, sig)
        p = write_grid_cache(cfg, sig, fs, gt)
        nq = int(gt.quarantined.sum())
        print(f"signature ({sig}): {len(fs)} fields, {len(gt) - nq} grids, {nq} quarantined -> {p}")
    return EXIT_OK


def cmd_stats(cfg: RunConfig) -> int:
    reports = []
    for sig in cfg.signatures():
        fs = load_cached_fields(cfg, sig)
        gt = load_grid_cache(cfg, sig, fs)
        reports.append(run_statistics(cfg, fs, gt))
    for p in write_report(cfg, reports):
        print(p)
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    if cfg.degree <= 3:
        cmd_enumerate(cfg)
    cmd_grids(cfg)
    return cmd_stats(cfg)


def cmd_verify(cfg: RunConfig, scale: str, only: str | None, tamper: bool) -> int:
    from .verification import run_all

    sel = None
    if only:
        try:
            sel = {int(x) for x in only.split(",")}
        except ValueError:
            raise ConfigError(f"--only expects criterion numbers, got {only!r}") from None
    t0 = time.perf_counter()
    results = run_all(scale, cfg, tol=cfg.tol, alpha2_sign=-1.0 if tamper else 1.0, only=sel)
    for r in results:
        print(r.line(), file=sys.stderr)
    out = {
        "scale": scale,
        "tampered_mt3": tamper,
        "passed": all(r.passed for r in results),
        "seconds": round(time.perf_counter() - t0, 1),
        "criteria": [{"number": r.number, "name": r.name, "passed": r.passed, "measured": r.measured} for r in results],
    }
    print(json.dumps(out, indent=2, default=_jsonable))
    return EXIT_OK if out["passed"] else EXIT_CRITERION


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def cmd_ingest(path: str, cache_dir: str) -> int:
    summary, errors = ingest_file(path, cache_dir)
    for d, (added, dup) in summary.items():
        print(f"degree {d}: {added} fields added, {dup} already present")
    for e in errors:
        print(f"rejected {path}: {e}", file=sys.stderr)
    return EXIT_CONFIG if errors else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "ingest":
            cache_dir = args.cache_dir or RunConfig.from_sources().cache_dir
            return cmd_ingest(args.path, cache_dir)
        cfg = config_from_args(args)
        if args.command == "verify":
            return cmd_verify(cfg, args.scale, args.only, args.tamper_mt3)
        return {"enumerate": cmd_enumerate, "grids": cmd_grids, "stats": cmd_stats, "report": cmd_report}[args.command](cfg)
    except ConfigError as e:
        print(f"nfgrids: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FileNotFoundError) as e:
        print(f"nfgrids: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
