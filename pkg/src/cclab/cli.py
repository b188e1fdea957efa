"""Command line entry point.

    cclab run <config-file> [--seed S] [--out DIR] [--samples M] [--budget B]
    cclab batch <dir>       [--seed S] [--out DIR] [--samples M] [--budget B]

Exit codes: 0 pass or recorded, 1 fail, 2 config error. ``CCLAB_THREADS``
caps the number of worker threads (batch members and sampling chunks).
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

from . import experiments as ex
from .errors import CclabError, ConfigError
from .spaces import derive_rng

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _prepare(path, args, member_seed=None) -> dict:
    cfg = ex.load_config(path)
    seed = member_seed if member_seed is not None else args.seed
    cfg = ex.apply_overrides(cfg, seed, args.samples, args.budget)
    return ex.validate(cfg)


def cmd_run(args) -> int:
    try:
        cfg = _prepare(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rep = ex.run_config(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CclabError as exc:
        print(f"{cfg['name']}: fail ({type(exc).__name__}: {exc})")
        return EXIT_FAIL
    print(f"{cfg['name']}: {rep.status} ({rep.wall_time:.2f} s) -> {', '.join(rep.artifacts)}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def _run_member(cfg):
    try:
        return ex.run_config(cfg), None
    except ConfigError as exc:
        return None, ("config", str(exc))
    except CclabError as exc:
        return None, ("fail", f"{type(exc).__name__}: {exc}")


def cmd_batch(args) -> int:
    d = Path(args.dir)
    files = sorted(p for p in d.glob("*.cfg")) if d.is_dir() else []
    if not files:
        print(f"config error: no *.cfg files in {d}", file=sys.stderr)
        return EXIT_CONFIG
    cfgs = []
    try:
        for i, f in enumerate(files):
            seed = None if args.seed is None else int(derive_rng(args.seed, i).integers(2 ** 31))
            cfgs.append(_prepare(f, args, seed))
    except ConfigError as exc:
        print(f"config error in {f.name}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    names = [c["name"] for c in cfgs]
    if len(set(names)) != len(names):
        print("config error: duplicate member names", file=sys.stderr)
        return EXIT_CONFIG
    with ThreadPoolExecutor(max_workers=min(ex.thread_count(), len(cfgs))) as pool:
        results = list(pool.map(_run_member, cfgs))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed, config_bad, rows = [], [], []
    by_kind = {}
    for cfg, (rep, err) in zip(cfgs, results):
        if rep is not None:
            rep.write(out)
            status = rep.status
            by_kind.setdefault(cfg["kind"], []).append(rep)
        else:
            status = "error" if err[0] == "config" else "fail"
            (config_bad if err[0] == "config" else failed).append(cfg["name"])
        if rep is not None and not rep.ok:
            failed.append(cfg["name"])
        rows.append([cfg["name"], cfg["kind"], cfg["seed"], status])
        print(f"{cfg['name']}: {status}" + (f" ({err[1]})" if err else ""))
    _write_csv(out / "batch_summary.csv", ["config", "kind", "seed", "status"], rows)
    for kind, reps in sorted(by_kind.items()):
        cols = ["config"] + reps[0].columns
        merged = []
        for rep in sorted(reps, key=lambda r: r.config["name"]):
            body = list(csv.reader(io.StringIO(rep.csv_text())))[1:]
            merged += [[rep.config["name"]] + r for r in body]
        _write_csv(out / f"batch_{kind}.csv", cols, merged)
    if config_bad:
        print(f"batch: config errors in {', '.join(config_bad)}")
        return EXIT_CONFIG
    if failed:
        print(f"batch: fail ({', '.join(failed)})")
        return EXIT_FAIL
    print(f"batch: pass ({len(cfgs)} members)")
    return EXIT_OK


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cclab", description="Convex cover experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("--samples", type=int, default=None, help="override the sample budget")
        sp.add_argument("--budget", type=int, default=None, help="override the search budget")

    r = sub.add_parser("run", help="run one config file")
    r.add_argument("config")
    common(r)
    r.set_defaults(func=cmd_run)
    b = sub.add_parser("batch", help="run every *.cfg in a directory")
    b.add_argument("dir")
    common(b)
    b.set_defaults(func=cmd_batch)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
