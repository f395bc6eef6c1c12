"""Command-line front end: simulate ensembles, run verification campaigns,
and render ledger reports.

Exit codes for `verify`: 0 when every selected identity passes, 1 when any
fails, 2 when the only non-passing outcomes are inconclusive.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import zlib

import numpy as np

from . import verify as verify_mod
from .flow import sample_bm_batch
from .report import append_ledger, read_ledger, write_csv

MAGIC = b"PATHREP-ENSEMBLE-1\n"
SEED_ENV = "PATHREP_SEED"


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, verify_mod.DEFAULTS["seed"]))


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _build_cfg(args) -> dict:
    cfg = verify_mod.make_cfg()
    cfg["seed"] = default_seed()
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in ("group", "T", "N", "M", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["N"] < 1 or cfg["M"] < 1 or cfg["T"] <= 0:
        raise SystemExit("invalid configuration: need N >= 1, M >= 1, T > 0")
    return cfg


# -- simulate ---------------------------------------------------------------


def write_ensemble(path: str, cfg: dict) -> str:
    """Write increments for M paths with per-path checksums; returns the
    sha256 digest of the file contents."""
    spec = verify_mod.group_of(cfg)
    grid = verify_mod.grid_of(cfg)
    header = {
        "group": json.loads(spec.to_json()),
        "T": grid.horizon,
        "N": grid.steps,
        "M": int(cfg["M"]),
        "seed": int(cfg["seed"]),
        "dtype": "<f8",
        "layout": "per-path increments (N, d) then crc32 (u4, little-endian)",
    }
    sha = hashlib.sha256()
    with open(path, "wb") as fh:

        def emit(blob: bytes):
            fh.write(blob)
            sha.update(blob)

        emit(MAGIC)
        emit((json.dumps(header, sort_keys=True) + "\n").encode())
        m = int(cfg["M"])
        for start in range(0, m, 4096):
            count = min(4096, m - start)
            dW = sample_bm_batch(spec, grid, cfg["seed"], start, count)
            for row in dW:
                blob = np.ascontiguousarray(row, dtype="<f8").tobytes()
                emit(blob)
                emit(np.array(zlib.crc32(blob), dtype="<u4").tobytes())
    return sha.hexdigest()


def read_ensemble(path: str):
    """Load an ensemble file back; verifies every per-path checksum."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError("not an ensemble file")
        header = json.loads(fh.readline())
        n, d = header["N"], len(header["group"]["basis"])
        rows = np.empty((header["M"], n, d))
        for i in range(header["M"]):
            blob = fh.read(8 * n * d)
            crc = np.frombuffer(fh.read(4), dtype="<u4")[0]
            if zlib.crc32(blob) != crc:
                raise ValueError(f"checksum mismatch on path {i}")
            rows[i] = np.frombuffer(blob, dtype="<f8").reshape(n, d)
    return header, rows


def cmd_simulate(args) -> int:
    cfg = _build_cfg(args)
    out = args.out or f"ensemble-{cfg['group']}-{cfg['seed']}.bin"
    digest = write_ensemble(out, cfg)
    print(f"wrote {cfg['M']} paths to {out}")
    print(f"sha256 {digest}")
    return 0


# -- verify -----------------------------------------------------------------


def cmd_verify(args) -> int:
    cfg = _build_cfg(args)
    selected = verify_mod.select_identities(cfg["group"], args.suite, args.identity)
    if not selected:
        print("no identities match the selection", file=sys.stderr)
        return 2
    reports = []
    for name, fn in selected:
        reports.extend(fn(cfg))
    for r in reports:
        print(r.summary_line())
    n_pass = sum(r.verdict == "pass" for r in reports)
    n_fail = sum(r.verdict == "fail" for r in reports)
    n_inc = len(reports) - n_pass - n_fail
    print(f"\n{len(reports)} identities: {n_pass} pass, {n_fail} fail, {n_inc} inconclusive")
    if args.ledger:
        append_ledger(args.ledger, reports)
        print(f"ledger appended: {args.ledger}")
    if n_fail:
        return 1
    if n_inc:
        return 2
    return 0


# -- report -----------------------------------------------------------------


def cmd_report(args) -> int:
    try:
        docs = read_ledger(args.ledger)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.verdict:
        docs = [d for d in docs if d["verdict"] == args.verdict]
    if args.format == "csv":
        out = args.out or "report.csv"
        write_csv(out, docs)
        print(f"wrote {len(docs)} rows to {out}")
    else:
        for d in docs:
            print(json.dumps(d, sort_keys=True))
    if args.figures:
        from .figures import render_ledger_figures

        for p in render_ledger_figures(docs, args.figures):
            print(f"figure: {p}")
    return 0


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathrep",
        description="Brownian and energy representation verification suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--group", choices=["so3", "torus"], default=None)
        p.add_argument("--T", type=float, default=None)
        p.add_argument("--N", type=int, default=None)
        p.add_argument("--M", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON config file override")

    sim = sub.add_parser("simulate", help="write a reproducible path ensemble")
    add_common(sim)
    sim.add_argument("--out", default=None)
    sim.set_defaults(fn=cmd_simulate)

    ver = sub.add_parser("verify", help="run verification identities")
    add_common(ver)
    ver.add_argument(
        "--suite", choices=["exact", "symbolic", "statistical", "convergence", "girsanov"],
        default=None,
    )
    ver.add_argument("--identity", default=None, help="glob over identity names")
    ver.add_argument("--ledger", default=None, help="append results to this JSONL file")
    ver.set_defaults(fn=cmd_verify)

    rep = sub.add_parser("report", help="render a campaign ledger")
    rep.add_argument("--ledger", required=True)
    rep.add_argument("--format", choices=["json", "csv"], default="json")
    rep.add_argument("--out", default=None)
    rep.add_argument("--verdict", choices=["pass", "fail", "inconclusive"], default=None)
    rep.add_argument("--figures", default=None, help="directory for rendered figures")
    rep.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
