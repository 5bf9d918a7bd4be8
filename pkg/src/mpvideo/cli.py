"""Command line: ``mpvideo run <config>`` and ``mpvideo compare <dirs...>``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import bundled_scenarios, resolve_config, validate
from .experiment import run_experiment
from .metrics import SCHEMA_VERSION, read_summary
from .net import ConfigError

COMPARE_COLUMNS = ("avg_owd_ms", "loss_pct", "avg_rate_bps", "avg_frame_delay_ms")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.duration is not None:
        cfg.duration_s = args.duration
        # flows that would only start after the shortened run are left out
        late = [f for f in cfg.flows if f.start_s >= cfg.duration_s]
        cfg.flows = [f for f in cfg.flows if f.start_s < cfg.duration_s]
        if late and not args.quiet:
            print(f"note: {len(late)} flow(s) start after {cfg.duration_s:g} s and are omitted")
        for flow in cfg.flows:
            if flow.stop_s is not None and flow.stop_s > cfg.duration_s:
                flow.stop_s = None
        if cfg.session is not None and cfg.session.stop_s is not None and cfg.session.stop_s > cfg.duration_s:
            cfg.session.stop_s = None
        validate(cfg)
    out = Path(args.out) if args.out else Path("runs") / cfg.name
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    result.write(out)
    elapsed = time.perf_counter() - t0
    if not args.quiet:
        for row in result.summary():
            delay = "" if row.avg_frame_delay_ms != row.avg_frame_delay_ms else f" frame_delay={row.avg_frame_delay_ms:.1f}ms"
            print(f"{row.scope:>8} {row.cc:<22} owd={row.avg_owd_ms:8.2f}ms loss={row.loss_pct:6.2f}% "
                  f"rate={row.avg_rate_bps / 1e6:6.3f}Mbps{delay}")
        print(f"wrote {out} ({elapsed:.1f}s wall, {cfg.duration_s:g}s simulated)")
    return 0


def load_run(path: Path) -> list[dict[str, str]]:
    summary = path / "summary.csv"
    if not summary.is_file():
        raise ConfigError(f"{path}: no summary.csv (not a completed run directory)")
    rows = read_summary(summary)
    for row in rows:
        if row.get("schema_version") != str(SCHEMA_VERSION):
            raise ConfigError(
                f"{path}: summary schema version {row.get('schema_version')!r} does not match {SCHEMA_VERSION}"
            )
    return rows


def compare_rows(dirs: list[Path], scope: str) -> list[tuple[str, ...]]:
    table = []
    for d in dirs:
        for row in load_run(d):
            if row["scope"] == scope:
                table.append((row["scenario"], row["cc"], row["scheduler"]) + tuple(row[c] for c in COMPARE_COLUMNS))
    return table


def cmd_compare(args: argparse.Namespace) -> int:
    if len(args.dirs) < 2:
        raise ConfigError("compare: needs at least two run directories")
    dirs = [Path(d) for d in args.dirs]
    rows = compare_rows(dirs, args.scope)
    header = ("scenario", "cc", "scheduler") + COMPARE_COLUMNS
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    for r in [header, *rows]:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip())
    return 0


def cmd_list(args: argparse.Namespace) -> int:
    for name in bundled_scenarios():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpvideo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment config (file path or bundled scenario name)")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default runs/<name>)")
    run.add_argument("--seed", type=int)
    run.add_argument("--duration", type=float, help="simulated seconds (overrides the config)")
    run.add_argument("-q", "--quiet", action="store_true")
    run.set_defaults(func=cmd_run)
    cmp = sub.add_parser("compare", help="side-by-side summaries of completed runs")
    cmp.add_argument("dirs", nargs="+")
    cmp.add_argument("--scope", default="all", help="summary scope to compare (all, session, flows, or a flow id)")
    cmp.set_defaults(func=cmd_compare)
    lst = sub.add_parser("list", help="list bundled scenarios")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
