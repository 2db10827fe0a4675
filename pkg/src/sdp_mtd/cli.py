"""Command line scenario runner.

    python -m sdp_mtd run scenario.cfg [--seed N] [--mode sdp|baseline] [--out r.csv] [--trace t.log]
    python -m sdp_mtd check [DIR] [--jobs N]

Exit status is 0 only when every embedded check passes.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .config import ConfigError, load_scenario
from .netsim.scenario import InvalidScenario
from .report import Check, csv_text, emit_csv, run


def bundled_scenarios() -> Path:
    return Path(str(resources.files("sdp_mtd") / "scenarios"))


def _load(path: str, seed: int | None, mode: str | None):
    cfg = load_scenario(path)
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if mode is not None:
        cfg = cfg.with_mode(mode)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args.scenario, args.seed, args.mode)
    report = run(cfg)
    if args.out:
        emit_csv(report, args.out)
    else:
        sys.stdout.write(csv_text(report))
    if args.trace:
        Path(args.trace).write_text(report.result.trace_text())
    for check in report.checks:
        print(check.line(), file=sys.stderr)
    return 0 if report.passed else 1


def _check_one(path: str) -> tuple[str, list[Check]]:
    cfg = load_scenario(path)
    first = run(cfg)
    second = run(cfg)
    same = (csv_text(first) == csv_text(second)
            and first.result.trace_text() == second.result.trace_text())
    checks = list(first.checks)
    checks.append(Check("deterministic_rerun", "acceptance 6", same,
                        f"trace_lines={len(first.result.trace)}"))
    return cfg.name, checks


def cmd_check(args) -> int:
    directory = Path(args.dir) if args.dir else bundled_scenarios()
    paths = sorted(str(p) for p in directory.glob("*.cfg"))
    if not paths:
        print(f"no *.cfg scenarios in {directory}", file=sys.stderr)
        return 2
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_check_one, paths))
    else:
        results = [_check_one(p) for p in paths]
    ok = True
    for name, checks in results:
        for check in checks:
            ok &= check.passed
            print(f"{name}: {check.line()}")
    print("ALL CHECKS PASSED" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdp-mtd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--mode", choices=("sdp", "baseline"))
    p_run.add_argument("--out", help="CSV report path (default: stdout)")
    p_run.add_argument("--trace", help="write the event trace here")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="run every scenario in DIR and its embedded checks")
    p_check.add_argument("dir", nargs="?", help="scenario directory (default: bundled presets)")
    p_check.add_argument("--jobs", type=int, default=1)
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidScenario, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
