"""Command-line experiment runner.

    fairsched run --scenario exp3 --policy demand-drf --seed 7 --out results/
    fairsched sweep --scenario exp2 --policies all --out results/
    fairsched validate --scenario my-scenario.json
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

from .core import ResourceError
from .dispatch import DispatchError, PolicyKind
from .engine import RunRecord, run
from .mesos import SimulationError
from .metrics import MetricsError, unfairness, wait_stats
from .scenario import ConfigError, from_json, load, to_json

log = logging.getLogger("fairsched")

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION = 0, 1, 2

TASKS_HEADER = ["task_id", "framework", "submit_s", "release_s", "launch_s", "finish_s", "wait_s"]
FAIRNESS_HEADER = ["time_s", "framework", "running_count"]
SWEEP_POLICIES = (PolicyKind.DRF_AWARE, PolicyKind.DEMAND_AWARE, PolicyKind.DEMAND_DRF_AWARE)


def fmt_seconds(t: Optional[Fraction]) -> str:
    """Fixed-point seconds with three decimals; empty for a missing time."""
    if t is None:
        return ""
    t = Fraction(t)
    # round half away from zero on the exact value, never via float
    ms = (abs(t) * 1000 * 2 + 1) // 2
    sign = "-" if t < 0 and ms else ""
    return f"{sign}{ms // 1000}.{ms % 1000:03d}"


def _pct(x: Fraction) -> float:
    return round(float(x), 6)


def summarize(record: RunRecord, windows: Sequence[tuple[Fraction, Fraction]] = ()) -> dict[str, Any]:
    names = record.framework_names()
    launched = [t for t in record.tasks if t.launch_time is not None]
    stats = wait_stats(launched)
    frameworks = {}
    for fid, name in enumerate(names):
        fw = stats.frameworks.get(fid)
        frameworks[name] = {
            "tasks": fw.count if fw else 0,
            "total_wait_s": fmt_seconds(fw.total_wait) if fw else "0.000",
            "mean_wait_s": fmt_seconds(fw.mean_wait) if fw else "0.000",
            "deviation_pct": _pct(fw.deviation_pct) if fw else 0.0,
            "bucket_means": [fmt_seconds(b) for b in fw.bucket_means] if fw else [],
        }
    unfair = []
    for t_i, t_j in windows:
        unfair.append({
            "t_i": fmt_seconds(t_i),
            "t_j": fmt_seconds(t_j),
            "percent": {name: _pct(unfairness(record.fairness, fid, t_i, t_j)) for fid, name in enumerate(names)},
        })
    return {
        "scenario": to_json(record.scenario),
        "policy": record.policy.value,
        "seed": record.seed,
        "engine_version": record.engine_version,
        "frameworks": frameworks,
        "cluster": {
            "tasks": stats.cluster_count,
            "total_wait_s": fmt_seconds(stats.cluster_total),
            "mean_wait_s": fmt_seconds(stats.cluster_mean),
        },
        "unfairness": unfair,
        "end_time_s": fmt_seconds(record.end_time),
        "events": record.event_count,
        "unlaunched": len(record.unlaunched),
        "capped": record.capped,
    }


def emit(record: RunRecord, out_dir, windows: Sequence[tuple[Fraction, Fraction]] = ()) -> dict[str, Path]:
    """Write tasks.csv, fairness.csv and summary.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = record.framework_names()

    paths = {"tasks": out / "tasks.csv", "fairness": out / "fairness.csv", "summary": out / "summary.json"}
    with open(paths["tasks"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TASKS_HEADER)
        for t in sorted(record.tasks, key=lambda t: t.id):
            wait = t.launch_time - t.submit_time if t.launch_time is not None and t.submit_time is not None else None
            w.writerow([t.id, names[t.framework_id], fmt_seconds(t.submit_time), fmt_seconds(t.release_time),
                        fmt_seconds(t.launch_time), fmt_seconds(t.finish_time), fmt_seconds(wait)])
    with open(paths["fairness"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FAIRNESS_HEADER)
        for t, fid, count in record.fairness.rows():
            w.writerow([fmt_seconds(t), names[fid], count])
    with open(paths["summary"], "w") as fh:
        json.dump(summarize(record, windows), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def rerun_from_summary(path) -> RunRecord:
    """Re-simulate the run described by an emitted summary.json."""
    with open(path) as fh:
        data = json.load(fh)
    return run(from_json(data["scenario"]), PolicyKind.parse(data["policy"]), data["seed"])


def _seed(arg: Optional[int]) -> Optional[int]:
    if arg is not None:
        return arg
    env = os.environ.get("FAIRSCHED_SEED")
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"FAIRSCHED_SEED: expected an integer, got {env!r}") from None


def _window(text: str) -> tuple[Fraction, Fraction]:
    try:
        a, b = text.split(":")
        t_i, t_j = Fraction(a), Fraction(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:END in seconds, got {text!r}") from None
    if not t_i < t_j:
        raise argparse.ArgumentTypeError(f"window start must precede end: {text!r}")
    return t_i, t_j


def _policies(text: str) -> list[PolicyKind]:
    if text == "all":
        return list(SWEEP_POLICIES)
    try:
        return [PolicyKind.parse(p) for p in text.split(",") if p]
    except DispatchError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _policy(text: str) -> PolicyKind:
    try:
        return PolicyKind.parse(text)
    except DispatchError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairsched", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario under one policy")
    r.add_argument("--scenario", required=True, help="builtin name or path to a JSON config")
    r.add_argument("--policy", type=_policy, help="defaults to the scenario's own policy")
    r.add_argument("--seed", type=int, help="defaults to $FAIRSCHED_SEED, then the scenario seed")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--window", type=_window, action="append", default=[],
                   help="START:END seconds for an unfairness value; repeatable")

    s = sub.add_parser("sweep", help="run several policies and tabulate waiting-time deviations")
    s.add_argument("--scenario", required=True)
    s.add_argument("--policies", type=_policies, default=list(SWEEP_POLICIES),
                   help="'all' or a comma-separated list")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default="results", help="parent directory for per-policy runs")
    s.add_argument("--window", type=_window, action="append", default=[])

    v = sub.add_parser("validate", help="check a scenario config without running it")
    v.add_argument("--scenario", required=True)
    return p


def _cmd_run(args) -> int:
    cfg = load(args.scenario)
    record = run(cfg, args.policy, _seed(args.seed))
    emit(record, args.out, [*cfg.unfairness_windows, *args.window])
    log.info("%s/%s: %d events, end %s s", cfg.name, record.policy.value, record.event_count,
             fmt_seconds(record.end_time))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load(args.scenario)
    seed = _seed(args.seed)
    out = Path(args.out)
    rows = []
    for policy in args.policies:
        record = run(cfg, policy, seed)
        emit(record, out / f"{cfg.name}-{policy.value}", [*cfg.unfairness_windows, *args.window])
        stats = wait_stats([t for t in record.tasks if t.launch_time is not None])
        for fid, name in enumerate(record.framework_names()):
            fw = stats.frameworks.get(fid)
            rows.append([policy.value, name,
                         fmt_seconds(fw.mean_wait) if fw else "0.000",
                         f"{float(fw.deviation_pct):.2f}" if fw else "0.00"])
        log.info("%s/%s done", cfg.name, policy.value)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "framework", "mean_wait_s", "deviation_pct"])
        w.writerows(rows)
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load(args.scenario)
    print(f"{cfg.name}: ok ({len(cfg.frameworks)} frameworks, "
          f"{sum(p.count for p in cfg.profiles)} tasks, {cfg.nodes} nodes)")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; bad flags are config errors here
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except (ConfigError, DispatchError, ResourceError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, MetricsError) as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
