#!/usr/bin/env python3
"""Guided vs. baseline search benchmark, driven through the solver CLI.

Generates a benchmark directory with ``rtdc gen``, then runs ``rtdc
bench`` once with the plain tree search and once guided by a checkpoint
served over the subprocess protocol, and compares how many instances
each configuration decides within the per-instance budget.  Full-scale
defaults (300 instances of 20-25 controllables, 60 s budget, heuristic
depth 60) are expensive on one core; the acceptance test drives this at
a reduced scale.
"""

from __future__ import annotations

import argparse
import csv
import json
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path


def run_benchmark(
    checkpoint: str,
    count: int = 300,
    budget: float = 60.0,
    controllables: str = "20:25",
    uncontrollables: str = "1:3",
    heuristic_depth: int = 60,
    seed: int = 424242,
    workdir: str | None = None,
    log=print,
) -> dict:
    work = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="gain-bench-"))
    instances = work / "instances"
    if not instances.is_dir() or not any(instances.glob("*.json")):
        log(f"generating {count} instances into {instances}")
        subprocess.run(
            [
                "rtdc", "gen", "--count", str(count), "--seed", str(seed),
                "--controllables", controllables, "--uncontrollables", uncontrollables,
                "--out", str(instances),
            ],
            check=True,
        )
    serve_cmd = f"{shlex.quote(sys.executable)} -m mpnn_heuristic.serve {shlex.quote(checkpoint)}"
    summary = work / "bench.csv"
    records = work / "records.csv"
    configs = f"ts,mpnn:{heuristic_depth}:{serve_cmd}"
    log(f"running rtdc bench over {configs!r} at budget {budget}s")
    subprocess.run(
        [
            "rtdc", "bench", str(instances), "--budgets", str(budget),
            "--configs", configs, "--seed", str(seed),
            "--output", str(summary), "--records", str(records),
        ],
        check=True,
    )
    solved = {}
    for row in csv.DictReader(summary.open()):
        solved[row["config"]] = int(row["solved_count"])
    baseline = solved.get("ts", 0)
    guided = solved.get(f"mpnn:{heuristic_depth}:{serve_cmd}", 0)
    return {
        "count": count,
        "budget_s": budget,
        "controllables": controllables,
        "heuristic_depth": heuristic_depth,
        "baseline_solved": baseline,
        "guided_solved": guided,
        "gain": (guided / baseline) if baseline else None,
        "workdir": str(work),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("checkpoint")
    parser.add_argument("--count", type=int, default=300)
    parser.add_argument("--budget", type=float, default=60.0)
    parser.add_argument("--controllables", default="20:25")
    parser.add_argument("--heuristic-depth", type=int, default=60)
    parser.add_argument("--seed", type=int, default=424242)
    parser.add_argument("--workdir", default=None)
    args = parser.parse_args(argv)
    report = run_benchmark(
        args.checkpoint,
        count=args.count,
        budget=args.budget,
        controllables=args.controllables,
        heuristic_depth=args.heuristic_depth,
        seed=args.seed,
        workdir=args.workdir,
    )
    print(json.dumps(report, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
