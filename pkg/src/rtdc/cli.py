"""Command-line surface: solve, verify, generate, datagen, bench, example.

Exit codes of ``solve``: 0 solvable (strategy emitted), 1 proven
unsolvable, 2 timeout, 3 unreadable input, 4 structurally invalid
network, 5 anything else.  ``RTDC_SEED`` provides the default seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import gen, jsonio, scenarios, search, strategy
from .heuristic import CreationOrder, HeuristicError, SubprocessHeuristic

EXIT_RTDC = 0
EXIT_NOT_RTDC = 1
EXIT_TIMEOUT = 2
EXIT_PARSE = 3
EXIT_INVALID = 4
EXIT_ERROR = 5


def _default_seed() -> int:
    return int(os.environ.get("RTDC_SEED", "0"))


def _build_provider(spec: str, strict: bool):
    if spec in (None, "", "none"):
        return None
    if spec.startswith("subprocess:"):
        command = spec[len("subprocess:"):]
        try:
            return SubprocessHeuristic(command)
        except HeuristicError as exc:
            if strict:
                raise
            print(f"warning: heuristic unavailable ({exc}); using creation order", file=sys.stderr)
            return None
    raise ValueError(f"unknown heuristic spec {spec!r} (use none|subprocess:CMD)")


def cmd_solve(args) -> int:
    try:
        dtnu = jsonio.load_dtnu(args.input)
    except jsonio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        provider = _build_provider(args.heuristic, args.strict_heuristic)
    except (HeuristicError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    config = search.SolveConfig(
        timeout=args.timeout,
        heuristic=provider,
        heuristic_max_dor_depth=args.heuristic_depth,
        symmetry_pruning=not args.no_symmetry_pruning,
    )
    try:
        verdict = search.solve(dtnu, config)
    except search.InvalidInput as exc:
        for issue in exc.issues:
            print(f"invalid network: {issue}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        if provider is not None:
            provider.close()
    s = verdict.stats
    print(
        f"verdict: {verdict.outcome} ({s.wall_time:.2f}s, {s.nodes_expanded} nodes, "
        f"{s.waits_taken} waits, {s.dtn_calls} leaf solves)",
        file=sys.stderr,
    )
    if verdict.outcome == "rtdc":
        if args.output == "json":
            doc = {"verdict": "rtdc", "strategy": strategy.to_payload(verdict.strategy)}
            text = json.dumps(doc, indent=2, sort_keys=True)
        else:
            text = render_header(verdict) + strategy.render_text(verdict.strategy)
        if args.strategy_out:
            Path(args.strategy_out).write_text(text + "\n", encoding="utf-8")
        else:
            print(text)
        return EXIT_RTDC
    return EXIT_NOT_RTDC if verdict.outcome == "not_rtdc" else EXIT_TIMEOUT


def render_header(verdict) -> str:
    return f"Strategy found\nCompute time: {verdict.stats.wall_time:.2f} s\n\n"


def cmd_verify(args) -> int:
    try:
        dtnu = jsonio.load_dtnu(args.dtnu)
        doc = json.loads(Path(args.strategy).read_text(encoding="utf-8"))
    except (jsonio.FormatError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    payload = doc.get("strategy", doc) if isinstance(doc, dict) else doc
    try:
        tree = strategy.from_payload(payload, dtnu)
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: unreadable strategy document: {exc!r}", file=sys.stderr)
        return EXIT_PARSE
    cfg = strategy.VerifyConfig(random_samples=args.samples, seed=args.seed)
    report = strategy.verify(tree, dtnu, cfg)
    for issue in report.structural_issues:
        print(f"structural: {issue}")
    for v in report.violations[:20]:
        print(f"violated {v.disjunct} on {v.path} with {v.assignment}")
    more = len(report.violations) - 20
    if more > 0:
        print(f"... and {more} more violations")
    print(
        f"{'valid' if report.valid else 'INVALID'}: {report.samples_run} samples, "
        f"{report.skipped_samples} infeasible draws, seed {report.seed}"
    )
    return 0 if report.valid else 1


def _gen_params(args) -> gen.GenParams:
    return gen.GenParams(
        controllables_range=tuple(args.controllables),
        uncontrollables_range=tuple(args.uncontrollables),
        max_conjuncts_per_disjunct=args.max_conjuncts,
        constrain_probability=args.constrain_prob,
        unary_probability=args.unary_prob,
        seed=args.seed,
    )


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = _gen_params(args)
    for k in range(args.count):
        params = gen.GenParams(
            controllables_range=base.controllables_range,
            uncontrollables_range=base.uncontrollables_range,
            max_conjuncts_per_disjunct=base.max_conjuncts_per_disjunct,
            constrain_probability=base.constrain_probability,
            unary_probability=base.unary_probability,
            seed=args.seed + k,
        )
        dtnu = gen.generate(params)
        jsonio.save_dtnu(str(out / f"gen-{args.seed + k:06d}.json"), dtnu)
    print(f"wrote {args.count} networks to {out}", file=sys.stderr)
    return 0


def cmd_datagen(args) -> int:
    from .encode import LAYOUT_VERSION

    base = _gen_params(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        header = {
            "format": "dtnu-heuristic-dataset-v1",
            "layout": LAYOUT_VERSION,
            "nu": args.nu,
            "tau": args.tau,
            "seed": args.seed,
            "count": args.count,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for k in range(args.count):
            inst_seed = args.seed + k
            params = gen.GenParams(
                controllables_range=base.controllables_range,
                uncontrollables_range=base.uncontrollables_range,
                max_conjuncts_per_disjunct=base.max_conjuncts_per_disjunct,
                constrain_probability=base.constrain_probability,
                unary_probability=base.unary_probability,
                seed=inst_seed,
            )
            dtnu = gen.generate(params)
            example = gen.label_root_decisions(dtnu, nu=args.nu, tau=args.tau, seed=inst_seed)
            record = {
                "graph": example.graph.to_payload(),
                "labels": list(example.labels),
                "meta": example.meta,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            if args.progress and (k + 1) % 10 == 0:
                print(f"labeled {k + 1}/{args.count}", file=sys.stderr)
    return 0


def _bench_config(spec: str, seed: int):
    """Parse a bench config spec: ts | noprune | mpnn:<depth>:<command>."""
    if spec == "ts":
        return {"name": "ts", "pruning": True, "heuristic": None, "depth": 0}
    if spec == "noprune":
        return {"name": "noprune", "pruning": False, "heuristic": None, "depth": 0}
    if spec.startswith("mpnn:"):
        _, depth, command = spec.split(":", 2)
        return {"name": spec, "pruning": True, "heuristic": command, "depth": int(depth)}
    raise ValueError(f"unknown config {spec!r}")


def _bench_one(task):
    path, cfg, budget, seed = task
    dtnu = jsonio.load_dtnu(path)
    provider = SubprocessHeuristic(cfg["heuristic"]) if cfg["heuristic"] else None
    config = search.SolveConfig(
        timeout=budget,
        heuristic=provider,
        heuristic_max_dor_depth=cfg["depth"],
        symmetry_pruning=cfg["pruning"],
        extract_strategy=False,
    )
    try:
        verdict = search.solve(dtnu, config)
        outcome = verdict.outcome
        stats = verdict.stats
        return (path, outcome, stats.wall_time, stats.nodes_expanded,
                stats.waits_taken, stats.dtn_calls, None)
    except Exception as exc:  # a failing instance must not abort the run
        return (path, "error", 0.0, 0, 0, 0, repr(exc))
    finally:
        if provider is not None:
            provider.close()


def cmd_bench(args) -> int:
    instances = sorted(str(p) for p in Path(args.instances).glob("*.json"))
    budgets = sorted(float(b) for b in args.budgets.split(","))
    configs = [_bench_config(s.strip(), args.seed) for s in args.configs.split(",")]
    max_budget = budgets[-1] if budgets else 0.0

    records = []
    for cfg in configs:
        tasks = [(path, cfg, max_budget, args.seed) for path in instances]
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_bench_one, tasks))
        else:
            results = [_bench_one(t) for t in tasks]
        chash = hashlib.sha256(
            json.dumps({**cfg, "seed": args.seed}, sort_keys=True).encode()
        ).hexdigest()[:12]
        for path, outcome, wall, nodes, waits, dtn_calls, err in results:
            records.append(
                {
                    "instance": Path(path).name,
                    "config": cfg["name"],
                    "config_hash": chash,
                    "verdict": outcome,
                    "wall_time": f"{wall:.4f}",
                    "nodes": nodes,
                    "waits": waits,
                    "dtn_calls": dtn_calls,
                    "error": err or "",
                }
            )

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "budget", "solved_count", "strategies_found", "proven_not_rtdc"])
        for cfg in configs if instances else ():
            mine = [r for r in records if r["config"] == cfg["name"]]
            for budget in budgets:
                decided = [
                    r for r in mine
                    if r["verdict"] in ("rtdc", "not_rtdc") and float(r["wall_time"]) <= budget
                ]
                found = sum(1 for r in decided if r["verdict"] == "rtdc")
                proven = sum(1 for r in decided if r["verdict"] == "not_rtdc")
                w.writerow([cfg["name"], budget, len(decided), found, proven])
    if args.records:
        with open(args.records, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(records[0].keys()) if records else
                               ["instance", "config", "config_hash", "verdict", "wall_time",
                                "nodes", "waits", "dtn_calls", "error"])
            w.writeheader()
            w.writerows(records)
    print(f"bench summary written to {out}", file=sys.stderr)
    return 0


def cmd_example(args) -> int:
    if args.name == "perroquet":
        dtnu = scenarios.perroquet(args.maneuvers)
    else:
        dtnu = scenarios.BUILTIN[args.name]()
    if args.out:
        jsonio.save_dtnu(args.out, dtnu)
    else:
        json.dump(jsonio.dtnu_to_payload(dtnu), sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _range_pair(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rtdc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide a network and emit a strategy")
    p.add_argument("input")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--heuristic", default="none", help="none | subprocess:CMD")
    p.add_argument("--heuristic-depth", type=int, default=15)
    p.add_argument("--strict-heuristic", action="store_true")
    p.add_argument("--no-symmetry-pruning", action="store_true")
    p.add_argument("--output", choices=("text", "json"), default="text")
    p.add_argument("--strategy-out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a strategy against its network")
    p.add_argument("dtnu")
    p.add_argument("strategy")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_verify)

    for name, fn in (("gen", cmd_gen), ("datagen", cmd_datagen)):
        p = sub.add_parser(name)
        p.add_argument("--count", type=int, default=10)
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--controllables", type=_range_pair, default=(10, 20))
        p.add_argument("--uncontrollables", type=_range_pair, default=(1, 3))
        p.add_argument("--max-conjuncts", type=int, default=5)
        p.add_argument("--constrain-prob", type=float, default=0.2)
        p.add_argument("--unary-prob", type=float, default=0.5)
        if name == "gen":
            p.add_argument("--out", required=True, help="output directory")
        else:
            p.add_argument("--out", required=True, help="output .jsonl file")
            p.add_argument("--nu", type=int, default=25)
            p.add_argument("--tau", type=float, default=3.0)
            p.add_argument("--progress", action="store_true")
        p.set_defaults(func=fn)

    p = sub.add_parser("bench", help="budget-vs-solved curves over an instance dir")
    p.add_argument("instances")
    p.add_argument("--budgets", default="1,5,20")
    p.add_argument("--configs", default="ts")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", required=True)
    p.add_argument("--records", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("example", help="emit a built-in example network")
    p.add_argument("--name", choices=sorted(scenarios.BUILTIN), default="perroquet")
    p.add_argument("--maneuvers", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_example)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
