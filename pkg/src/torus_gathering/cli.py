"""Command-line front end: sim, enum, campaign, check, classify and replay."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .classify import SetLabel, analyse_gamma, canonical_key, class_tag, classify_occ, gamma, is_rigid
from .explore import ALL_GATHERED, DEPTH_BOUND, FeasibilityError, explore
from .sim import InputRejected, SchedulerPolicy, initial_state, make_dims, read_trace, replay, run, write_trace
from .torus_core import Coord, TorusDims

EXIT_OK = 0
EXIT_TIMEOUT = 2
EXIT_VIOLATION = 3
EXIT_REJECTED = 4
EXIT_USAGE = 64

ENUM_LIMIT = 2_000_000


class ScenarioError(ValueError):
    pass


def load_scenario(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioError(f"{path}: {e}") from e
    try:
        dims = raw["dims"]
        ell, big_l = int(dims["ell"]), int(dims["L"])
        robots = [tuple(int(x) for x in r) for r in raw["robots"]]
        if any(len(r) != 2 for r in robots):
            raise ValueError("robot positions must be [ring, position] pairs")
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioError(f"{path}: malformed scenario ({e})") from e
    sched = raw.get("scheduler", {})
    flags = raw.get("flags", {})
    return {
        "ell": ell,
        "L": big_l,
        "robots": robots,
        "kind": sched.get("kind", "random"),
        "seed": int(sched.get("seed", 0)),
        "fairness_bound": int(sched.get("fairness_bound", 3)),
        "strict_dims": bool(flags.get("strict_dims", True)),
        "hooks": bool(flags.get("hooks", True)),
    }


def scenario_json(ell: int, big_l: int, robots, seed: int = 0, fairness_bound: int = 3) -> str:
    return json.dumps(
        {
            "dims": {"ell": ell, "L": big_l},
            "robots": [list(r) for r in robots],
            "scheduler": {"kind": "random", "seed": seed, "fairness_bound": fairness_bound},
        },
        sort_keys=True,
    )


def _seed(args_seed: int) -> int:
    env = os.environ.get("GATHER_SEED")
    return int(env) if env not in (None, "") else args_seed


def _state(sc: dict, allow_nonrigid: bool = False):
    dims = make_dims(sc["ell"], sc["L"], sc["strict_dims"])
    return initial_state(dims, sc["robots"], allow_nonrigid)


# ---------------------------------------------------------------- sim


def cmd_sim(args) -> int:
    sc = load_scenario(args.scenario)
    st = _state(sc, args.allow_nonrigid)
    seed = _seed(args.seed if args.seed is not None else sc["seed"])
    policy = SchedulerPolicy(sc["kind"] if sc["kind"] != "scripted" else "random", seed, args.fairness or sc["fairness_bound"])
    res = run(st, policy, args.max_steps, hooks=args.hooks or sc["hooks"], record=bool(args.trace))
    if args.trace:
        write_trace(res.trace, args.trace)
    out = {"outcome": res.outcome, "steps": res.steps, "final": res.final.sparse()}
    if res.node is not None:
        out["node"] = list(res.node)
    if res.violations:
        out["violations"] = [{"invariant": v.invariant, "detail": v.detail} for v in res.violations]
    print(json.dumps(out, sort_keys=True))
    return {"gathered": EXIT_OK, "timeout": EXIT_TIMEOUT}.get(res.outcome, EXIT_VIOLATION)


# ---------------------------------------------------------------- enum


def enumerate_configs(ell: int, big_l: int, k: int, rigid_only: bool = True, canonical: bool = False):
    import itertools

    dims = TorusDims(ell, big_l)
    total = math.comb(dims.n, k)
    if total > ENUM_LIMIT:
        raise InputRejected(f"C({dims.n},{k}) = {total} subsets exceeds the enumeration guard {ENUM_LIMIT}")
    seen = set()
    out = []
    for cells in itertools.combinations(sorted(dims.nodes()), k):
        occ = frozenset(cells)
        if canonical:
            key = canonical_key(occ, dims)
            if key in seen:
                continue
            seen.add(key)
        if rigid_only and not is_rigid(occ, dims):
            continue
        out.append(list(cells))
    return total, out


def cmd_enum(args) -> int:
    total, configs = enumerate_configs(args.ell, args.L, args.k, args.rigid_only, args.canonical)
    if args.emit:
        d = Path(args.emit)
        d.mkdir(parents=True, exist_ok=True)
        width = len(str(len(configs)))
        for i, cells in enumerate(configs):
            (d / f"scenario_{i:0{width}d}.json").write_text(scenario_json(args.ell, args.L, cells) + "\n")
    print(json.dumps({"subsets": total, "count": len(configs), "rigid_only": args.rigid_only, "canonical": args.canonical}))
    return EXIT_OK


# ---------------------------------------------------------------- campaign


def _campaign_job(job):
    ell, big_l, cells, seed, fairness, max_steps = job
    st = initial_state(TorusDims(ell, big_l, True), cells)
    res = run(st, SchedulerPolicy("random", seed, fairness), max_steps, hooks=True, record=True)
    return {
        "cells": cells,
        "seed": seed,
        "outcome": res.outcome,
        "steps": res.steps,
        "labels": res.labels,
        "violations": [f"{v.invariant}: {v.detail}" for v in res.violations],
        "trace": res.trace if res.outcome != "gathered" else None,
    }


def campaign(scenarios: list, schedules: int, seed: int, fairness: int, max_steps: int, workers: int = 1) -> tuple[dict, list]:
    jobs = [(ell, big_l, cells, seed + j, fairness, max_steps) for ell, big_l, cells in scenarios for j in range(schedules)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_campaign_job, jobs, chunksize=8))
    else:
        results = [_campaign_job(j) for j in jobs]
    outcomes = Counter(r["outcome"] for r in results)
    hist: Counter = Counter()
    labels: Counter = Counter()
    for r in results:
        if r["outcome"] == "gathered":
            hist[(r["steps"] // 10) * 10] += 1
        labels.update(r["labels"])
    summary = {
        "runs": len(results),
        "gathered": outcomes["gathered"],
        "timeouts": outcomes["timeout"],
        "violations": outcomes["violation"],
        "steps_histogram": {str(k): v for k, v in sorted(hist.items())},
        "label_steps": dict(sorted(labels.items())),
    }
    return summary, results


def cmd_campaign(args) -> int:
    if args.from_dir:
        files = sorted(Path(args.from_dir).glob("*.json"))
        if not files:
            print(f"no scenarios in {args.from_dir}", file=sys.stderr)
            return EXIT_USAGE
        scenarios = []
        for f in files:
            sc = load_scenario(f)
            _state(sc)  # rejects bad inputs before any run starts
            scenarios.append((sc["ell"], sc["L"], sc["robots"]))
    else:
        if args.ell is None or args.L is None or args.k is None:
            print("campaign needs --from DIR or --ell/--L/--k", file=sys.stderr)
            return EXIT_USAGE
        make_dims(args.ell, args.L, True)
        _, configs = enumerate_configs(args.ell, args.L, args.k, True, True)
        scenarios = [(args.ell, args.L, [tuple(c) for c in cells]) for cells in configs]
    summary, results = campaign(scenarios, args.schedules, _seed(args.seed), args.fairness, args.max_steps, args.workers)
    bad = [r for r in results if r["outcome"] == "violation"]
    if bad:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for i, r in enumerate(bad):
            write_trace(r["trace"], out / f"counterexample_{i:03d}.jsonl")
        summary["counterexamples"] = str(out)
        summary["violation_kinds"] = dict(Counter(v.split(":")[0] for r in bad for v in r["violations"]))
    print(json.dumps(summary, sort_keys=True))
    if bad:
        return EXIT_VIOLATION
    if summary["timeouts"]:
        return EXIT_TIMEOUT
    return EXIT_OK


# ---------------------------------------------------------------- check


def cmd_check(args) -> int:
    sc = load_scenario(args.scenario)
    st = _state(sc)
    rep = explore(st, args.depth, args.fairness, force=args.force)
    out = {"outcome": rep.outcome, "states_visited": rep.states_visited, "max_depth": rep.max_depth, "reason": rep.reason}
    if rep.trace:
        if args.trace:
            write_trace(rep.trace, args.trace)
            out["trace"] = args.trace
        out["trace_steps"] = len(rep.trace) - 1
    if rep.cycle_start is not None:
        out["cycle_start"] = rep.cycle_start
    print(json.dumps(out, sort_keys=True))
    if rep.outcome == ALL_GATHERED:
        return EXIT_OK
    if rep.outcome == DEPTH_BOUND:
        return EXIT_TIMEOUT
    return EXIT_VIOLATION


# ---------------------------------------------------------------- classify


def describe(dims: TorusDims, cells) -> dict:
    occ = frozenset(Coord(*c) for c in cells)
    tag = class_tag(occ, dims)
    out = {
        "label": tag.label.value,
        "rigid": tag.rigid,
        "periodic": tag.periodic,
        "axes": [ax.describe(dims) for ax in tag.axes],
        "l_max": tag.unique_max,
    }
    if tag.target is not None:
        t = tag.target
        out["target"] = {
            "l_max": t.l_max,
            "l_secondary": t.l_secondary,
            "l_target": t.l_target,
            "v_target": list(t.v_target),
        }
    if tag.rigid and tag.label is SetLabel.UNDEFINED:
        cl = classify_occ(occ, dims)
        ga = analyse_gamma(gamma(occ, cl.li, cl.lk, dims))
        out["gamma"] = {
            "ignored_rings": sorted(ga.gamma.ignored_rings),
            "subcase": ga.subcase,
            "axis": ga.axis.describe(dims) if ga.axis else None,
        }
    return out


def cmd_classify(args) -> int:
    sc = load_scenario(args.scenario)
    dims = make_dims(sc["ell"], sc["L"], False)
    info = describe(dims, sc["robots"])
    print(json.dumps(info, sort_keys=True))
    print("rigid" if info["rigid"] else "symmetric or periodic: " + "; ".join(info["axes"] or ["translation invariant"]))
    return EXIT_OK


# ---------------------------------------------------------------- replay


def cmd_replay(args) -> int:
    trace = read_trace(args.trace)
    res = replay(trace)
    recorded = trace[-1].get("occupancy") if len(trace) > 1 else None
    same = recorded is None or recorded == res.final.sparse()
    print(json.dumps({"outcome": res.outcome, "steps": res.steps, "final": res.final.sparse(), "matches_trace": same}))
    if not same:
        return EXIT_VIOLATION
    return {"gathered": EXIT_OK, "timeout": EXIT_TIMEOUT}.get(res.outcome, EXIT_VIOLATION)


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torus-gather", description="Gathering robots on a torus: simulation and checking.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sim", help="run one simulation")
    s.add_argument("scenario")
    s.add_argument("--max-steps", type=int, default=10_000)
    s.add_argument("--trace", help="write the JSON-lines trace here")
    s.add_argument("--hooks", action="store_true", help="force invariant checks on")
    s.add_argument("--seed", type=int)
    s.add_argument("--fairness", type=int)
    s.add_argument("--allow-nonrigid", action="store_true")
    s.set_defaults(func=cmd_sim)

    e = sub.add_parser("enum", help="enumerate configurations")
    e.add_argument("--ell", type=int, required=True)
    e.add_argument("--L", type=int, required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--rigid-only", action="store_true")
    e.add_argument("--canonical", action="store_true", help="keep one configuration per automorphism class")
    e.add_argument("--emit", help="write one scenario file per configuration into this directory")
    e.set_defaults(func=cmd_enum)

    c = sub.add_parser("campaign", help="many seeded runs with invariant checks")
    c.add_argument("--from", dest="from_dir")
    c.add_argument("--ell", type=int)
    c.add_argument("--L", type=int)
    c.add_argument("--k", type=int)
    c.add_argument("--schedules", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--fairness", type=int, default=3)
    c.add_argument("--max-steps", type=int, default=10_000)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out", default="counterexamples")
    c.set_defaults(func=cmd_campaign)

    k = sub.add_parser("check", help="explore every schedule of a small instance")
    k.add_argument("scenario")
    k.add_argument("--depth", type=int, default=200)
    k.add_argument("--fairness", type=int, default=2)
    k.add_argument("--force", action="store_true", help="ignore the size guard")
    k.add_argument("--trace", help="write the counterexample trace here")
    k.set_defaults(func=cmd_check)

    f = sub.add_parser("classify", help="print the classification of a configuration")
    f.add_argument("scenario")
    f.set_defaults(func=cmd_classify)

    r = sub.add_parser("replay", help="replay a trace and compare the final state")
    r.add_argument("trace")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InputRejected, FeasibilityError) as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_REJECTED


if __name__ == "__main__":
    sys.exit(main())
