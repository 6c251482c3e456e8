"""Command-line front end.

Exit codes: 0 consistent and stable, 1 inconsistent, 2 unstable,
3 usage, parse or resource error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional

from . import ctl, sim
from .dsl import BES, BesError, format_state, parse_bes
from .encode import build_ts
from .engine import (NOT_APPLICABLE, CheckReport, Trace, check_consistency, check_stability,
                     full_check, reach_frontiers, shortest_conflict_trace,
                     unstable_loops)

__all__ = ["main", "gen_chain", "run_check", "run_bench", "report_json"]

EXIT_OK, EXIT_INCONSISTENT, EXIT_UNSTABLE, EXIT_ERROR = 0, 1, 2, 3


def gen_chain(m: int, k: int) -> str:
    """Ring benchmark: a0 known, a1..a{m-1} unknown, plus ``k`` rings of free known copies."""
    if m < 2:
        raise ValueError("chain length m must be at least 2")
    if k < 0:
        raise ValueError("number of copies k must be nonnegative")

    def ring(names):
        out = [f"rule {names[i]} -> {names[i + 1]};" for i in range(m - 1)]
        out.append(f"rule {names[-1]} -> !{names[0]};")
        out += [f"rule !{names[i]} -> !{names[i + 1]};" for i in range(m - 1)]
        out.append(f"rule !{names[-1]} -> {names[0]};")
        return out

    base = [f"a{i}" for i in range(m)]
    lines = [f"# ring benchmark, m={m}, k={k}", "known a0;",
             "unknown " + ", ".join(base[1:]) + ";"]
    rules = ring(base)
    for j in range(1, k + 1):
        names = [f"a{j}_{i}" for i in range(m)]
        lines.append("known " + ", ".join(names) + ";")
        rules += ring(names)
    return "\n".join(lines + rules) + "\n"


# check ---------------------------------------------------------------------------

def _oracle_conflict_trace(bes: BES, graph: sim.ExplicitGraph) -> Optional[Trace]:
    for k, layer in enumerate(graph.layers):
        bad = sorted((s for s in layer if sim.conflicts(bes, s)), key=format_state)
        if not bad:
            continue
        states = [bad[0]]
        for i in range(k - 1, -1, -1):
            prev = sorted((p for p in graph.layers[i] if states[-1] in graph.successors(p)),
                          key=format_state)
            states.append(prev[0])
        states.reverse()
        var, rules = next(iter(sim.conflicts(bes, states[-1]).items()))
        return Trace(states, "conflict", variable=var, rules=rules)
    return None


def _timed(timings: dict, phase: str, fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    timings[phase] = timings.get(phase, 0.0) + time.perf_counter() - t0
    return out


def _check_ctl(bes: BES, strict: bool, traces: bool, max_loops: int) -> CheckReport:
    timings: dict = {}
    ts = _timed(timings, "build", build_ts, bes)
    frontiers, _ = _timed(timings, "reach", reach_frontiers, ts)
    consistent = _timed(timings, "consistency", ctl.check, ts, ctl.consistency_formula(ts),
                        frontiers.reach)
    report = CheckReport(consistent, NOT_APPLICABLE, ts.count(frontiers.reach),
                         frontiers.depth, timings=timings)
    if strict:
        report.strict_violations = {}
        for cat in (2, 3):
            names = [d.name for d in bes.decls if d.known == (cat == 2)]
            bad = [v for v in names
                   if not ctl.check(ts, ctl.flip_free_formula(v), frontiers.reach)]
            report.strict_violations[f"category{cat}"] = bad
    if consistent:
        report.stable = _timed(timings, "stability", ctl.check, ts,
                               ctl.stability_formula(ts), frontiers.reach)
    if traces:
        # counterexamples come from the frontier construction either way
        if not consistent:
            cons = check_consistency(ts)
            report.traces.append(shortest_conflict_trace(ts, cons.frontiers, cons.hit))
        elif not report.stable:
            stab = check_stability(ts, frontiers.reach)
            report.traces.extend(unstable_loops(ts, frontiers, stab, max_loops=max_loops))
    return report


def _check_oracle(bes: BES, strict: bool, traces: bool, bound: int) -> CheckReport:
    timings: dict = {}
    graph = _timed(timings, "reach", sim.explicit_reach, bes, bound=bound)
    consistent = _timed(timings, "consistency", sim.explicit_consistency, bes, graph)
    report = CheckReport(consistent, NOT_APPLICABLE, len(graph.succ), len(graph.layers) - 1,
                         timings=timings)
    if strict:
        report.strict_violations = sim.explicit_strict(bes, graph)
    if consistent:
        report.stable = _timed(timings, "stability", sim.explicit_stability, bes, graph)
    if traces:
        if not consistent:
            report.traces.append(_oracle_conflict_trace(bes, graph))
        elif not report.stable:
            for s in graph.initial:
                run = sim.sync_run(bes, s)
                if run.kind == "recurrence":
                    stem = run.prefix
                    report.traces.append(Trace(stem + run.cycle, "loop", stem_length=len(stem),
                                               loop_length=len(run.cycle)))
                    break
    return report


def _check_interleave(bes: BES, bound: int, fairness: bool, granularity: str) -> CheckReport:
    timings: dict = {}
    res = _timed(timings, "stability", sim.fair_stability_check, bes, bound=bound,
                 granularity=granularity, use_fairness=fairness)
    graph = sim.explicit_reach(bes, "interleave", bound=bound, granularity=granularity)
    report = CheckReport(True, res.stable, len(graph.succ), len(graph.layers) - 1,
                         timings=timings)
    report.fairness = res.fairness
    if not res.stable:
        report.traces.append(Trace(list(res.witness), "loop", stem_length=0,
                                   loop_length=len(res.witness)))
    return report


def run_check(bes: BES, mode: str = "relaxed", semantics: str = "sync", engine: str = "direct",
              traces: bool = True, bound: int = sim.DEFAULT_BOUND, max_loops: int = 16,
              fairness: bool = True, granularity: str = "rule") -> CheckReport:
    if semantics == "interleave":
        if mode == "strict":
            raise ValueError("strict mode needs synchronous semantics")
        return _check_interleave(bes, bound, fairness, granularity)
    strict = mode == "strict"
    if engine == "direct":
        return full_check(bes, strict=strict, traces=traces, max_loops=max_loops)
    if engine == "ctl":
        return _check_ctl(bes, strict, traces, max_loops)
    if engine == "oracle":
        return _check_oracle(bes, strict, traces, bound)
    raise ValueError(f"unknown engine {engine!r}")


def exit_code(report: CheckReport, strict: bool = False) -> int:
    if not report.consistent or (strict and report.strict_consistent is False):
        return EXIT_INCONSISTENT
    if report.stable is True:
        return EXIT_OK
    return EXIT_UNSTABLE


def _trace_dict(t: Trace) -> dict:
    out = {"kind": t.kind, "states": t.strings()}
    if t.kind == "conflict":
        out.update(variable=t.variable, rules=list(t.rules))
    else:
        out.update(stem_length=t.stem_length, loop_length=t.loop_length)
    return out


def report_json(report: CheckReport) -> dict:
    out = {
        "consistent": report.consistent,
        "stable": None if report.stable == NOT_APPLICABLE else report.stable,
        "reachable_count": None if report.reachable_count is None else str(report.reachable_count),
        "frontier_depth": report.frontier_depth,
        "traces": [_trace_dict(t) for t in report.traces],
        "timings_ms": {k: round(v * 1000, 3) for k, v in report.timings.items()},
    }
    if report.strict_violations is not None:
        out["strict_consistent"] = report.strict_consistent
        out["strict_violations"] = report.strict_violations
    if report.fairness is not None:
        out["fairness_rules"] = report.fairness
    return out


def _fmt_count(n: Optional[int]) -> str:
    if n is None:
        return "n/a (aborted at first conflict)"
    return str(n) if n < 10 ** 7 else f"{n} ({float(n):.6g})"


def _print_human(report: CheckReport, out):
    stable = report.stable if report.stable == NOT_APPLICABLE else str(report.stable).lower()
    print(f"consistent: {str(report.consistent).lower()}", file=out)
    if report.strict_violations is not None:
        print(f"strict consistent: {str(report.strict_consistent).lower()}", file=out)
        for cat, names in report.strict_violations.items():
            if names:
                print(f"  {cat} violated by: {', '.join(names)}", file=out)
    print(f"stable: {stable}", file=out)
    if report.fairness is not None:
        print(f"fairness rules: {report.fairness}", file=out)
    print(f"reachable states: {_fmt_count(report.reachable_count)}", file=out)
    print(f"frontier depth: {report.frontier_depth}", file=out)
    for t in report.traces:
        if t.kind == "conflict":
            print(f"conflict on {t.variable} (rules {', '.join(map(str, t.rules))}): {t}", file=out)
        else:
            print(f"unstable loop (stem {t.stem_length}, length {t.loop_length}): {t}", file=out)
    times = ", ".join(f"{k} {v * 1000:.1f} ms" for k, v in report.timings.items())
    print(f"timings: {times}", file=out)


def _load(path: str) -> BES:
    with open(path, encoding="utf-8") as fh:
        return parse_bes(fh.read())


def cmd_check(args, out) -> int:
    if args.semantics == "interleave" and args.engine not in (None, "oracle"):
        raise ValueError("interleaving semantics is only checked by the oracle engine")
    bes = _load(args.file)
    report = run_check(bes, args.mode, args.semantics, args.engine or "direct",
                       traces=args.trace, bound=args.bound,
                       max_loops=args.max_loops, fairness=not args.no_fairness,
                       granularity=args.granularity)
    if args.format == "json":
        json.dump(report_json(report), out, indent=2)
        out.write("\n")
    else:
        _print_human(report, out)
    return exit_code(report, args.mode == "strict")


def cmd_ctl(args, out) -> int:
    bes = _load(args.file)
    ts = build_ts(bes)
    f = ctl.parse_ctl(args.formula, ts)
    holds = ctl.check(ts, f)
    print(f"{f}: {'holds' if holds else 'fails'}", file=out)
    return EXIT_OK if holds else 1


def run_bench(k_values, m: int = 32, with_ctl: bool = True) -> list:
    """Timings per chain model: reachable count, direct and CTL-formula checks (seconds)."""
    rows = []
    for k in k_values:
        bes = parse_bes(gen_chain(m, k))
        ts = build_ts(bes)
        row = {"k": k, "variables": len(bes.decls), "bits": ts.num_bits}
        t0 = time.perf_counter()
        cons = check_consistency(ts)
        row["direct_consistency"] = time.perf_counter() - t0
        reach = cons.frontiers.reach
        row["reachable"] = ts.count(reach)
        t0 = time.perf_counter()
        stab = check_stability(ts, reach)
        row["direct_stability"] = time.perf_counter() - t0
        row["consistent"], row["stable"] = cons.consistent, stab.stable
        if with_ctl:
            t0 = time.perf_counter()
            ctl.check(ts, ctl.consistency_formula(ts), reach)
            row["ctl_consistency"] = time.perf_counter() - t0
            t0 = time.perf_counter()
            ctl.check(ts, ctl.stability_formula(ts), reach)
            row["ctl_stability"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def cmd_bench(args, out) -> int:
    ks = range(args.k_min, args.k_max + 1)
    if args.format == "json":
        rows = run_bench(ks, args.m, not args.no_ctl)
        for r in rows:
            r["reachable"] = str(r["reachable"])
            for key in list(r):
                if key.startswith(("direct_", "ctl_")):
                    r[key + "_ms"] = round(r.pop(key) * 1000, 3)
        json.dump(rows, out, indent=2)
        out.write("\n")
        return EXIT_OK
    cols = "k  vars (bits)   reachable     direct cons  direct stab"
    if not args.no_ctl:
        cols += "    ctl cons     ctl stab"
    print(cols + "   (ms)", file=out)
    for k in ks:
        (r,) = run_bench([k], args.m, not args.no_ctl)
        line = (f"{r['k']:<3}{r['variables']:>4} ({r['bits']:>3})  {float(r['reachable']):>12.6g}"
                f"  {r['direct_consistency'] * 1000:>11.1f}  {r['direct_stability'] * 1000:>11.1f}")
        if not args.no_ctl:
            line += f"  {r['ctl_consistency'] * 1000:>11.1f}  {r['ctl_stability'] * 1000:>11.1f}"
        print(line, file=out, flush=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bescheck",
                                description="Consistency and stability checks for Boolean evolution systems.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="check consistency and stability of a rule file")
    c.add_argument("file")
    c.add_argument("--mode", choices=["relaxed", "strict"], default="relaxed")
    c.add_argument("--semantics", choices=["sync", "interleave"], default="sync")
    c.add_argument("--engine", choices=["direct", "ctl", "oracle"], default=None)
    c.add_argument("--trace", action="store_true", help="print counterexample traces")
    c.add_argument("--format", choices=["human", "json"], default="human")
    c.add_argument("--bound", type=int, default=sim.DEFAULT_BOUND,
                   help="state limit for explicit exploration")
    c.add_argument("--max-loops", type=int, default=16, help="unstable loops to extract")
    c.add_argument("--no-fairness", action="store_true",
                   help="interleaving: report the first unstable loop, fair or not")
    c.add_argument("--granularity", choices=["rule", "assignment"], default="rule",
                   help="interleaving: fire a whole rule or a single assignment per step")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("ctl", help="check a CTL formula in all initial states")
    f.add_argument("file")
    f.add_argument("formula")
    f.set_defaults(func=cmd_ctl)

    g = sub.add_parser("gen-chain", help="print a ring benchmark model")
    g.add_argument("--m", type=int, default=32)
    g.add_argument("--k", type=int, default=1)
    g.set_defaults(func=lambda a, out: (out.write(gen_chain(a.m, a.k)), EXIT_OK)[1])

    b = sub.add_parser("bench", help="direct vs CTL timings on ring benchmarks")
    b.add_argument("--k-max", type=int, required=True)
    b.add_argument("--k-min", type=int, default=1)
    b.add_argument("--m", type=int, default=32)
    b.add_argument("--no-ctl", action="store_true", help="skip the CTL-formula baseline")
    b.add_argument("--format", choices=["human", "json"], default="human")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args, out)
    except (OSError, BesError, ctl.CtlSyntaxError, ValueError, sim.BoundExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
