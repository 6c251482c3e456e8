"""Direct symbolic checks: layered reachability, consistency, stability, traces.

Consistency (no two enabled rules writing opposite values) is decided while
the reachable states are generated, aborting at the first frontier that
meets a conflict state.  Stability of a consistent system needs a single
backward fixpoint from the self-loop-only states.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .bdd import Bdd
from .dsl import BES, format_state
from .encode import SymbolicTS, build_ts

__all__ = [
    "Frontiers", "Trace", "CheckReport", "ConsistencyResult", "StabilityResult",
    "reach_frontiers", "check_consistency", "check_strict", "check_stability",
    "shortest_conflict_trace", "unstable_loops", "full_check", "NOT_APPLICABLE",
]

NOT_APPLICABLE = "n/a"


@dataclass
class Frontiers:
    layers: list  # next_0 .. next_d
    reach: Bdd

    @property
    def depth(self) -> int:
        return len(self.layers) - 1


@dataclass
class Trace:
    states: list                 # valuations (tuples), in order
    kind: str                    # "conflict" or "loop"
    variable: Optional[str] = None
    rules: tuple = ()            # enabled rules writing `variable` in the last state
    stem_length: int = 0
    loop_length: int = 0

    def strings(self) -> list:
        return [format_state(s) for s in self.states]

    @property
    def stem(self) -> list:
        return self.states[:self.stem_length]

    @property
    def loop(self) -> list:
        return self.states[self.stem_length:]

    def __str__(self):
        if self.kind == "loop":
            stem = " -> ".join(self.strings()[:self.stem_length])
            loop = " -> ".join(self.strings()[self.stem_length:] + [format_state(self.loop[0])])
            return f"{stem} -> [{loop}]" if stem else f"[{loop}]"
        return " -> ".join(self.strings())


def reach_frontiers(ts: SymbolicTS, abort_on: Optional[Bdd] = None):
    """Breadth-first reachability keeping every frontier layer.

    Returns ``(frontiers, hit)`` where ``hit`` is ``(layer index, states)``
    for the first layer meeting ``abort_on``; generation stops right there.
    """
    layer = ts.init
    layers, reach = [layer], layer
    while True:
        if abort_on is not None:
            bad = layer & abort_on
            if not bad.is_empty():
                return Frontiers(layers, reach), (len(layers) - 1, bad)
        layer = ts.image(layer) - reach
        if layer.is_empty():
            return Frontiers(layers, reach), None
        layers.append(layer)
        reach = reach | layer


@dataclass
class ConsistencyResult:
    consistent: bool
    frontiers: Frontiers
    hit: Optional[tuple] = None
    variable: Optional[str] = None

    @property
    def layer(self) -> Optional[int]:
        return None if self.hit is None else self.hit[0]


def check_consistency(ts: SymbolicTS) -> ConsistencyResult:
    frontiers, hit = reach_frontiers(ts, abort_on=ts.conflict_any)
    if hit is None:
        return ConsistencyResult(True, frontiers)
    state = ts.pick_state(hit[1])
    return ConsistencyResult(False, frontiers, hit, _conflict_variable(ts, state))


def _conflict_variable(ts: SymbolicTS, state) -> str:
    s = ts.state_bdd(state)
    for d, conflict in zip(ts.bes.decls, ts.conflict):
        if not (conflict & s).is_empty():
            return d.name
    raise ValueError(f"state {format_state(state)} has no conflict")


def _flip_states(ts: SymbolicTS, i: int) -> Bdd:
    """States having a successor where variable ``i`` switched between True and False."""
    m = ts.manager
    name = ts.bes.decls[i].name
    t, f = ts.atoms[name + "_true"], ts.atoms[name + "_false"]
    to_next = dict(zip(ts.current_vars, ts.next_vars))
    flips = (t & m.rename(f, to_next)) | (f & m.rename(t, to_next))
    return m.and_exists(ts.next_vars, ts.trans, flips)


def check_strict(ts: SymbolicTS, reach: Optional[Bdd] = None) -> dict:
    """Variables that flip value on some reachable step.

    Returns ``{"category2": [...known names...], "category3": [...unknown names...]}``;
    empty lists mean the category holds.
    """
    if reach is None:
        reach = reach_frontiers(ts)[0].reach
    out = {"category2": [], "category3": []}
    for i, d in enumerate(ts.bes.decls):
        if not (_flip_states(ts, i) & reach).is_empty():
            out["category2" if d.known else "category3"].append(d.name)
    return out


@dataclass
class StabilityResult:
    stable: bool
    fixpoints: Bdd   # reachable states whose only successor is themselves
    settles: Bdd     # reachable states that can reach a fixpoint


def _self_loop_only(ts: SymbolicTS) -> Bdd:
    m = ts.manager
    ident = m.identity_relation(ts.current_vars, ts.next_vars)
    return m.forall(ts.next_vars, ~ts.trans | ident) & ts.valid


def check_stability(ts: SymbolicTS, reach: Optional[Bdd] = None) -> StabilityResult:
    """Every initial state can reach a self-loop-only state.

    Only meaningful for consistent systems, where each state has a single
    successor; callers are expected to check consistency first.
    """
    if reach is None:
        reach = reach_frontiers(ts)[0].reach
    x = _self_loop_only(ts) & reach
    y = x
    while True:
        y2 = y | (ts.preimage(y) & reach)
        if y2 == y:
            break
        y = y2
    return StabilityResult((ts.init - y).is_empty(), x, y)


def _backtrack(ts: SymbolicTS, frontiers: Frontiers, k: int, target: tuple) -> list:
    states = [target]
    for i in range(k - 1, -1, -1):
        pred = ts.preimage(ts.state_bdd(states[-1])) & frontiers.layers[i]
        states.append(ts.pick_state(pred))
    states.reverse()
    return states


def shortest_conflict_trace(ts: SymbolicTS, frontiers: Frontiers, hit) -> Trace:
    k, bad = hit
    if bad.is_empty():
        raise ValueError("empty conflict set")
    last = ts.pick_state(bad)
    states = _backtrack(ts, frontiers, k, last)
    var = _conflict_variable(ts, last)
    s = ts.state_bdd(last)
    rules = tuple(j for j, (r, g) in enumerate(zip(ts.bes.rules, ts.guards))
                  if any(v == var for v, _ in r.assignments) and not (g & s).is_empty())
    return Trace(states, "conflict", variable=var, rules=rules)


def unstable_loops(ts: SymbolicTS, frontiers: Frontiers, stability: StabilityResult,
                   max_loops: Optional[int] = 16) -> list:
    """Extract unstable cycles of a consistent system, each with a shortest stem.

    Cycles are found by following the (unique) successor from the least
    remaining state until a state repeats.  Systems like the ring benchmark
    have astronomically many cycles, hence ``max_loops``.
    """
    remaining = frontiers.reach - stability.settles
    loops = []
    while not remaining.is_empty() and (max_loops is None or len(loops) < max_loops):
        s = ts.pick_state(remaining)
        seen = {}
        path = []
        while s not in seen:
            seen[s] = len(path)
            path.append(s)
            succ = ts.image(ts.state_bdd(s))
            if not (succ - ts.state_bdd(ts.pick_state(succ))).is_empty():
                raise ValueError("unstable loop extraction needs a consistent system")
            s = ts.pick_state(succ)
        cycle = path[seen[s]:]
        cycle_set = ts.manager.disj(ts.state_bdd(c) for c in cycle)

        k = next(i for i, layer in enumerate(frontiers.layers)
                 if not (layer & cycle_set).is_empty())
        entry = ts.pick_state(frontiers.layers[k] & cycle_set)
        stem = _backtrack(ts, frontiers, k, entry)[:-1]
        j = cycle.index(entry)
        ordered = cycle[j:] + cycle[:j]
        loops.append(Trace(stem + ordered, "loop", stem_length=len(stem),
                           loop_length=len(ordered)))

        # drop the cycle and its whole basin
        basin = cycle_set
        while True:
            grown = basin | (ts.preimage(basin) & remaining)
            if grown == basin:
                break
            basin = grown
        remaining = remaining - basin
    return loops


@dataclass
class CheckReport:
    consistent: bool
    stable: object                      # True / False / NOT_APPLICABLE
    reachable_count: Optional[int]
    frontier_depth: int
    traces: list = field(default_factory=list)
    strict_violations: Optional[dict] = None
    timings: dict = field(default_factory=dict)  # phase -> seconds
    fairness: Optional[list] = None     # interleaving only: rules under strong fairness

    @property
    def strict_consistent(self) -> Optional[bool]:
        if self.strict_violations is None:
            return None
        return self.consistent and not any(self.strict_violations.values())


def full_check(bes: BES, strict: bool = False, traces: bool = True,
               max_loops: Optional[int] = 16) -> CheckReport:
    """Encode, check consistency (aborting early) and, if consistent, stability."""
    timings = {}
    t0 = time.perf_counter()
    ts = build_ts(bes)
    timings["build"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cons = check_consistency(ts)
    timings["consistency"] = time.perf_counter() - t0
    frontiers = cons.frontiers
    report = CheckReport(consistent=cons.consistent, stable=NOT_APPLICABLE,
                         reachable_count=None, frontier_depth=frontiers.depth, timings=timings)

    if not cons.consistent:
        if strict:
            t0 = time.perf_counter()
            report.strict_violations = check_strict(ts)
            timings["strict"] = time.perf_counter() - t0
        if traces:
            t0 = time.perf_counter()
            report.traces.append(shortest_conflict_trace(ts, frontiers, cons.hit))
            timings["traces"] = time.perf_counter() - t0
        return report

    report.reachable_count = ts.count(frontiers.reach)
    t0 = time.perf_counter()
    stab = check_stability(ts, frontiers.reach)
    timings["stability"] = time.perf_counter() - t0
    report.stable = stab.stable

    if strict:
        t0 = time.perf_counter()
        report.strict_violations = check_strict(ts, frontiers.reach)
        timings["strict"] = time.perf_counter() - t0

    if traces and not stab.stable:
        t0 = time.perf_counter()
        report.traces.extend(unstable_loops(ts, frontiers, stab, max_loops=max_loops))
        timings["traces"] = time.perf_counter() - t0
    return report
