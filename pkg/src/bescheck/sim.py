"""Explicit-state semantics.

This module enumerates valuations one by one.  It serves three purposes:

* a brute-force oracle for the symbolic engine (successors, reachable sets,
  consistency and stability verdicts, CTL satisfaction sets);
* step-by-step simulation that detects recurring valuations online;
* the interleaving semantics, where stability is checked under strong
  fairness by iteratively refining a set of fairness constraints.

States are tuples over ``True``/``False``/``None`` in declaration order.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import networkx as nx

from .dsl import BES, enabled_rules, format_state

__all__ = [
    "BoundExceeded", "RunOutcome", "ExplicitGraph", "FairnessConstraint", "FairResult",
    "sync_successors", "conflicts", "sync_run", "all_states", "explicit_reach",
    "explicit_consistency", "explicit_stability", "explicit_strict", "explicit_sat",
    "interleave_successors", "find_unstable_loop", "fair_stability_check",
    "DEFAULT_BOUND",
]

DEFAULT_BOUND = 2_000_000


class BoundExceeded(RuntimeError):
    pass


# synchronous semantics ---------------------------------------------------------

def _writes(bes: BES, state) -> dict:
    """variable index -> set of values written by the enabled rules."""
    out: dict = {}
    for j in enabled_rules(state, bes):
        for var, value in bes.rules[j].assignments:
            out.setdefault(bes.index(var), set()).add(value)
    return out


def conflicts(bes: BES, state) -> dict:
    """Conflicting variables at ``state``: name -> enabled rules writing it."""
    writes = _writes(bes, state)
    out = {}
    for i, values in writes.items():
        if len(values) == 2:
            name = bes.decls[i].name
            out[name] = tuple(j for j in enabled_rules(state, bes)
                              if any(v == name for v, _ in bes.rules[j].assignments))
    return dict(sorted(out.items(), key=lambda kv: bes.index(kv[0])))


def sync_successors(bes: BES, state) -> set:
    """All enabled rules fire at once; each conflicting variable branches both ways."""
    choices = [(v,) for v in state]
    for i, values in _writes(bes, state).items():
        choices[i] = (False, True) if len(values) == 2 else (next(iter(values)),)
    return set(itertools.product(*choices))


@dataclass
class RunOutcome:
    kind: str                         # "stable", "recurrence" or "conflict"
    states: list                      # visited valuations, start first
    steps: int = 0                    # transitions taken before the fixpoint
    cycle: list = field(default_factory=list)
    variable: Optional[str] = None
    rules: tuple = ()

    @property
    def fixpoint(self):
        return self.states[-1] if self.kind == "stable" else None

    @property
    def prefix(self) -> list:
        return self.states[:len(self.states) - len(self.cycle)] if self.cycle else self.states

    def __str__(self):
        path = " -> ".join(format_state(s) for s in self.states)
        if self.kind == "conflict":
            return f"conflict on {self.variable} after {path}"
        if self.kind == "recurrence":
            return f"recurrence: {path} -> {format_state(self.cycle[0])}"
        return f"stable: {path}"


def sync_run(bes: BES, start, max_steps: Optional[int] = None) -> RunOutcome:
    """Evolve ``start`` until a fixpoint, a repeated valuation, or a conflict."""
    state = tuple(start)
    seen = {state: 0}
    states = [state]
    while max_steps is None or len(states) <= max_steps:
        bad = conflicts(bes, state)
        if bad:
            var = next(iter(bad))
            return RunOutcome("conflict", states, len(states) - 1, variable=var, rules=bad[var])
        (nxt,) = sync_successors(bes, state)
        if nxt == state:
            return RunOutcome("stable", states, len(states) - 1)
        if nxt in seen:
            return RunOutcome("recurrence", states, len(states) - 1, cycle=states[seen[nxt]:])
        seen[nxt] = len(states)
        states.append(nxt)
        state = nxt
    raise BoundExceeded(f"no verdict within {max_steps} steps")


# explicit graphs -----------------------------------------------------------------

@dataclass
class ExplicitGraph:
    initial: list
    layers: list                      # BFS layers of states
    succ: dict                        # state -> set of (label, state)

    @property
    def states(self) -> set:
        return set(self.succ)

    def successors(self, s) -> set:
        return {t for _, t in self.succ[s]}

    def predecessors(self) -> dict:
        pred: dict = {s: set() for s in self.succ}
        for s, edges in self.succ.items():
            for _, t in edges:
                pred[t].add(s)
        return pred


def all_states(bes: BES) -> Iterable[tuple]:
    """Every valuation (known variables two-valued, unknown ones three-valued)."""
    domains = [(False, True) if d.known else (False, True, None) for d in bes.decls]
    return itertools.product(*domains)


def explicit_reach(bes: BES, semantics: str = "sync", bound: int = DEFAULT_BOUND,
                   start: Optional[Iterable] = None, granularity: str = "rule") -> ExplicitGraph:
    """Breadth-first exploration from ``start`` (default: the initial valuations).

    Raises :class:`BoundExceeded` once more than ``bound`` states are found.
    """
    if semantics == "sync":
        def step(s):
            return {(None, t) for t in sync_successors(bes, s)}
    elif semantics == "interleave":
        def step(s):
            return interleave_successors(bes, s, granularity)
    else:
        raise ValueError(f"unknown semantics {semantics!r}")
    initial = list(dict.fromkeys(tuple(s) for s in (bes.initial_states() if start is None else start)))
    succ: dict = {}
    layers = []
    layer = initial
    seen = set(initial)
    while layer:
        if len(seen) > bound:
            raise BoundExceeded(f"more than {bound} reachable states")
        layers.append(layer)
        nxt = []
        for s in layer:
            edges = step(s)
            succ[s] = edges
            for _, t in sorted(edges, key=lambda e: (e[0] is not None, e[0] or 0, format_state(e[1]))):
                if t not in seen:
                    seen.add(t)
                    nxt.append(t)
        layer = nxt
    return ExplicitGraph(initial, layers, succ)


def explicit_consistency(bes: BES, graph: Optional[ExplicitGraph] = None) -> bool:
    graph = graph or explicit_reach(bes)
    return not any(conflicts(bes, s) for s in graph.succ)


def _backward(graph: ExplicitGraph, targets: set) -> set:
    pred = graph.predecessors()
    out, queue = set(targets), deque(targets)
    while queue:
        for p in pred[queue.popleft()]:
            if p not in out:
                out.add(p)
                queue.append(p)
    return out


def explicit_stability(bes: BES, graph: Optional[ExplicitGraph] = None) -> bool:
    """Every initial valuation can reach one whose only successor is itself."""
    graph = graph or explicit_reach(bes)
    fix = {s for s in graph.succ if graph.successors(s) == {s}}
    settles = _backward(graph, fix)
    return all(s in settles for s in graph.initial)


def explicit_strict(bes: BES, graph: Optional[ExplicitGraph] = None) -> dict:
    """Variables flipping between True and False along some reachable step."""
    graph = graph or explicit_reach(bes)
    flipped = set()
    for s, edges in graph.succ.items():
        for _, t in edges:
            for i, (a, b) in enumerate(zip(s, t)):
                if a is not None and b is not None and a != b:
                    flipped.add(i)
    out = {"category2": [], "category3": []}
    for i in sorted(flipped):
        d = bes.decls[i]
        out["category2" if d.known else "category3"].append(d.name)
    return out


def _atom_holds(bes: BES, name: str, s) -> bool:
    if name.startswith("conflict_"):
        return name[len("conflict_"):] in conflicts(bes, s)
    var, _, what = name.rpartition("_")
    v = s[bes.index(var)]
    return {"true": v is True, "false": v is False, "unknown": v is None}[what]


def explicit_sat(bes: BES, graph: ExplicitGraph, f) -> set:
    """Explicit CTL evaluation over the states of ``graph`` (closed under successors)."""
    from . import ctl

    universe = graph.states
    pred = graph.predecessors()

    def pre(x):
        return {p for t in x for p in pred[t]}

    def ev(g) -> set:
        if isinstance(g, ctl.Atom):
            return {s for s in universe if _atom_holds(bes, g.name, s)}
        if isinstance(g, ctl.Const):
            return set(universe) if g.value else set()
        if isinstance(g, ctl.Not):
            return universe - ev(g.arg)
        if isinstance(g, ctl.And):
            return set.intersection(*(ev(a) for a in g.args))
        if isinstance(g, ctl.Or):
            return set.union(*(ev(a) for a in g.args))
        if isinstance(g, ctl.EX):
            return pre(ev(g.arg))
        if isinstance(g, ctl.EF):
            return _backward(graph, ev(g.arg))
        if isinstance(g, ctl.EU):
            phi, z = ev(g.left), ev(g.right)
            queue = deque(z)
            while queue:
                for p in pred[queue.popleft()]:
                    if p in phi and p not in z:
                        z.add(p)
                        queue.append(p)
            return z
        if isinstance(g, ctl.EG):
            z = ev(g.arg)
            while True:
                z2 = {s for s in z if graph.successors(s) & z}
                if z2 == z:
                    return z
                z = z2
        raise TypeError(f"not a CTL formula: {g!r}")

    return ev(f)


# interleaving semantics -------------------------------------------------------------

def interleave_successors(bes: BES, state, granularity: str = "rule") -> set:
    """One enabled rule fires per step.

    ``granularity="rule"`` applies a rule's whole assignment list atomically;
    ``"assignment"`` applies a single assignment of an enabled rule.  Edges
    are labelled with the rule index, or ``None`` when no rule is enabled.
    """
    if granularity not in ("rule", "assignment"):
        raise ValueError(f"unknown granularity {granularity!r}")
    out = set()
    for j in enabled_rules(state, bes):
        groups = [bes.rules[j].assignments]
        if granularity == "assignment":
            groups = [(a,) for a in bes.rules[j].assignments]
        for group in groups:
            t = list(state)
            for var, value in group:
                t[bes.index(var)] = value
            out.add((j, tuple(t)))
    if not out:
        out.add((None, tuple(state)))
    return out


@dataclass(frozen=True)
class FairnessConstraint:
    """If rule ``rule`` is enabled infinitely often it fires infinitely often."""
    rule: int

    def enabled(self, bes: BES, state) -> bool:      # Phi
        return self.rule in enabled_rules(state, bes)

    def executed(self, label) -> bool:               # Psi, a property of a step
        return label == self.rule


def _scc_facts(bes: BES, graph: ExplicitGraph, scc: set):
    enabled, executed = set(), set()
    for s in scc:
        enabled.update(enabled_rules(s, bes))
        for label, t in graph.succ[s]:
            if t in scc and label is not None:
                executed.add(label)
    return enabled, executed


def _order_key(graph: ExplicitGraph):
    rank = {s: i for i, s in enumerate(s for layer in graph.layers for s in layer)}
    return lambda s: rank[s]


def find_unstable_loop(bes: BES, graph: ExplicitGraph, fairness: Iterable = ()) -> Optional[set]:
    """A set of at least two states forming a strongly connected region that a
    path can stay in forever while meeting every constraint in ``fairness``.

    Self-loop steps count as executions of their rule but never make a region
    on their own: a run that keeps its valuation has settled.
    """
    fair = {c.rule if isinstance(c, FairnessConstraint) else c for c in fairness}
    key = _order_key(graph)

    def search(nodes: set) -> Optional[set]:
        g = nx.DiGraph()
        g.add_nodes_from(nodes)
        g.add_edges_from((s, t) for s in nodes for _, t in graph.succ[s] if t in nodes and t != s)
        sccs = sorted((c for c in nx.strongly_connected_components(g) if len(c) > 1),
                      key=lambda c: min(map(key, c)))
        for scc in sccs:
            enabled, executed = _scc_facts(bes, graph, scc)
            starved = (enabled & fair) - executed
            if not starved:
                return scc
            # a fair path never lingers where a starved rule is enabled
            rest = {s for s in scc if not set(enabled_rules(s, bes)) & starved}
            found = search(rest)
            if found:
                return found
        return None

    return search(set(graph.succ))


def _witness_cycle(graph: ExplicitGraph, scc: set) -> list:
    """Shortest cycle through the earliest-found state of ``scc``."""
    key = _order_key(graph)
    start = min(scc, key=key)
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in sorted({t for _, t in graph.succ[s] if t in scc and t != s}, key=key):
            if t == start:
                path = [s]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            if t not in parent:
                parent[t] = s
                queue.append(t)
    raise ValueError("region has no cycle")


@dataclass
class FairResult:
    stable: bool
    witness: list                     # cycle of valuations, empty when stable
    fairness: list                    # rule indices placed under strong fairness
    history: list                     # per round: (cycle found or [], rules added)

    def __str__(self):
        if self.stable:
            return f"stable under strong fairness on rules {self.fairness}"
        cyc = " -> ".join(format_state(s) for s in self.witness + self.witness[:1])
        return f"unstable: {cyc} (fairness on rules {self.fairness})"


def fair_stability_check(bes: BES, bound: int = DEFAULT_BOUND, granularity: str = "rule",
                         use_fairness: bool = True) -> FairResult:
    """Stability under interleaving semantics with iterative fairness refinement.

    Start without constraints.  Each round looks for an unstable loop that is
    fair for the current set; rules enabled somewhere in it but never fired
    inside it join the set.  If a loop starves no rule, it is a genuine
    witness.  Each rule joins at most once, so there are at most
    ``len(bes.rules) + 1`` rounds.
    """
    graph = explicit_reach(bes, "interleave", bound=bound, granularity=granularity)
    fair: list = []
    history = []
    while True:
        scc = find_unstable_loop(bes, graph, fair)
        if scc is None:
            history.append(([], []))
            return FairResult(True, [], fair, history)
        cycle = _witness_cycle(graph, scc)
        enabled, executed = _scc_facts(bes, graph, scc)
        added = sorted(enabled - executed - set(fair))
        history.append((cycle, added))
        if not added or not use_fairness:
            return FairResult(False, cycle, fair, history)
        fair.extend(added)
