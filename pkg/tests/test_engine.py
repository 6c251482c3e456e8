import pytest

from bescheck import sim
from bescheck.cli import gen_chain
from bescheck.dsl import format_state, parse_bes, parse_state
from bescheck.encode import build_ts
from bescheck.engine import (NOT_APPLICABLE, check_consistency, check_stability, check_strict,
                             full_check, reach_frontiers, shortest_conflict_trace,
                             unstable_loops)

from conftest import CORPUS_SEEDS, load, random_bes

EX2_FREE_SRC = """
known a;
unknown b, c, d;
rule a -> b & d;
rule b & d -> !c & !a;
rule !c & d -> !b;
rule !b & d -> c;
rule c & d -> b;
rule b & c -> !d;
"""


def strings(ts, bdd):
    return sorted(format_state(s) for s in ts.states(bdd))


def test_example1_aborts_at_first_conflict():
    ts = build_ts(load("example1"))
    frontiers, hit = reach_frontiers(ts, abort_on=ts.conflict_any)
    assert hit[0] == 1
    assert strings(ts, hit[1]) == ["101"]
    assert frontiers.depth == 1


def test_example2_frontier_layers():
    ts = build_ts(load("example2"))
    frontiers, hit = reach_frontiers(ts, abort_on=ts.conflict_any)
    assert hit is None
    assert [strings(ts, layer) for layer in frontiers.layers] == [
        ["1???"], ["11?1"], ["0101"], ["0001"], ["0011"], ["0111"], ["0100"]]
    assert frontiers.depth == 6


@pytest.mark.parametrize("seed", CORPUS_SEEDS)
def test_layers_match_explicit_bfs(seed):
    bes = random_bes(seed)
    ts = build_ts(bes)
    frontiers, _ = reach_frontiers(ts)
    graph = sim.explicit_reach(bes)
    assert [set(ts.states(layer)) for layer in frontiers.layers] == [set(l) for l in graph.layers]
    assert set(ts.states(frontiers.reach)) == graph.states
    for i, a in enumerate(frontiers.layers):
        for b in frontiers.layers[i + 1:]:
            assert (a & b).is_empty()


def test_consistency_examples():
    res = check_consistency(build_ts(load("example1")))
    assert not res.consistent and res.variable == "c" and res.layer == 1
    assert check_consistency(build_ts(load("example2"))).consistent
    chain = parse_bes(gen_chain(4, 0))
    assert check_consistency(build_ts(chain)).consistent
    assert sim.explicit_consistency(chain)


def test_strict_examples():
    chain = build_ts(parse_bes(gen_chain(4, 0)))
    assert "a0" in check_strict(chain)["category2"]
    ex2 = build_ts(parse_bes(EX2_FREE_SRC))
    assert check_strict(ex2)["category2"] == ["a"]
    quiet = build_ts(parse_bes("known a; unknown b; rule a -> b;"))
    assert check_strict(quiet) == {"category2": [], "category3": []}


def test_stability_examples():
    ts = build_ts(parse_bes(EX2_FREE_SRC))
    res = check_stability(ts)
    assert res.stable
    assert strings(ts, res.fixpoints) == ["0100", "0???"]
    chain = build_ts(parse_bes(gen_chain(4, 0)))
    assert not check_stability(chain).stable
    assert check_stability(build_ts(parse_bes("unknown b; rule b -> b;"))).stable


def test_shortest_trace_example1():
    ts = build_ts(load("example1"))
    res = check_consistency(ts)
    trace = shortest_conflict_trace(ts, res.frontiers, res.hit)
    assert trace.strings() == ["1??", "101"]
    assert trace.variable == "c" and trace.rules == (0, 1)
    assert str(trace) == "1?? -> 101"


def test_conflict_in_initial_state():
    ts = build_ts(parse_bes("known a = true; unknown b; rule a -> b; rule a -> !b;"))
    res = check_consistency(ts)
    trace = shortest_conflict_trace(ts, res.frontiers, res.hit)
    assert trace.strings() == ["1?"]


def _valid_step(ts, s, t):
    return not (ts.image(ts.state_bdd(s)) & ts.state_bdd(t)).is_empty()


@pytest.mark.parametrize("seed", CORPUS_SEEDS)
def test_conflict_traces_replay(seed):
    bes = random_bes(seed)
    ts = build_ts(bes)
    res = check_consistency(ts)
    if res.consistent:
        return
    trace = shortest_conflict_trace(ts, res.frontiers, res.hit)
    assert tuple(trace.states[0]) in set(bes.initial_states())
    for s, t in zip(trace.states, trace.states[1:]):
        assert t in sim.sync_successors(bes, s)
    assert trace.variable in sim.conflicts(bes, trace.states[-1])
    assert trace.rules == sim.conflicts(bes, trace.states[-1])[trace.variable]
    # minimality: nothing conflicting in earlier layers (explicit BFS)
    graph = sim.explicit_reach(bes)
    for layer in graph.layers[:len(trace.states) - 1]:
        assert not any(sim.conflicts(bes, s) for s in layer)


def test_example2_has_no_loops():
    ts = build_ts(load("example2"))
    res = check_consistency(ts)
    stab = check_stability(ts, res.frontiers.reach)
    assert unstable_loops(ts, res.frontiers, stab) == []


def _check_loops(ts, loops):
    seen = set()
    for lp in loops:
        cyc = lp.loop
        assert len(cyc) == lp.loop_length >= 2
        for s, t in zip(lp.states, lp.states[1:] + [cyc[0]]):
            assert _valid_step(ts, s, t)
        assert lp.states[0] in set(ts.bes.initial_states())
        assert not seen & set(cyc)  # loops never share states
        seen |= set(cyc)


def test_chain_m4_single_loop():
    bes = parse_bes(gen_chain(4, 0))
    ts = build_ts(bes)
    res = check_consistency(ts)
    stab = check_stability(ts, res.frontiers.reach)
    loops = unstable_loops(ts, res.frontiers, stab)
    assert len(loops) == 1 and loops[0].loop_length == 8
    _check_loops(ts, loops)
    run = sim.sync_run(bes, parse_state("1???"))
    assert run.kind == "recurrence" and len(run.cycle) == 8
    assert set(run.cycle) == set(loops[0].loop)


def test_case_study_loop_alternates_stop_rolling():
    bes = load("case_study_loop")
    report = full_check(bes, strict=True)
    assert report.consistent and report.stable is False
    (lp,) = report.traces
    i = bes.index("stop_rolling_O")
    values = [s[i] for s in lp.loop]
    assert True in values and False in values
    # stopping leads to no fall, no break, not useless, then not stopping
    names = ["fall_O", "break_O", "useless_O"]
    first_false = [min(k for k, s in enumerate(lp.loop) if s[bes.index(v)] is False) for v in names]
    assert first_false == sorted(first_false)
    _check_loops(build_ts(bes), report.traces)
    assert report.strict_consistent is False


@pytest.mark.parametrize("seed", CORPUS_SEEDS)
def test_random_loops_are_real_cycles(seed):
    bes = random_bes(seed)
    ts = build_ts(bes)
    res = check_consistency(ts)
    if not res.consistent:
        return
    stab = check_stability(ts, res.frontiers.reach)
    loops = unstable_loops(ts, res.frontiers, stab, max_loops=None)
    assert bool(loops) == (not stab.stable)
    _check_loops(ts, loops)


def test_loop_extraction_requires_consistency():
    ts = build_ts(load("example1"))
    frontiers, _ = reach_frontiers(ts)
    stab = check_stability(ts, frontiers.reach)
    with pytest.raises(ValueError):
        unstable_loops(ts, frontiers, stab)


def test_full_check_reports():
    r1 = full_check(load("example1"))
    assert not r1.consistent and r1.stable == NOT_APPLICABLE
    assert r1.traces[0].strings() == ["1??", "101"]
    assert r1.reachable_count is None
    r2 = full_check(load("example2"))
    assert r2.consistent and r2.stable is True and r2.reachable_count == 7
    assert r2.traces == [] and set(r2.timings) >= {"build", "consistency", "stability"}
    r3 = full_check(parse_bes(gen_chain(4, 0)), strict=True)
    assert r3.consistent and r3.stable is False and r3.strict_consistent is False
