import pytest

from bescheck import sim
from bescheck.dsl import eval_guard, format_state, parse_bes, parse_state
from bescheck.encode import atom, build_ts, guard_true_set

from conftest import CORPUS_SEEDS, FIXTURES, load, random_bes


def states_of(ts, bdd):
    return {format_state(s) for s in ts.states(bdd)}


def test_example1_sets():
    ts = build_ts(load("example1"))
    assert ts.count(ts.valid) == 18
    assert states_of(ts, ts.init) == {"1??"}
    assert states_of(ts, ts.image(ts.init)) == {"101"}
    assert states_of(ts, ts.image(ts.state_bdd(parse_state("101")))) == {"100", "101"}
    # conflict on c exactly where a is true and b is false
    assert ts.conflict[2] == ts.atoms["a_true"] & ts.atoms["b_false"] & ts.valid
    assert ts.conflict[0].is_empty() and ts.conflict[1].is_empty()


def test_example1_guard_sets():
    ts = build_ts(load("example1"))
    g = guard_true_set(ts.bes.rules[0].guard, ts)
    assert g == ts.atoms["a_true"] & ts.valid
    assert ts.count(g) == 9


def test_example2_step_and_guard():
    ts = build_ts(load("example2"))
    succ = ts.image(ts.state_bdd(parse_state("0111")))
    assert states_of(ts, succ) == {"0100"}
    g = guard_true_set(ts.bes.rules[3].guard, ts)  # !b & d
    assert g == ts.atoms["b_false"] & ts.atoms["d_true"] & ts.valid


def test_atoms():
    ts = build_ts(load("example1"))
    init_unknown = ts.atoms["b_unknown"]
    for s in ("1??", "0??"):
        assert not (init_unknown & ts.state_bdd(parse_state(s))).is_empty()
    assert (atom(ts, "a_true") & atom(ts, "a_false")).is_empty()
    with pytest.raises(KeyError):
        atom(ts, "a_unknown")  # known variables have no Unknown label
    with pytest.raises(KeyError):
        atom(ts, "z_true")


def test_free_known_variables_expand_init():
    ts = build_ts(parse_bes("known a; unknown b, c; rule a -> !b & c; rule !b -> !c;"))
    assert states_of(ts, ts.init) == {"0??", "1??"}


@pytest.mark.parametrize("name", FIXTURES)
def test_label_partition(name):
    ts = build_ts(load(name))
    assert ts.init.implies(ts.valid)
    for d in ts.bes.decls:
        parts = [ts.atoms[d.name + "_true"], ts.atoms[d.name + "_false"]]
        if not d.known:
            parts.append(ts.atoms[d.name + "_unknown"])
        union = ts.manager.disj(parts) & ts.valid
        assert union == ts.valid
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                assert (parts[i] & parts[j]).is_empty()


def _check_against_oracle(bes):
    """Every valid state: symbolic successors equal explicit ones; guards agree."""
    ts = build_ts(bes)
    every = list(sim.all_states(bes))
    assert ts.count(ts.valid) == len(every)
    for s in every:
        sb = ts.state_bdd(s)
        succ = ts.image(sb)
        assert set(ts.states(succ)) == sim.sync_successors(bes, s), format_state(s)
        conflicted = bool(sim.conflicts(bes, s))
        assert (not (ts.conflict_any & sb).is_empty()) == conflicted
        if not conflicted:
            assert ts.count(succ) == 1
        for r, g in zip(bes.rules, ts.guards):
            assert (not (g & sb).is_empty()) == (eval_guard(s, r.guard, bes) is True)
        # Unknown never comes back once a value is set
        for t in ts.states(succ):
            for a, b in zip(s, t):
                assert not (a is not None and b is None)
    # transitions stay inside valid states
    assert ts.image(ts.valid).implies(ts.valid)


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_fixture_transitions_match_oracle(name):
    _check_against_oracle(load(name))


@pytest.mark.parametrize("seed", CORPUS_SEEDS[:20])
def test_random_transitions_match_oracle(seed):
    _check_against_oracle(random_bes(seed))


def test_successor_count_is_power_of_two():
    bes = load("example1")
    ts = build_ts(bes)
    for s in sim.all_states(bes):
        k = len(sim.conflicts(bes, s))
        assert ts.count(ts.image(ts.state_bdd(s))) == 2 ** k == len(sim.sync_successors(bes, s))
