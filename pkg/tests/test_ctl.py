import pytest

from bescheck import ctl, sim
from bescheck.cli import gen_chain
from bescheck.ctl import (EF, EG, EU, EX, And, Atom, Const, CtlSyntaxError, Not, Or, check,
                          parse_ctl, sat)
from bescheck.dsl import parse_bes
from bescheck.encode import build_ts
from bescheck.engine import check_consistency, check_stability, reach_frontiers

from conftest import CORPUS_SEEDS, FIXTURES, load, random_bes


def test_parse_shapes():
    f = parse_ctl("AG(!(EX c_true & EX c_false))")
    assert f == Not(EF(And((EX(Atom("c_true")), EX(Atom("c_false"))))))
    assert parse_ctl("EF(b_false)") == EF(Atom("b_false"))
    au = parse_ctl("A[a_true U b_true]")
    assert au == And((Not(EU(Not(Atom("b_true")), And((Not(Atom("a_true")), Not(Atom("b_true")))))),
                      Not(EG(Not(Atom("b_true"))))))
    assert parse_ctl("a_true -> EX true | false") == Or((Not(Atom("a_true")),
                                                         Or((EX(Const(True)), Const(False)))))
    assert parse_ctl("E[a_true U b_true]") == EU(Atom("a_true"), Atom("b_true"))


@pytest.mark.parametrize("text", ["", "EF", "a_true &", "(a_true", "E[a_true b_true]",
                                  "a_true $ b_true", "AG a_true)"])
def test_parse_errors(text):
    with pytest.raises(CtlSyntaxError):
        parse_ctl(text)


def test_unknown_atom():
    ts = build_ts(load("example1"))
    with pytest.raises(CtlSyntaxError, match="z_true"):
        parse_ctl("EF z_true", ts)
    with pytest.raises(CtlSyntaxError):
        parse_ctl("EF a_unknown", ts)


def test_print_reparse():
    for text in ["AG(!(EX c_true & EX c_false))", "E[a_true U b_true]", "EG !(a_true | b_false)"]:
        f = parse_ctl(text)
        assert parse_ctl(str(f)) == f


def test_example_checks():
    ts1 = build_ts(load("example1"))
    assert ts1.init.implies(sat(ts1, EF(Atom("conflict_c"))))
    assert not check(ts1, ctl.consistency_formula(ts1))
    assert not check(ts1, ctl.conflict_formula(ts1))
    ts2 = build_ts(load("example2"))
    assert check(ts2, ctl.stability_formula(ts2))
    assert check(ts2, ctl.consistency_formula(ts2))
    assert check(ts2, parse_ctl("EF b_true"))
    assert sat(ts2, parse_ctl("AG true")) == ts2.valid


def test_builder_sizes():
    ts1 = build_ts(load("example1"))
    f = ctl.consistency_formula(ts1)
    assert len(f.arg.arg.arg.args) == 3  # !EF !(c1 & c2 & c3)
    ts2 = build_ts(load("example2"))
    body = ctl.stability_formula(ts2).arg.arg  # AF g = !EG !g
    assert isinstance(body, Not)
    parts = body.arg.args
    assert [len(p.args) for p in parts] == [2, 3, 3, 3]
    one = build_ts(parse_bes("unknown b; rule b -> b;"))
    assert isinstance(ctl.consistency_formula(one).arg.arg, And)  # !EF (EX b_true & EX b_false)
    assert check(one, ctl.stability_formula(one))
    assert ctl.strict_formula(one, 2) == Const(True)


def test_chain_small_instability():
    ts = build_ts(parse_bes(gen_chain(4, 1)))
    assert check(ts, ctl.consistency_formula(ts))
    assert not check(ts, ctl.stability_formula(ts))


def test_ef_iterations_are_monotone():
    ts = build_ts(load("example2"))
    reach = reach_frontiers(ts)[0].reach
    s = ctl._Sat(ts, reach)
    target = s.eval(Atom("a_false"))
    x, seq = target, [target]
    while True:
        x2 = x | s.pre(x)
        if x2 == x:
            break
        assert x.implies(x2)
        seq.append(x2)
        x = x2
    assert len(seq) <= ts.count(reach) + 1
    assert s.eval(EF(Atom("a_false"))) == seq[-1]


FORMULAS = [
    "EX {v}_true", "EF {v}_false", "EG !{v}_true", "E[{v}_true U {w}_false]",
    "AX {v}_true | {w}_true", "AG ({v}_true -> EF {w}_true)", "AF {v}_false",
    "A[!{v}_false U {w}_true]", "EF conflict_{v}",
]


def _instantiate(bes):
    names = [d.name for d in bes.decls]
    v, w = names[0], names[-1]
    return [parse_ctl(f.format(v=v, w=w)) for f in FORMULAS]


@pytest.mark.parametrize("name", FIXTURES)
def test_sat_matches_explicit_on_fixtures(name):
    bes = load(name)
    ts = build_ts(bes)
    graph = sim.explicit_reach(bes)
    reach = reach_frontiers(ts)[0].reach
    for f in _instantiate(bes):
        assert set(ts.states(sat(ts, f, reach))) == sim.explicit_sat(bes, graph, f), str(f)


@pytest.mark.parametrize("seed", CORPUS_SEEDS[:25])
def test_sat_matches_explicit_on_valid_universe(seed):
    bes = random_bes(seed, max_vars=4)
    ts = build_ts(bes)
    graph = sim.explicit_reach(bes, start=sim.all_states(bes))
    for f in _instantiate(bes) + [ctl.stability_formula(ts), ctl.consistency_formula(ts)]:
        assert set(ts.states(sat(ts, f))) == sim.explicit_sat(bes, graph, f), str(f)


@pytest.mark.parametrize("name", FIXTURES)
def test_duality(name):
    ts = build_ts(load(name))
    for atom in list(ts.atoms)[:6]:
        phi = Atom(atom)
        assert sat(ts, ctl.AG(phi)) == ts.valid - sat(ts, EF(Not(phi)))


@pytest.mark.parametrize("seed", CORPUS_SEEDS)
def test_formulas_agree_with_direct(seed):
    bes = random_bes(seed)
    ts = build_ts(bes)
    cons = check_consistency(ts)
    reach = reach_frontiers(ts)[0].reach
    assert check(ts, ctl.consistency_formula(ts), reach) == cons.consistent
    assert check(ts, ctl.conflict_formula(ts), reach) == cons.consistent
    if cons.consistent:
        assert check(ts, ctl.stability_formula(ts), reach) == check_stability(ts, reach).stable
    strict = sim.explicit_strict(bes)
    assert check(ts, ctl.strict_formula(ts, 2), reach) == (not strict["category2"])
    assert check(ts, ctl.strict_formula(ts, 3), reach) == (not strict["category3"])
