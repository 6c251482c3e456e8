import random

import pytest

from bescheck import fixture_path, parse_bes
from bescheck.dsl import BES, And, Lit, Not, Or, Rule, VarDecl

FIXTURES = ["example1", "example2", "example3", "case_study", "case_study_loop"]


def load(name: str) -> BES:
    with open(fixture_path(name + ".bes"), encoding="utf-8") as fh:
        return parse_bes(fh.read())


def _guard(rng: random.Random, names: list, depth: int = 0):
    roll = rng.random()
    if depth >= 2 or roll < 0.7:
        return Lit(rng.choice(names), rng.random() < 0.5)
    if roll < 0.85:
        return And(tuple(_guard(rng, names, depth + 1) for _ in range(rng.randint(2, 3))))
    if roll < 0.95:
        return Or(tuple(_guard(rng, names, depth + 1) for _ in range(2)))
    return Not(_guard(rng, names, depth + 1))


def random_bes(seed: int, max_vars: int = 6, max_rules: int = 10) -> BES:
    """Small random rule system; deterministic in ``seed``."""
    rng = random.Random(seed)
    n = rng.randint(2, max_vars)
    names = [f"v{i}" for i in range(n)]
    decls = []
    for name in names:
        if rng.random() < 0.5:
            init = rng.choice([None, True, False])
            decls.append(VarDecl(name, True, init))
        else:
            decls.append(VarDecl(name, False))
    rules = []
    if seed % 3 == 0:
        # a literal ring over some variables: these tend to oscillate
        ring = rng.sample(names, rng.randint(2, min(n, (max_rules - 1) // 2)))
        flips = [rng.random() < 0.5 for _ in ring]
        for i, a in enumerate(ring):
            b = ring[(i + 1) % len(ring)]
            rules.append(Rule(Lit(a, True), ((b, not flips[i]),)))
            rules.append(Rule(Lit(a, False), ((b, flips[i]),)))
    extra = rng.randint(0, min(2, max_rules - len(rules))) if rules else rng.randint(1, max_rules)
    for _ in range(extra):
        targets = rng.sample(names, rng.randint(1, 2))
        rules.append(Rule(_guard(rng, names), tuple((t, rng.random() < 0.5) for t in targets)))
    return BES(decls, rules)


CORPUS_SEEDS = list(range(60))


@pytest.fixture(scope="session")
def corpus():
    return [random_bes(s) for s in CORPUS_SEEDS]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
