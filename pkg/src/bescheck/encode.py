"""Symbolic transition systems for rule systems under synchronous semantics.

Every variable gets one state bit (known) or two (unknown).  Each state bit
has a current and a next copy, interleaved in the BDD order as
``c0 n0 c1 n1 ...``.  An unknown variable uses the bit pair (flag, value)
with False = 00, True = 01, Unknown = 10; 11 is not a valid state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bdd import Bdd, BddManager
from .dsl import BES, And, Guard, Lit, Not, Or

__all__ = ["SymbolicTS", "build_ts", "guard_true_set", "atom"]


@dataclass
class SymbolicTS:
    bes: BES
    manager: BddManager
    bits: list                 # per variable: tuple of state-bit indices
    init: Bdd
    trans: Bdd
    valid: Bdd
    atoms: dict                # "<var>_true" / "_false" / "_unknown" / "conflict_<var>" -> Bdd
    pos: list                  # per variable: states where some enabled rule sets it true
    neg: list                  # ... sets it false
    conflict: list             # per variable: pos & neg & valid
    conflict_any: Bdd
    guards: list = field(default_factory=list)  # per rule: guard true-set
    current_vars: list = field(default_factory=list)
    next_vars: list = field(default_factory=list)

    @property
    def num_bits(self) -> int:
        return len(self.current_vars)

    def image(self, states: Bdd) -> Bdd:
        return self.manager.image(states, self.trans, self.current_vars, self.next_vars)

    def preimage(self, states: Bdd) -> Bdd:
        return self.manager.preimage(states, self.trans, self.current_vars, self.next_vars)

    def count(self, states: Bdd) -> int:
        """Number of states (valuations) in a set over the current bits."""
        return self.manager.sat_count(states, self.current_vars)

    def state_bdd(self, state: Sequence[Optional[bool]]) -> Bdd:
        """The singleton set holding one valuation."""
        cube = {}
        for bits, value in zip(self.bits, state):
            if len(bits) == 1:
                if value is None:
                    raise ValueError("known variable cannot be Unknown")
                cube[2 * bits[0]] = value
            else:
                flag, val = bits
                cube[2 * flag] = value is None
                cube[2 * val] = bool(value)
        return self.manager.cube(cube)

    def decode(self, assignment: Sequence[bool]) -> tuple:
        out = []
        for bits in self.bits:
            if len(bits) == 1:
                out.append(assignment[2 * bits[0]])
            else:
                flag, val = bits
                out.append(None if assignment[2 * flag] else assignment[2 * val])
        return tuple(out)

    def pick_state(self, states: Bdd) -> tuple:
        """Lexicographically least valuation in a nonempty set."""
        return self.decode(self.manager.pick_cube(states))

    def states(self, states: Bdd, limit: Optional[int] = None) -> list:
        """Enumerate a state set in pick order (small sets only)."""
        out = []
        rest = states
        while not rest.is_empty() and (limit is None or len(out) < limit):
            s = self.pick_state(rest)
            out.append(s)
            rest = rest - self.state_bdd(s)
        return out

    def atom(self, name: str) -> Bdd:
        return atom(self, name)


def _dual_rail(g: Guard, ts_atoms: dict, m: BddManager):
    """(true-set, false-set) of a guard under Kleene semantics."""
    if isinstance(g, Lit):
        t, f = ts_atoms[g.var + "_true"], ts_atoms[g.var + "_false"]
        return (t, f) if g.positive else (f, t)
    if isinstance(g, Not):
        t, f = _dual_rail(g.arg, ts_atoms, m)
        return f, t
    pairs = [_dual_rail(a, ts_atoms, m) for a in g.args]
    if isinstance(g, And):
        return m.conj(t for t, _ in pairs), m.disj(f for _, f in pairs)
    assert isinstance(g, Or)
    return m.disj(t for t, _ in pairs), m.conj(f for _, f in pairs)


def guard_true_set(g: Guard, ts: SymbolicTS) -> Bdd:
    """States (over current bits) where the guard evaluates to True."""
    t, _ = _dual_rail(g, ts.atoms, ts.manager)
    return t & ts.valid


def atom(ts: SymbolicTS, name: str) -> Bdd:
    try:
        return ts.atoms[name]
    except KeyError:
        raise KeyError(f"unknown proposition {name!r}") from None


def build_ts(bes: BES) -> SymbolicTS:
    """Encode ``bes`` as a symbolic transition system."""
    bits, nbits = [], 0
    for d in bes.decls:
        width = 1 if d.known else 2
        bits.append(tuple(range(nbits, nbits + width)))
        nbits += width
    m = BddManager(2 * nbits)
    cur = [2 * b for b in range(nbits)]
    nxt = [2 * b + 1 for b in range(nbits)]

    def c(b):
        return m.var(2 * b)

    def n(b):
        return m.var(2 * b + 1)

    atoms, valid_parts, init_parts = {}, [], []
    for d, bs in zip(bes.decls, bits):
        if d.known:
            (b,) = bs
            atoms[d.name + "_true"] = c(b)
            atoms[d.name + "_false"] = ~c(b)
            if d.init is not None:
                init_parts.append(c(b) if d.init else ~c(b))
        else:
            flag, val = bs
            atoms[d.name + "_true"] = ~c(flag) & c(val)
            atoms[d.name + "_false"] = ~c(flag) & ~c(val)
            atoms[d.name + "_unknown"] = c(flag) & ~c(val)
            valid_parts.append(~(c(flag) & c(val)))
            init_parts.append(atoms[d.name + "_unknown"])
    valid = m.conj(valid_parts)
    init = m.conj(init_parts) & valid

    ts = SymbolicTS(bes=bes, manager=m, bits=bits, init=init, trans=m.false, valid=valid,
                    atoms=atoms, pos=[], neg=[], conflict=[], conflict_any=m.false,
                    current_vars=cur, next_vars=nxt)

    guards = [guard_true_set(r.guard, ts) for r in bes.rules]
    pos = [m.false] * len(bes.decls)
    neg = [m.false] * len(bes.decls)
    for r, g in zip(bes.rules, guards):
        for var, value in r.assignments:
            i = bes.index(var)
            if value:
                pos[i] = pos[i] | g
            else:
                neg[i] = neg[i] | g

    trans = valid
    for i, (d, bs) in enumerate(zip(bes.decls, bits)):
        p, q = pos[i], neg[i]
        set_true, set_false, keep, both = p - q, q - p, ~(p | q), p & q
        if d.known:
            (b,) = bs
            to_true, to_false = n(b), ~n(b)
            unchanged = ~(n(b) ^ c(b))
            either = m.true
        else:
            flag, val = bs
            to_true = ~n(flag) & n(val)
            to_false = ~n(flag) & ~n(val)
            unchanged = ~(n(flag) ^ c(flag)) & ~(n(val) ^ c(val))
            either = ~n(flag)
        rel = (set_true & to_true) | (set_false & to_false) | (keep & unchanged) | (both & either)
        trans = trans & rel

    ts.trans = trans
    ts.pos, ts.neg = pos, neg
    ts.conflict = [p & q & valid for p, q in zip(pos, neg)]
    ts.conflict_any = m.disj(ts.conflict)
    for d, conflict in zip(bes.decls, ts.conflict):
        atoms["conflict_" + d.name] = conflict
    ts.guards = guards
    return ts
