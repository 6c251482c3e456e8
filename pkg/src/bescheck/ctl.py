"""Symbolic CTL model checking over :class:`~bescheck.encode.SymbolicTS`.

Formulas use the existential base ``EX``, ``EF``, ``EG`` and ``E[. U .]``;
the universal operators are rewritten on construction::

    AX f     = !EX !f
    AG f     = !EF !f
    AF f     = !EG !f
    A[f U g] = !E[!g U (!f & !g)] & !EG !g

Concrete syntax: atoms ``<var>_true``, ``<var>_false``, ``<var>_unknown``,
constants ``true``/``false``, connectives ``! & |`` and ``->``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .bdd import Bdd
from .encode import SymbolicTS

__all__ = [
    "CtlSyntaxError", "Atom", "Const", "Not", "And", "Or", "EX", "EF", "EG", "EU",
    "AX", "AG", "AF", "AU", "parse_ctl", "sat", "check", "consistency_formula",
    "strict_formula", "stability_formula", "conflict_formula", "flip_free_formula",
    "atoms_of",
]


class CtlSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Not:
    arg: object

    def __str__(self):
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self):
        return " & ".join(_wrap(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple

    def __str__(self):
        return " | ".join(_wrap(a) for a in self.args)


@dataclass(frozen=True)
class EX:
    arg: object

    def __str__(self):
        return f"EX {_wrap(self.arg)}"


@dataclass(frozen=True)
class EF:
    arg: object

    def __str__(self):
        return f"EF {_wrap(self.arg)}"


@dataclass(frozen=True)
class EG:
    arg: object

    def __str__(self):
        return f"EG {_wrap(self.arg)}"


@dataclass(frozen=True)
class EU:
    left: object
    right: object

    def __str__(self):
        return f"E[{self.left} U {self.right}]"


def _wrap(f) -> str:
    return f"({f})" if isinstance(f, (And, Or)) else str(f)


def conj(*args):
    args = tuple(args)
    return args[0] if len(args) == 1 else And(args)


def disj(*args):
    args = tuple(args)
    return args[0] if len(args) == 1 else Or(args)


def neg(f):
    return f.arg if isinstance(f, Not) else Not(f)


def AX(f):
    return Not(EX(neg(f)))


def AG(f):
    return Not(EF(neg(f)))


def AF(f):
    return Not(EG(neg(f)))


def AU(f, g):
    return And((Not(EU(neg(g), And((neg(f), neg(g))))), Not(EG(neg(g)))))


# parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<op>->|[!&|()\[\]])|(?P<word>[A-Za-z_][A-Za-z0-9_]*))")
_UNARY = {"EX": EX, "EF": EF, "EG": EG, "AX": AX, "AG": AG, "AF": AF}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while True:
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip():
                    raise CtlSyntaxError(f"unexpected input at column {pos + 1}: {text[pos:]!r}")
                break
            self.toks.append((m.group("op") or m.group("word"), m.start(m.lastindex)))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise CtlSyntaxError("unexpected end of formula")
        self.i += 1
        return tok

    def expect(self, tok: str):
        got = self.peek()
        if got != tok:
            where = f"column {self.toks[self.i][1] + 1}" if got is not None else "end"
            raise CtlSyntaxError(f"expected {tok!r} at {where}, found {got!r}")
        self.i += 1

    def formula(self):
        f = self.implication()
        if self.peek() is not None:
            raise CtlSyntaxError(f"trailing input at column {self.toks[self.i][1] + 1}")
        return f

    def implication(self):
        left = self.or_()
        if self.peek() == "->":
            self.take()
            return Or((Not(left), self.implication()))
        return left

    def or_(self):
        args = [self.and_()]
        while self.peek() == "|":
            self.take()
            args.append(self.and_())
        return disj(*args)

    def and_(self):
        args = [self.unary()]
        while self.peek() == "&":
            self.take()
            args.append(self.unary())
        return conj(*args)

    def unary(self):
        tok = self.take()
        if tok == "!":
            return Not(self.unary())
        if tok in _UNARY:
            return _UNARY[tok](self.unary())
        if tok in ("E", "A"):
            self.expect("[")
            left = self.implication()
            self.expect("U")
            right = self.implication()
            self.expect("]")
            return EU(left, right) if tok == "E" else AU(left, right)
        if tok == "(":
            f = self.implication()
            self.expect(")")
            return f
        if tok in ("true", "false"):
            return Const(tok == "true")
        if tok in ("U", ")", "]", "[", "&", "|", "->"):
            raise CtlSyntaxError(f"unexpected {tok!r}")
        return Atom(tok)


def atoms_of(f) -> set:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Const):
        return set()
    if isinstance(f, (And, Or)):
        return set().union(*(atoms_of(a) for a in f.args))
    if isinstance(f, EU):
        return atoms_of(f.left) | atoms_of(f.right)
    return atoms_of(f.arg)


def parse_ctl(text: str, ts: Optional[SymbolicTS] = None):
    """Parse a CTL formula; with ``ts`` given, atoms are checked against its labels."""
    f = _Parser(text).formula()
    if ts is not None:
        missing = sorted(atoms_of(f) - ts.atoms.keys())
        if missing:
            raise CtlSyntaxError(f"unknown atom(s): {', '.join(missing)}")
    return f


# evaluation --------------------------------------------------------------

def sat(ts: SymbolicTS, f, universe: Optional[Bdd] = None) -> Bdd:
    """States of ``universe`` (default: all valid states) satisfying ``f``.

    ``universe`` must be closed under successors, e.g. the reachable states.
    """
    u = ts.valid if universe is None else universe
    return _Sat(ts, u).eval(f)


class _Sat:
    def __init__(self, ts: SymbolicTS, universe: Bdd):
        self.ts = ts
        self.u = universe
        # the universe is closed under successors, so cutting the relation
        # down to it leaves every predecessor set inside it unchanged
        self.trans = ts.trans if universe == ts.valid else ts.trans & universe
        self.memo: dict = {}
        self.iterations: list = []

    def pre(self, x: Bdd) -> Bdd:
        ts = self.ts
        return ts.manager.preimage(x, self.trans, ts.current_vars, ts.next_vars)

    def eval(self, f) -> Bdd:
        r = self.memo.get(f)
        if r is None:
            r = self._eval(f)
            self.memo[f] = r
        return r

    def _eval(self, f) -> Bdd:
        m = self.ts.manager
        if isinstance(f, Atom):
            if f.name not in self.ts.atoms:
                raise KeyError(f"unknown proposition {f.name!r}")
            return self.ts.atoms[f.name] & self.u
        if isinstance(f, Const):
            return self.u if f.value else m.false
        if isinstance(f, Not):
            return self.u - self.eval(f.arg)
        if isinstance(f, And):
            return m.conj(self.eval(a) for a in f.args)
        if isinstance(f, Or):
            return m.disj(self.eval(a) for a in f.args)
        if isinstance(f, EX):
            return self.pre(self.eval(f.arg))
        if isinstance(f, EF):
            # least fixpoint: X := X | pre(X)
            x, n = self.eval(f.arg), 0
            while True:
                x2 = x | self.pre(x)
                n += 1
                if x2 == x:
                    break
                x = x2
            self.iterations.append(("EF", n))
            return x
        if isinstance(f, EG):
            phi = self.eval(f.arg)
            z = phi
            while True:
                z2 = phi & self.pre(z)
                if z2 == z:
                    return z
                z = z2
        if isinstance(f, EU):
            phi, psi = self.eval(f.left), self.eval(f.right)
            z = psi
            while True:
                z2 = psi | (phi & self.pre(z))
                if z2 == z:
                    return z
                z = z2
        raise TypeError(f"not a CTL formula: {f!r}")


def check(ts: SymbolicTS, f, reach: Optional[Bdd] = None) -> bool:
    """``f`` holds in every initial state; evaluation is confined to reachable states."""
    if reach is None:
        from .engine import reach_frontiers
        reach = reach_frontiers(ts)[0].reach
    return ts.init.implies(sat(ts, f, universe=reach))


# property builders ---------------------------------------------------------

def _names(ts: SymbolicTS, known: Optional[bool] = None) -> list:
    return [d.name for d in ts.bes.decls if known is None or d.known == known]


def consistency_formula(ts: SymbolicTS):
    """No state can step to both values of a variable."""
    return AG(conj(*(Not(And((EX(Atom(v + "_true")), EX(Atom(v + "_false")))))
                     for v in _names(ts))))


def conflict_formula(ts: SymbolicTS):
    """No conflict state is reachable, with one proposition per conflicting variable."""
    props = [Atom(f"conflict_{d.name}") for d, c in zip(ts.bes.decls, ts.conflict)
             if not c.is_empty()]
    if not props:
        return Const(True)
    return Not(EF(disj(*props)))


def _no_flip(v: str):
    t, f = Atom(v + "_true"), Atom(v + "_false")
    return And((Not(And((t, EX(f)))), Not(And((f, EX(t))))))


def flip_free_formula(var: str):
    """``var`` never steps between True and False."""
    return AG(_no_flip(var))


def strict_formula(ts: SymbolicTS, category: Optional[int] = None):
    """Known (category 2) and/or unknown (category 3) variables never flip."""
    if category == 2:
        names = _names(ts, known=True)
    elif category == 3:
        names = _names(ts, known=False)
    else:
        names = _names(ts)
    if not names:
        return Const(True)
    return AG(conj(*(_no_flip(v) for v in names)))


def stability_formula(ts: SymbolicTS):
    """Eventually every variable keeps one value forever."""
    parts = []
    for d in ts.bes.decls:
        opts = [AG(Atom(d.name + "_true")), AG(Atom(d.name + "_false"))]
        if not d.known:
            opts.append(AG(Atom(d.name + "_unknown")))
        parts.append(disj(*opts))
    return AF(conj(*parts))
