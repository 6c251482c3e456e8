"""Rule language for Boolean evolution systems.

A system is a list of variable declarations plus guarded assignment rules::

    known a = true;        # fixed initial value
    known x;               # free: both initial values are explored
    unknown b, c;          # start out as Unknown
    rule a -> !b & c;
    rule !b -> !c;

Values are ``True``, ``False`` and ``None`` (Unknown).  A valuation of all
variables is a plain tuple in declaration order and prints as a string over
``1``, ``0`` and ``?``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

__all__ = [
    "BesSyntaxError", "BesError", "VarDecl", "Lit", "Not", "And", "Or",
    "Guard", "Rule", "BES", "TriState", "parse_bes", "pretty_print",
    "eval_guard", "enabled_rules", "format_state", "parse_state",
    "guard_vars",
]

TriState = tuple  # tuple[Optional[bool], ...] in declaration order


class BesError(ValueError):
    """Semantic error in a rule system (undeclared names, duplicates...)."""


class BesSyntaxError(BesError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class VarDecl:
    name: str
    known: bool
    init: Optional[bool] = None

    def __post_init__(self):
        if not self.known and self.init is not None:
            raise BesError(f"unknown variable {self.name!r} cannot have an initial value")


# Guards ---------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    var: str
    positive: bool = True


@dataclass(frozen=True)
class Not:
    arg: "Guard"


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


Guard = Union[Lit, Not, And, Or]


def guard_vars(g: Guard) -> Iterator[str]:
    if isinstance(g, Lit):
        yield g.var
    elif isinstance(g, Not):
        yield from guard_vars(g.arg)
    else:
        for a in g.args:
            yield from guard_vars(a)


@dataclass(frozen=True)
class Rule:
    guard: Guard
    assignments: tuple  # ((var, bool), ...)

    def __post_init__(self):
        if not self.assignments:
            raise BesError("rule has no assignments")
        names = [v for v, _ in self.assignments]
        if len(set(names)) != len(names):
            raise BesError(f"variable assigned twice in one rule: {names}")


@dataclass
class BES:
    decls: list
    rules: list
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._index = {}
        for i, d in enumerate(self.decls):
            if d.name in self._index:
                raise BesError(f"duplicate declaration of {d.name!r}")
            self._index[d.name] = i
        for r in self.rules:
            for v in list(guard_vars(r.guard)) + [v for v, _ in r.assignments]:
                if v not in self._index:
                    raise BesError(f"undeclared variable {v!r}")
        if not self.decls:
            raise BesError("a rule system needs at least one variable")
        if not self.rules:
            raise BesError("a rule system needs at least one rule")

    @property
    def names(self) -> list:
        return [d.name for d in self.decls]

    def index(self, name: str) -> int:
        return self._index[name]

    def initial_states(self) -> Iterator[TriState]:
        """All initial valuations; free known variables range over both values."""
        choices = []
        for d in self.decls:
            if not d.known:
                choices.append((None,))
            elif d.init is None:
                choices.append((False, True))
            else:
                choices.append((d.init,))
        yield from itertools.product(*choices)


# Three-valued semantics --------------------------------------------------------

def eval_guard(state: Sequence[Optional[bool]], g: Guard, bes: BES) -> Optional[bool]:
    """Kleene evaluation of ``g``; ``None`` stands for Unknown."""
    if isinstance(g, Lit):
        v = state[bes.index(g.var)]
        if v is None:
            return None
        return v if g.positive else not v
    if isinstance(g, Not):
        v = eval_guard(state, g.arg, bes)
        return None if v is None else not v
    if isinstance(g, And):
        result = True
        for a in g.args:
            v = eval_guard(state, a, bes)
            if v is False:
                return False
            if v is None:
                result = None
        return result
    result = False
    for a in g.args:
        v = eval_guard(state, a, bes)
        if v is True:
            return True
        if v is None:
            result = None
    return result


def enabled_rules(state: Sequence[Optional[bool]], bes: BES) -> list:
    return [i for i, r in enumerate(bes.rules) if eval_guard(state, r.guard, bes) is True]


_STATE_CHARS = {True: "1", False: "0", None: "?"}
_CHAR_STATES = {"1": True, "0": False, "?": None}


def format_state(state: Sequence[Optional[bool]]) -> str:
    return "".join(_STATE_CHARS[v] for v in state)


def parse_state(text: str) -> TriState:
    try:
        return tuple(_CHAR_STATES[c] for c in text)
    except KeyError as exc:
        raise ValueError(f"bad state character {exc.args[0]!r} in {text!r}") from None


# Parser ------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[!&|(),;=])
""", re.VERBOSE)

_KEYWORDS = {"known", "unknown", "rule", "true", "false"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise BesSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            toks.append(_Tok("kw" if m.group() in _KEYWORDS else "ident", m.group(), line, col))
        elif kind in ("arrow", "punct"):
            toks.append(_Tok("op", m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg: str):
        t = self.tok
        found = repr(t.text) if t.kind != "eof" else "end of input"
        raise BesSyntaxError(f"{msg}, found {found}", t.line, t.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "kw") and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def ident(self) -> _Tok:
        if self.tok.kind != "ident":
            self.error("expected identifier")
        t = self.tok
        self.pos += 1
        return t

    def parse(self):
        decls, rules = [], []
        while self.tok.kind != "eof":
            if self.tok.text in ("known", "unknown") and self.tok.kind == "kw":
                decls.extend(self.decl())
            elif self.accept("rule"):
                rules.append(self.rule())
            else:
                self.error("expected 'known', 'unknown' or 'rule'")
        return decls, rules

    def decl(self) -> list:
        known = self.tok.text == "known"
        self.pos += 1
        out = []
        while True:
            name = self.ident()
            init = None
            if self.accept("="):
                if self.accept("true"):
                    init = True
                elif self.accept("false"):
                    init = False
                else:
                    self.error("expected 'true' or 'false'")
                if not known:
                    raise BesError(f"{name.line}:{name.col}: unknown variable "
                                   f"{name.text!r} cannot have an initial value")
            out.append(VarDecl(name.text, known, init))
            if not self.accept(","):
                break
        self.expect(";")
        return out

    def rule(self) -> Rule:
        guard = self.or_()
        self.expect("->")
        assigns = [self.lit()]
        while self.accept("&"):
            assigns.append(self.lit())
        self.expect(";")
        return Rule(guard, tuple(assigns))

    def lit(self):
        positive = not self.accept("!")
        return (self.ident().text, positive)

    def or_(self) -> Guard:
        args = [self.and_()]
        while self.accept("|"):
            args.append(self.and_())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def and_(self) -> Guard:
        args = [self.unary()]
        while self.accept("&"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self) -> Guard:
        if self.accept("!"):
            arg = self.unary()
            # a negated atom is the literal "var is False"
            if isinstance(arg, Lit):
                return Lit(arg.var, not arg.positive)
            return Not(arg)
        if self.accept("("):
            g = self.or_()
            self.expect(")")
            return g
        return Lit(self.ident().text)


def parse_bes(text: str) -> BES:
    """Parse rule-system source text.

    Raises :class:`BesSyntaxError` (with line and column) on malformed input
    and :class:`BesError` on undeclared or duplicate variables.
    """
    decls, rules = _Parser(text).parse()
    return BES(decls, rules)


def _guard_str(g: Guard, parent: int = 0) -> str:
    # precedence: Or=1, And=2, unary=3
    if isinstance(g, Lit):
        return g.var if g.positive else "!" + g.var
    if isinstance(g, Not):
        if isinstance(g.arg, Lit):
            return _guard_str(Lit(g.arg.var, not g.arg.positive))
        return "!" + _guard_str(g.arg, 3)
    prec, sep = (2, " & ") if isinstance(g, And) else (1, " | ")
    s = sep.join(_guard_str(a, prec) for a in g.args)
    return f"({s})" if prec <= parent else s


def pretty_print(bes: BES) -> str:
    lines = []
    for d in bes.decls:
        if d.known:
            init = "" if d.init is None else f" = {'true' if d.init else 'false'}"
            lines.append(f"known {d.name}{init};")
        else:
            lines.append(f"unknown {d.name};")
    for r in bes.rules:
        rhs = " & ".join(v if val else "!" + v for v, val in r.assignments)
        lines.append(f"rule {_guard_str(r.guard)} -> {rhs};")
    return "\n".join(lines) + "\n"
