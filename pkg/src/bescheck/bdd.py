"""Reduced ordered binary decision diagrams.

Nodes live in a :class:`BddManager` as integer ids indexing three parallel
lists (level, low child, high child).  Id 0 is the constant false and id 1
the constant true; both sit at level ``num_vars``.  Nodes are hash-consed
through a unique table, so two functions are equal exactly when their ids
are equal.  There are no complemented edges and no reordering.

User code works with :class:`Bdd` handles, which support ``&``, ``|``,
``^``, ``-`` (difference) and ``~``.  Each handle counts as an external
reference to its node; when the unique table outgrows a threshold, nodes
unreachable from any live handle are swept at the start of the next
top-level operation and the operation caches are dropped.
"""
from __future__ import annotations

import sys
from typing import Iterable, Mapping, Sequence

__all__ = ["Bdd", "BddManager", "BddError"]

_MIN_RECURSION = 20000
_FREE = -1
_SHIFT = 32


class BddError(ValueError):
    pass


class Bdd:
    """Handle to a node of a :class:`BddManager`."""

    __slots__ = ("manager", "node")

    def __init__(self, manager: "BddManager", node: int):
        self.manager = manager
        self.node = node
        refs = manager._refs
        refs[node] = refs.get(node, 0) + 1

    def __del__(self):
        try:
            refs = self.manager._refs
            n = refs[self.node] - 1
            if n:
                refs[self.node] = n
            else:
                del refs[self.node]
        except (AttributeError, KeyError, TypeError):  # interpreter shutdown
            pass

    def _other(self, other) -> int:
        if not isinstance(other, Bdd):
            raise TypeError(f"expected Bdd, got {type(other).__name__}")
        if other.manager is not self.manager:
            raise BddError("operands belong to different managers")
        return other.node

    def __and__(self, other):
        m = self.manager
        b = self._other(other)
        m._safe_point()
        return Bdd(m, m._and(self.node, b))

    def __or__(self, other):
        m = self.manager
        b = self._other(other)
        m._safe_point()
        return Bdd(m, m._or(self.node, b))

    def __xor__(self, other):
        m = self.manager
        b = self._other(other)
        m._safe_point()
        return Bdd(m, m._xor(self.node, b))

    def __sub__(self, other):
        m = self.manager
        b = self._other(other)
        m._safe_point()
        return Bdd(m, m._diff(self.node, b))

    def __invert__(self):
        m = self.manager
        m._safe_point()
        return Bdd(m, m._not(self.node))

    def __eq__(self, other):
        return isinstance(other, Bdd) and other.manager is self.manager and other.node == self.node

    def __hash__(self):
        return hash((id(self.manager), self.node))

    def __bool__(self):
        raise TypeError("use is_empty() / is_true() instead of truth-testing a Bdd")

    def is_empty(self) -> bool:
        return self.node == 0

    def is_true(self) -> bool:
        return self.node == 1

    def implies(self, other: "Bdd") -> bool:
        """``self`` is a subset of ``other``."""
        return (self - other).is_empty()

    def __repr__(self):
        if self.node < 2:
            return f"Bdd({'TRUE' if self.node else 'FALSE'})"
        return f"Bdd(node={self.node}, level={self.manager._level[self.node]})"


class BddManager:
    """Node store over a fixed number of decision variables.

    Variable ``i`` is tested at level ``i``; smaller levels are nearer the root.
    """

    def __init__(self, num_vars: int, gc_threshold: int = 1 << 20,
                 cache_limit: int = 1 << 22):
        if num_vars < 0:
            raise BddError("number of variables must be nonnegative")
        self.num_vars = num_vars
        self._level = [num_vars, num_vars]
        self._low = [0, 1]
        self._high = [0, 1]
        self._free: list = []
        self._unique: dict = {}
        self._refs: dict = {}
        self._varsets: dict = {}
        self._renames: dict = {}
        self._gc_base = self._gc_threshold = gc_threshold
        self._cache_limit = cache_limit
        self._ops = 0
        self.gc_runs = 0
        self._new_caches()
        if sys.getrecursionlimit() < _MIN_RECURSION:
            sys.setrecursionlimit(_MIN_RECURSION)
        self.true = Bdd(self, 1)
        self.false = Bdd(self, 0)

    def _new_caches(self):
        self._c_and: dict = {}
        self._c_or: dict = {}
        self._c_xor: dict = {}
        self._c_diff: dict = {}
        self._c_not: dict = {}
        self._c_ite: dict = {}
        self._c_exists: dict = {}   # varset id -> {node: result}
        self._c_andex: dict = {}    # varset id -> {a<<32|b: result}
        self._c_rename: dict = {}   # rename id -> {node: result}

    def clear_cache(self):
        self._new_caches()

    def cache_size(self) -> int:
        n = (len(self._c_and) + len(self._c_or) + len(self._c_xor) + len(self._c_diff)
             + len(self._c_not) + len(self._c_ite))
        for group in (self._c_exists, self._c_andex, self._c_rename):
            n += sum(len(d) for d in group.values())
        return n

    def __len__(self):
        """Number of live (unswept) nodes, terminals included."""
        return len(self._unique) + 2

    # memory management ----------------------------------------------------

    def _safe_point(self):
        # called only at the entry of top-level operations, when every
        # node in use is held by some handle
        if len(self._unique) > self._gc_threshold:
            self.collect_garbage()
        else:
            self._ops += 1
            if self._ops & 63 == 0 and self.cache_size() > self._cache_limit:
                self._new_caches()

    def collect_garbage(self) -> int:
        """Sweep nodes unreachable from live handles; returns the number freed."""
        level, low, high = self._level, self._low, self._high
        marked = bytearray(len(level))
        marked[0] = marked[1] = 1
        stack = [u for u in self._refs]
        while stack:
            u = stack.pop()
            if marked[u]:
                continue
            marked[u] = 1
            stack.append(low[u])
            stack.append(high[u])
        unique, free = self._unique, self._free
        freed = 0
        for u in range(2, len(level)):
            if not marked[u] and level[u] != _FREE:
                del unique[(level[u], low[u], high[u])]
                level[u] = _FREE
                free.append(u)
                freed += 1
        self._new_caches()
        self._gc_threshold = max(self._gc_base, 2 * len(unique))
        self.gc_runs += 1
        return freed

    # node construction ---------------------------------------------------

    def _mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (level, low, high)
        u = self._unique.get(key)
        if u is None:
            if self._free:
                u = self._free.pop()
                self._level[u] = level
                self._low[u] = low
                self._high[u] = high
            else:
                u = len(self._level)
                self._level.append(level)
                self._low.append(low)
                self._high.append(high)
            self._unique[key] = u
        return u

    def _check_var(self, i: int):
        if not 0 <= i < self.num_vars:
            raise BddError(f"variable index {i} out of range 0..{self.num_vars - 1}")

    def var(self, i: int) -> Bdd:
        self._check_var(i)
        return Bdd(self, self._mk(i, 0, 1))

    def nvar(self, i: int) -> Bdd:
        self._check_var(i)
        return Bdd(self, self._mk(i, 1, 0))

    def cube(self, assignment: Mapping[int, bool]) -> Bdd:
        """Conjunction of literals, e.g. ``{0: True, 3: False}``."""
        u = 1
        for i in sorted(assignment, reverse=True):
            self._check_var(i)
            u = self._mk(i, 0, u) if assignment[i] else self._mk(i, u, 0)
        return Bdd(self, u)

    def _node(self, a: Bdd) -> int:
        if not isinstance(a, Bdd):
            raise TypeError(f"expected Bdd, got {type(a).__name__}")
        if a.manager is not self:
            raise BddError("operand belongs to a different manager")
        return a.node

    # boolean operations ---------------------------------------------------

    def _and(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if a == 1 or a == b:
            return b
        if b == 1:
            return a
        if a > b:
            a, b = b, a
        key = a << _SHIFT | b
        r = self._c_and.get(key)
        if r is not None:
            return r
        level, low, high = self._level, self._low, self._high
        la, lb = level[a], level[b]
        if la == lb:
            r = self._mk(la, self._and(low[a], low[b]), self._and(high[a], high[b]))
        elif la < lb:
            r = self._mk(la, self._and(low[a], b), self._and(high[a], b))
        else:
            r = self._mk(lb, self._and(a, low[b]), self._and(a, high[b]))
        self._c_and[key] = r
        return r

    def _or(self, a: int, b: int) -> int:
        if a == 1 or b == 1:
            return 1
        if a == 0 or a == b:
            return b
        if b == 0:
            return a
        if a > b:
            a, b = b, a
        key = a << _SHIFT | b
        r = self._c_or.get(key)
        if r is not None:
            return r
        level, low, high = self._level, self._low, self._high
        la, lb = level[a], level[b]
        if la == lb:
            r = self._mk(la, self._or(low[a], low[b]), self._or(high[a], high[b]))
        elif la < lb:
            r = self._mk(la, self._or(low[a], b), self._or(high[a], b))
        else:
            r = self._mk(lb, self._or(a, low[b]), self._or(a, high[b]))
        self._c_or[key] = r
        return r

    def _xor(self, a: int, b: int) -> int:
        if a == b:
            return 0
        if a == 0:
            return b
        if b == 0:
            return a
        if a == 1:
            return self._not(b)
        if b == 1:
            return self._not(a)
        if a > b:
            a, b = b, a
        key = a << _SHIFT | b
        r = self._c_xor.get(key)
        if r is not None:
            return r
        level, low, high = self._level, self._low, self._high
        la, lb = level[a], level[b]
        if la == lb:
            r = self._mk(la, self._xor(low[a], low[b]), self._xor(high[a], high[b]))
        elif la < lb:
            r = self._mk(la, self._xor(low[a], b), self._xor(high[a], b))
        else:
            r = self._mk(lb, self._xor(a, low[b]), self._xor(a, high[b]))
        self._c_xor[key] = r
        return r

    def _diff(self, a: int, b: int) -> int:
        if a == 0 or b == 1 or a == b:
            return 0
        if b == 0:
            return a
        if a == 1:
            return self._not(b)
        key = a << _SHIFT | b
        r = self._c_diff.get(key)
        if r is not None:
            return r
        level, low, high = self._level, self._low, self._high
        la, lb = level[a], level[b]
        if la == lb:
            r = self._mk(la, self._diff(low[a], low[b]), self._diff(high[a], high[b]))
        elif la < lb:
            r = self._mk(la, self._diff(low[a], b), self._diff(high[a], b))
        else:
            r = self._mk(lb, self._diff(a, low[b]), self._diff(a, high[b]))
        self._c_diff[key] = r
        return r

    def _not(self, a: int) -> int:
        if a < 2:
            return 1 - a
        r = self._c_not.get(a)
        if r is not None:
            return r
        r = self._mk(self._level[a], self._not(self._low[a]), self._not(self._high[a]))
        self._c_not[a] = r
        return r

    def _ite(self, f: int, g: int, h: int) -> int:
        if f == 1:
            return g
        if f == 0:
            return h
        if g == h:
            return g
        if g == 1 and h == 0:
            return f
        if g == 0 and h == 1:
            return self._not(f)
        if g == 1:
            return self._or(f, h)
        if h == 0:
            return self._and(f, g)
        key = (f, g, h)
        r = self._c_ite.get(key)
        if r is not None:
            return r
        level, low, high = self._level, self._low, self._high
        v = min(level[f], level[g], level[h])
        f0, f1 = (low[f], high[f]) if level[f] == v else (f, f)
        g0, g1 = (low[g], high[g]) if level[g] == v else (g, g)
        h0, h1 = (low[h], high[h]) if level[h] == v else (h, h)
        r = self._mk(v, self._ite(f0, g0, h0), self._ite(f1, g1, h1))
        self._c_ite[key] = r
        return r

    def apply(self, op: str, a: Bdd, b: Bdd) -> Bdd:
        """Binary operation by name: ``and``, ``or``, ``xor`` or ``diff``."""
        x, y = self._node(a), self._node(b)
        fn = {"and": self._and, "or": self._or, "xor": self._xor, "diff": self._diff}.get(op)
        if fn is None:
            raise BddError(f"unknown operator {op!r}")
        self._safe_point()
        return Bdd(self, fn(x, y))

    def not_(self, a: Bdd) -> Bdd:
        x = self._node(a)
        self._safe_point()
        return Bdd(self, self._not(x))

    def ite(self, f: Bdd, g: Bdd, h: Bdd) -> Bdd:
        x, y, z = self._node(f), self._node(g), self._node(h)
        self._safe_point()
        return Bdd(self, self._ite(x, y, z))

    def conj(self, items: Iterable[Bdd]) -> Bdd:
        items = list(items)
        self._safe_point()
        u = 1
        for a in items:
            u = self._and(u, self._node(a))
        return Bdd(self, u)

    def disj(self, items: Iterable[Bdd]) -> Bdd:
        items = list(items)
        self._safe_point()
        u = 0
        for a in items:
            u = self._or(u, self._node(a))
        return Bdd(self, u)

    # quantification -------------------------------------------------------

    def _varset(self, vars_: Iterable[int]):
        levels = frozenset(vars_)
        entry = self._varsets.get(levels)
        if entry is None:
            for i in levels:
                self._check_var(i)
            flags = bytearray(self.num_vars + 1)
            for i in levels:
                flags[i] = 1
            entry = (len(self._varsets), flags, max(levels, default=-1))
            self._varsets[levels] = entry
        return entry

    def _exists(self, a: int, qs) -> int:
        qid, flags, qmax = qs
        la = self._level[a]
        if la > qmax:
            return a
        cache = self._c_exists.get(qid)
        if cache is None:
            cache = self._c_exists[qid] = {}
        r = cache.get(a)
        if r is not None:
            return r
        r0 = self._exists(self._low[a], qs)
        if flags[la]:
            r = 1 if r0 == 1 else self._or(r0, self._exists(self._high[a], qs))
        else:
            r = self._mk(la, r0, self._exists(self._high[a], qs))
        cache[a] = r
        return r

    def _and_exists(self, a: int, b: int, qs, cache: dict) -> int:
        if a == 0 or b == 0:
            return 0
        if a == 1:
            return self._exists(b, qs)
        if b == 1 or a == b:
            return self._exists(a, qs)
        if a > b:
            a, b = b, a
        flags, qmax = qs[1], qs[2]
        level = self._level
        la, lb = level[a], level[b]
        v = la if la < lb else lb
        if v > qmax:
            return self._and(a, b)
        key = a << _SHIFT | b
        r = cache.get(key)
        if r is not None:
            return r
        low, high = self._low, self._high
        if la == v:
            a0, a1 = low[a], high[a]
        else:
            a0 = a1 = a
        if lb == v:
            b0, b1 = low[b], high[b]
        else:
            b0 = b1 = b
        r0 = self._and_exists(a0, b0, qs, cache)
        if flags[v]:
            r = 1 if r0 == 1 else self._or(r0, self._and_exists(a1, b1, qs, cache))
        else:
            r = self._mk(v, r0, self._and_exists(a1, b1, qs, cache))
        cache[key] = r
        return r

    def exists(self, vars_: Iterable[int], a: Bdd) -> Bdd:
        x = self._node(a)
        qs = self._varset(vars_)
        self._safe_point()
        return Bdd(self, self._exists(x, qs))

    def forall(self, vars_: Iterable[int], a: Bdd) -> Bdd:
        x = self._node(a)
        qs = self._varset(vars_)
        self._safe_point()
        return Bdd(self, self._not(self._exists(self._not(x), qs)))

    def and_exists(self, vars_: Iterable[int], a: Bdd, b: Bdd) -> Bdd:
        """``exists(vars_, a & b)`` without building the conjunction."""
        x, y = self._node(a), self._node(b)
        qs = self._varset(vars_)
        self._safe_point()
        cache = self._c_andex.get(qs[0])
        if cache is None:
            cache = self._c_andex[qs[0]] = {}
        return Bdd(self, self._and_exists(x, y, qs, cache))

    # substitution ---------------------------------------------------------

    def support(self, a: Bdd) -> set:
        seen, out, stack = set(), set(), [self._node(a)]
        while stack:
            u = stack.pop()
            if u < 2 or u in seen:
                continue
            seen.add(u)
            out.add(self._level[u])
            stack.append(self._low[u])
            stack.append(self._high[u])
        return out

    def rename(self, a: Bdd, mapping: Mapping[int, int]) -> Bdd:
        """Substitute variable ``mapping[i]`` for every variable ``i`` (simultaneously).

        Nodes whose new level still sits above both children are relabelled
        in place; the rest are rebuilt with ``ite``.
        """
        u = self._node(a)
        key_map = tuple(sorted((i, j) for i, j in mapping.items() if i != j))
        entry = self._renames.get(key_map)
        if entry is None:
            for i, j in key_map:
                self._check_var(i)
                self._check_var(j)
            entry = (len(self._renames), dict(key_map))
            self._renames[key_map] = entry
        mid, table = entry
        if not table:
            return a
        self._safe_point()
        cache = self._c_rename.get(mid)
        if cache is None:
            cache = self._c_rename[mid] = {}
        return Bdd(self, self._rename(u, table, cache))

    def _rename(self, u: int, table: dict, cache: dict) -> int:
        if u < 2:
            return u
        r = cache.get(u)
        if r is not None:
            return r
        level = self._level
        lvl = level[u]
        lo = self._rename(self._low[u], table, cache)
        hi = self._rename(self._high[u], table, cache)
        target = table.get(lvl, lvl)
        if target < level[lo] and target < level[hi]:
            r = self._mk(target, lo, hi)
        else:
            r = self._ite(self._mk(target, 0, 1), hi, lo)
        cache[u] = r
        return r

    # relational operations -----------------------------------------------

    @staticmethod
    def _check_pair(current_vars: Sequence[int], next_vars: Sequence[int]):
        if len(current_vars) != len(next_vars):
            raise BddError("current and next variable lists differ in length")
        if set(current_vars) & set(next_vars):
            raise BddError("current and next variable sets overlap")

    def image(self, states: Bdd, trans: Bdd, current_vars: Sequence[int],
              next_vars: Sequence[int]) -> Bdd:
        """Successors of ``states`` under ``trans``, expressed over the current variables."""
        self._check_pair(current_vars, next_vars)
        succ = self.and_exists(current_vars, states, trans)
        return self.rename(succ, dict(zip(next_vars, current_vars)))

    def preimage(self, states: Bdd, trans: Bdd, current_vars: Sequence[int],
                 next_vars: Sequence[int]) -> Bdd:
        """Predecessors of ``states`` under ``trans``."""
        self._check_pair(current_vars, next_vars)
        primed = self.rename(states, dict(zip(current_vars, next_vars)))
        return self.and_exists(next_vars, primed, trans)

    def identity_relation(self, current_vars: Sequence[int], next_vars: Sequence[int]) -> Bdd:
        if len(current_vars) != len(next_vars):
            raise BddError("current and next variable lists differ in length")
        for i in list(current_vars) + list(next_vars):
            self._check_var(i)
        self._safe_point()
        u = 1
        for x, y in zip(current_vars, next_vars):
            u = self._and(u, self._not(self._xor(self._mk(x, 0, 1), self._mk(y, 0, 1))))
        return Bdd(self, u)

    # inspection -------------------------------------------------------------

    def sat_count(self, a: Bdd, care_vars=None) -> int:
        """Number of satisfying assignments over ``care_vars``.

        ``care_vars`` is a count ``n`` (meaning variables ``0..n-1``), an
        iterable of variable indices, or ``None`` for all variables.  The
        support of ``a`` must lie inside it.  The result is an exact integer.
        """
        u = self._node(a)
        if care_vars is None:
            care = list(range(self.num_vars))
        elif isinstance(care_vars, int):
            care = list(range(care_vars))
        else:
            care = sorted(set(care_vars))
        pos = {lvl: k for k, lvl in enumerate(care)}
        if not self.support(a) <= pos.keys():
            raise BddError("function depends on variables outside the counted set")
        n = len(care)
        level, low, high = self._level, self._low, self._high
        memo: dict = {}

        def rank(x):
            return n if x < 2 else pos[level[x]]

        def count(x):
            # models over the care variables from rank(x) onwards
            if x < 2:
                return x
            r = memo.get(x)
            if r is None:
                k = pos[level[x]]
                lo, hi = low[x], high[x]
                r = (count(lo) << (rank(lo) - k - 1)) + (count(hi) << (rank(hi) - k - 1))
                memo[x] = r
            return r

        return count(u) << rank(u)

    def pick_cube(self, a: Bdd) -> list:
        """Lexicographically smallest satisfying assignment (False < True)."""
        u = self._node(a)
        if u == 0:
            raise BddError("cannot pick from the empty set")
        out = [False] * self.num_vars
        while u > 1:
            if self._low[u] != 0:
                u = self._low[u]
            else:
                out[self._level[u]] = True
                u = self._high[u]
        return out

    def node_count(self, a: Bdd) -> int:
        """Number of internal nodes reachable from ``a``."""
        seen, stack = set(), [self._node(a)]
        while stack:
            u = stack.pop()
            if u < 2 or u in seen:
                continue
            seen.add(u)
            stack.append(self._low[u])
            stack.append(self._high[u])
        return len(seen)

    def evaluate(self, a: Bdd, assignment: Sequence[bool]) -> bool:
        u = self._node(a)
        while u > 1:
            u = self._high[u] if assignment[self._level[u]] else self._low[u]
        return u == 1
