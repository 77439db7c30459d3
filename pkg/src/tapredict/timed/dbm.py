"""Zones as canonical difference-bound matrices.

Entry ``m[i][j]`` bounds ``x_i - x_j``; index 0 is the constant-zero
reference clock.  A bound is a pair ``(value, le)`` where ``le`` is 1 for
``<=`` and 0 for ``<``, so tuple order is bound tightness.  Values are
ints or Fractions; the unbounded entry is ``(inf, 0)``.
"""

from __future__ import annotations

import math
from fractions import Fraction

INF_BOUND = (math.inf, 0)
LE_ZERO = (0, 1)


def add(a, b):
    if a[0] == math.inf or b[0] == math.inf:
        return INF_BOUND
    return (a[0] + b[0], a[1] & b[1])


def _close(m):
    n = len(m)
    for k in range(n):
        mk = m[k]
        for i in range(n):
            mik = m[i][k]
            if mik[0] == math.inf:
                continue
            mi = m[i]
            for j in range(n):
                mkj = mk[j]
                if mkj[0] == math.inf:
                    continue
                s = (mik[0] + mkj[0], mik[1] & mkj[1])
                if s < mi[j]:
                    mi[j] = s
    return all(m[i][i] >= LE_ZERO for i in range(n))


class Zone:
    """Convex set of clock valuations over a fixed, ordered clock list."""

    __slots__ = ("clocks", "index", "m", "empty")

    def __init__(self, clocks, m, empty=False):
        self.clocks = tuple(clocks)
        self.index = {c: i + 1 for i, c in enumerate(self.clocks)}
        self.m = m
        self.empty = empty

    # construction -----------------------------------------------------------

    @classmethod
    def universe(cls, clocks):
        n = len(clocks) + 1
        m = [[INF_BOUND] * n for _ in range(n)]
        for i in range(n):
            m[i][i] = LE_ZERO
            m[0][i] = LE_ZERO
        return cls(clocks, m)

    @classmethod
    def point(cls, clocks, valuation):
        vals = [0] + [Fraction(valuation.get(c, 0)) for c in clocks]
        n = len(vals)
        m = [[(vals[i] - vals[j], 1) for j in range(n)] for i in range(n)]
        return cls(clocks, m)

    @classmethod
    def zero(cls, clocks):
        return cls.point(clocks, {})

    def copy(self):
        return Zone(self.clocks, [row[:] for row in self.m], self.empty)

    def _empty(self):
        return Zone(self.clocks, self.m, True)

    # queries ----------------------------------------------------------------

    def is_empty(self) -> bool:
        return self.empty

    def key(self):
        if self.empty:
            return None
        return tuple(b for row in self.m for b in row)

    def __eq__(self, other):
        return isinstance(other, Zone) and self.clocks == other.clocks and self.key() == other.key()

    def __hash__(self):
        return hash((self.clocks, self.key()))

    def includes(self, other: "Zone") -> bool:
        """True when `other` is a subset of this zone."""
        if other.empty:
            return True
        if self.empty:
            return False
        return all(a >= b for ra, rb in zip(self.m, other.m) for a, b in zip(ra, rb))

    def contains(self, valuation) -> bool:
        if self.empty:
            return False
        vals = [0] + [Fraction(valuation.get(c, 0)) for c in self.clocks]
        n = len(vals)
        for i in range(n):
            for j in range(n):
                v, le = self.m[i][j]
                d = vals[i] - vals[j]
                if d > v or (d == v and not le):
                    return False
        return True

    def interval(self, clock):
        """``((lo, lo_le), (hi, hi_le))`` for one clock."""
        i = self.index[clock]
        lo = self.m[0][i]
        return (-lo[0], lo[1]), self.m[i][0]

    # operations (all return new zones) --------------------------------------

    def constrain(self, i, j, bound) -> "Zone":
        """Intersect with ``x_i - x_j (<|<=) value``."""
        if self.empty:
            return self
        m = self.m
        if bound >= m[i][j]:
            return self
        if add(bound, m[j][i]) < LE_ZERO:
            return self._empty()
        m = [row[:] for row in m]
        n = len(m)
        col_i = [m[k][i] for k in range(n)]
        row_j = m[j][:]
        for k in range(n):
            ki = add(col_i[k], bound)
            if ki[0] == math.inf:
                continue
            mk = m[k]
            for l in range(n):
                s = add(ki, row_j[l])
                if s < mk[l]:
                    mk[l] = s
        return Zone(self.clocks, m)

    def constrain_atom(self, clock, op, c) -> "Zone":
        i = self.index[clock]
        if op == "<":
            return self.constrain(i, 0, (c, 0))
        if op == "<=":
            return self.constrain(i, 0, (c, 1))
        if op == ">":
            return self.constrain(0, i, (-c, 0))
        if op == ">=":
            return self.constrain(0, i, (-c, 1))
        return self.constrain(i, 0, (c, 1)).constrain(0, i, (-c, 1))

    def __and__(self, guard) -> "Zone":
        """Intersect with a ClockConstraint, or with another zone."""
        if isinstance(guard, Zone):
            return self.intersect(guard)
        z = self
        for x, op, c in guard.atoms:
            z = z.constrain_atom(x, op, c)
            if z.empty:
                break
        return z

    def intersect(self, other: "Zone") -> "Zone":
        if self.empty or other.empty:
            return self._empty()
        z = self
        n = len(self.m)
        for i in range(n):
            for j in range(n):
                if i != j and other.m[i][j] < z.m[i][j]:
                    z = z.constrain(i, j, other.m[i][j])
                    if z.empty:
                        return z
        return z

    def up(self) -> "Zone":
        if self.empty:
            return self
        m = [row[:] for row in self.m]
        for i in range(1, len(m)):
            m[i][0] = INF_BOUND
        return Zone(self.clocks, m)

    def down(self) -> "Zone":
        """Time predecessors (still non-negative)."""
        if self.empty:
            return self
        m = [row[:] for row in self.m]
        n = len(m)
        for i in range(1, n):
            m[0][i] = LE_ZERO
            for j in range(1, n):
                if m[j][i] < m[0][i]:
                    m[0][i] = m[j][i]
        return Zone(self.clocks, m)

    def reset(self, clocks, value=0) -> "Zone":
        if self.empty:
            return self
        m = [row[:] for row in self.m]
        n = len(m)
        v = Fraction(value)
        for name in clocks:
            x = self.index[name]
            for j in range(n):
                m[x][j] = add((v, 1), m[0][j])
                m[j][x] = add(m[j][0], (-v, 1))
            m[x][x] = LE_ZERO
        return Zone(self.clocks, m)

    def free(self, clocks) -> "Zone":
        """Forget everything about `clocks` except non-negativity."""
        if self.empty:
            return self
        m = [row[:] for row in self.m]
        n = len(m)
        for name in clocks:
            x = self.index[name]
            for j in range(n):
                if j != x:
                    m[x][j] = INF_BOUND
                    m[j][x] = m[j][0]
            m[0][x] = LE_ZERO
        return Zone(self.clocks, m)

    def extrapolate(self, maxc) -> "Zone":
        """Classic max-constant extrapolation; `maxc` maps clock -> constant."""
        if self.empty:
            return self
        n = len(self.m)
        bounds = [0] + [maxc.get(c, 0) for c in self.clocks]
        m = [row[:] for row in self.m]
        changed = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                b = m[i][j]
                if b[0] != math.inf and b > (bounds[i], 1):
                    m[i][j] = INF_BOUND
                    changed = True
                elif b < (-bounds[j], 0):
                    m[i][j] = (-bounds[j], 0)
                    changed = True
        if not changed:
            return self
        _close(m)
        return Zone(self.clocks, m)

    def pick(self) -> dict:
        """Some valuation of the zone, preferring small integers."""
        if self.empty:
            raise ValueError("cannot pick a point of an empty zone")
        z = self
        out = {}
        for c in self.clocks:
            (lo, lo_le), (hi, hi_le) = z.interval(c)
            v = _choose(lo, lo_le, hi, hi_le)
            out[c] = v
            z = z.constrain_atom(c, "==", v)
            assert not z.empty
        return out

    def __repr__(self):
        if self.empty:
            return "Zone(empty)"
        parts = []
        names = ("0",) + self.clocks
        n = len(self.m)
        for i in range(n):
            for j in range(n):
                v, le = self.m[i][j]
                if i != j and v != math.inf:
                    if j == 0:
                        parts.append(f"{names[i]}{'<=' if le else '<'}{v}")
                    elif i == 0:
                        parts.append(f"{names[j]}{'>=' if le else '>'}{-v}")
                    else:
                        parts.append(f"{names[i]}-{names[j]}{'<=' if le else '<'}{v}")
        return "Zone(" + ", ".join(parts) + ")"


def _choose(lo, lo_le, hi, hi_le):
    def ok(v):
        above = v > lo or (v == lo and lo_le)
        below = hi == math.inf or v < hi or (v == hi and hi_le)
        return above and below

    cand = Fraction(math.ceil(lo))
    if ok(cand):
        return cand
    if ok(cand + 1):
        return cand + 1
    if hi == math.inf:
        return Fraction(lo) + 1
    return (Fraction(lo) + Fraction(hi)) / 2
