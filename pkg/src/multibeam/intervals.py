"""Closed arcs on the circle of circumference 2*pi and their finite unions."""

from __future__ import annotations

import math
from typing import Iterable

TWO_PI = 2.0 * math.pi


def wrap_angle(phi: float) -> float:
    """Map ``phi`` into [-pi, pi)."""
    w = (phi + math.pi) % TWO_PI - math.pi
    # float modulo can land exactly on +pi
    return -math.pi if w >= math.pi else w


class CyclicIntervalSet:
    """A union of closed arcs in canonical form.

    Each arc is ``(start, end)`` with ``start`` in [-pi, pi) and
    ``0 <= end - start < 2*pi``; ``end`` may exceed pi for arcs that wrap.
    Arcs are sorted by start and pairwise disjoint. The full circle is the
    single arc ``(-pi, pi)`` flagged by :attr:`is_full`.
    """

    __slots__ = ("arcs", "is_full")

    def __init__(self, arcs: Iterable[tuple] = (), *, full: bool = False):
        if full:
            self.arcs = ((-math.pi, math.pi),)
            self.is_full = True
            return
        merged, is_full = _canonical(list(arcs))
        self.is_full = is_full
        self.arcs = ((-math.pi, math.pi),) if is_full else tuple(merged)

    @classmethod
    def full(cls) -> "CyclicIntervalSet":
        return cls(full=True)

    @classmethod
    def empty(cls) -> "CyclicIntervalSet":
        return cls()

    @classmethod
    def arc(cls, start: float, end: float) -> "CyclicIntervalSet":
        """Arc running counter-clockwise from ``start`` to ``end`` (``end >= start``)."""
        if end < start:
            raise ValueError("arc end precedes its start")
        if end - start >= TWO_PI:
            return cls.full()
        s = wrap_angle(start)
        return cls([(s, s + (end - start))])

    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @property
    def measure(self) -> float:
        if self.is_full:
            return TWO_PI
        return sum(e - s for s, e in self.arcs)

    def contains(self, phi: float, tol: float = 0.0) -> bool:
        if self.is_full:
            return True
        for s, e in self.arcs:
            offset = (phi - s) % TWO_PI
            if offset <= (e - s) + tol or TWO_PI - offset <= tol:
                return True
        return False

    __contains__ = contains

    def endpoints(self) -> list:
        """Boundary points wrapped to [-pi, pi); empty for FULL and EMPTY sets."""
        if self.is_full:
            return []
        pts = []
        for s, e in self.arcs:
            pts.append(s)
            if e != s:
                pts.append(wrap_angle(e))
        return pts

    def intersection(self, other: "CyclicIntervalSet") -> "CyclicIntervalSet":
        if self.is_full:
            return other
        if other.is_full:
            return self
        pieces = []
        for s1, e1 in self.arcs:
            for s2, e2 in other.arcs:
                for k in (-1, 0, 1):
                    lo = max(s1, s2 + k * TWO_PI)
                    hi = min(e1, e2 + k * TWO_PI)
                    if lo <= hi:
                        pieces.append((lo, hi))
        return CyclicIntervalSet(pieces)

    def union(self, other: "CyclicIntervalSet") -> "CyclicIntervalSet":
        if self.is_full or other.is_full:
            return CyclicIntervalSet.full()
        return CyclicIntervalSet(self.arcs + other.arcs)

    __and__ = intersection
    __or__ = union

    def isclose(self, other: "CyclicIntervalSet", atol: float = 1e-12) -> bool:
        if self.is_full or other.is_full:
            return self.is_full == other.is_full
        if len(self.arcs) != len(other.arcs):
            return False
        return all(abs(a - c) <= atol and abs(b - d) <= atol
                   for (a, b), (c, d) in zip(self.arcs, other.arcs))

    def __eq__(self, other):
        if not isinstance(other, CyclicIntervalSet):
            return NotImplemented
        return self.is_full == other.is_full and self.arcs == other.arcs

    def __hash__(self):
        return hash((self.is_full, self.arcs))

    def __repr__(self):
        if self.is_full:
            return "CyclicIntervalSet(FULL)"
        if self.is_empty:
            return "CyclicIntervalSet(EMPTY)"
        body = ", ".join(f"[{s:.6g}, {e:.6g}]" for s, e in self.arcs)
        return f"CyclicIntervalSet({body})"


def _canonical(pieces):
    """Wrap starts, sort, merge overlaps including across the seam."""
    arcs = []
    for s, e in pieces:
        length = e - s
        if length < 0:
            raise ValueError(f"arc ({s}, {e}) has negative length")
        if length >= TWO_PI:
            return [], True
        s_w = wrap_angle(s)
        arcs.append((s_w, s_w + length) if s_w != s else (s, e))
    if not arcs:
        return [], False
    arcs.sort()
    merged = [list(arcs[0])]
    for s, e in arcs[1:]:
        if s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    # the last arc may run past +pi into the first ones
    while len(merged) > 1 and merged[-1][1] >= merged[0][0] + TWO_PI:
        first = merged.pop(0)
        merged[-1][1] = max(merged[-1][1], first[1] + TWO_PI)
    if merged[-1][1] - merged[-1][0] >= TWO_PI:
        return [], True
    if len(merged) == 1 and merged[0][1] - merged[0][0] >= TWO_PI:
        return [], True
    return [tuple(a) for a in merged], False
