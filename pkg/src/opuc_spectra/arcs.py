"""Finite unions of closed arcs on the unit circle.

Arcs are stored as ``(lo, hi)`` with ``lo`` in ``[0, 2 pi)`` and
``lo <= hi <= lo + 2 pi``; an arc with ``hi > 2 pi`` wraps through angle 0.
Normalized sets are sorted by ``lo``, pairwise disjoint, and touching arcs
are merged.  The full circle is the single arc ``(0, 2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def _linear_pieces(arcs):
    pieces = []
    for lo, hi in arcs:
        length = hi - lo
        if length < 0:
            continue
        if length >= TWO_PI:
            return [(0.0, TWO_PI)]
        lo = math.fmod(lo, TWO_PI)
        if lo < 0:
            lo += TWO_PI
        hi = lo + length
        if hi <= TWO_PI:
            pieces.append((lo, hi))
        else:
            pieces.append((lo, TWO_PI))
            pieces.append((0.0, hi - TWO_PI))
    return _merge(pieces)


def _merge(pieces):
    pieces = sorted(pieces)
    out = []
    for lo, hi in pieces:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _join_wrap(pieces):
    if not pieces:
        return ()
    if len(pieces) == 1 and pieces[0][0] <= 0.0 and pieces[0][1] >= TWO_PI:
        return ((0.0, TWO_PI),)
    if len(pieces) > 1 and pieces[0][0] <= 0.0 and pieces[-1][1] >= TWO_PI:
        first = pieces[0]
        last = pieces[-1]
        middle = pieces[1:-1]
        return tuple(middle) + ((last[0], TWO_PI + first[1]),)
    return tuple(pieces)


@dataclass(frozen=True)
class ArcSet:
    arcs: tuple = ()

    def __post_init__(self):
        arcs = tuple((float(lo), float(hi)) for lo, hi in self.arcs)
        object.__setattr__(self, "arcs", tuple(sorted(_join_wrap(_linear_pieces(arcs)))))

    # ---------------------------------------------------------- constructors
    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((0.0, TWO_PI),))

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls(())

    @classmethod
    def from_json(cls, obj) -> "ArcSet":
        return cls(tuple(tuple(a) for a in obj["arcs"]))

    def to_json(self) -> dict:
        return {"arcs": [[lo, hi] for lo, hi in self.arcs]}

    # ------------------------------------------------------------ properties
    @property
    def is_empty(self) -> bool:
        return not self.arcs

    @property
    def is_full(self) -> bool:
        return self.arcs == ((0.0, TWO_PI),)

    def pieces(self):
        """Non-wrapping closed intervals in ``[0, 2 pi]`` covering the set."""
        return _linear_pieces(self.arcs)

    def measure(self) -> float:
        return math.fsum(hi - lo for lo, hi in self.arcs)

    def endpoints(self):
        return [x for arc in self.arcs for x in arc]

    def __len__(self):
        return len(self.arcs)

    def __iter__(self):
        return iter(self.arcs)

    # ------------------------------------------------------------ operations
    def union(self, other: "ArcSet") -> "ArcSet":
        return ArcSet(self.arcs + other.arcs)

    def intersect(self, other: "ArcSet") -> "ArcSet":
        out = []
        for lo1, hi1 in self.pieces():
            for lo2, hi2 in other.pieces():
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if lo <= hi:
                    out.append((lo, hi))
        return ArcSet(tuple(out))

    def complement(self) -> "ArcSet":
        """Closure of the complement."""
        pieces = self.pieces()
        if not pieces:
            return ArcSet.full()
        gaps = []
        cursor = 0.0
        for lo, hi in pieces:
            if lo > cursor:
                gaps.append((cursor, lo))
            cursor = max(cursor, hi)
        if cursor < TWO_PI:
            gaps.append((cursor, TWO_PI))
        return ArcSet(tuple(gaps))

    def contains(self, theta: float, tol: float = 0.0) -> bool:
        t = math.fmod(theta, TWO_PI)
        if t < 0:
            t += TWO_PI
        for lo, hi in self.pieces():
            if lo - tol <= t <= hi + tol or lo - tol <= t + TWO_PI <= hi + tol or lo - tol <= t - TWO_PI <= hi + tol:
                return True
        return False

    def is_subset(self, other: "ArcSet", tol: float = 1e-12) -> bool:
        for lo1, hi1 in self.pieces():
            if not any(lo2 - tol <= lo1 and hi1 <= hi2 + tol for lo2, hi2 in _widen(other.pieces())):
                return False
        return True

    def symmetric_difference_measure(self, other: "ArcSet") -> float:
        return self.union(other).measure() - self.intersect(other).measure()

    def endpoint_distance(self, other: "ArcSet") -> float:
        """Max circular distance between matched endpoints (inf if the arc counts differ)."""
        if len(self) != len(other):
            return math.inf
        if self.is_full and other.is_full:
            return 0.0
        worst = 0.0
        for (lo1, hi1), (lo2, hi2) in zip(self.arcs, other.arcs):
            for x, y in ((lo1, lo2), (hi1, hi2)):
                dx = abs(math.remainder(x - y, TWO_PI))
                worst = max(worst, dx)
        return worst

    def grid(self, n: int, index: int = 0, interior: float = 0.0) -> np.ndarray:
        """``n`` angles across arc ``index``, continuous through 0 for wrapping arcs.

        ``interior`` shrinks the arc by that amount at both ends.
        """
        lo, hi = self.arcs[index]
        return np.linspace(lo + interior, hi - interior, n)


def _widen(pieces):
    # a closed piece ending at 2 pi also covers angle 0 and vice versa
    out = list(pieces)
    for lo, hi in pieces:
        if hi >= TWO_PI:
            out.append((lo - TWO_PI, hi - TWO_PI))
        if lo <= 0.0:
            out.append((lo + TWO_PI, hi + TWO_PI))
    return out


def arc(lo: float, hi: float) -> ArcSet:
    return ArcSet(((lo, hi),))


def arc_set_ops(a: ArcSet, b, op: str):
    """Dispatch ``intersect``/``union``/``complement``/``contains`` (``b`` is an angle for contains)."""
    if op == "intersect":
        return a.intersect(b)
    if op == "union":
        return a.union(b)
    if op == "complement":
        return a.complement()
    if op == "contains":
        return a.contains(b)
    raise ValueError(f"unknown arc-set operation {op!r}")


def from_mask(theta, mask) -> ArcSet:
    """Closed arcs spanned by runs of True in ``mask`` over an ordered ``theta`` grid."""
    theta = np.asarray(theta, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    arcs = []
    i = 0
    n = len(theta)
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            arcs.append((theta[i], theta[j]))
            i = j + 1
        else:
            i += 1
    return ArcSet(tuple(arcs))
