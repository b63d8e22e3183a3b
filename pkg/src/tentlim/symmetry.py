"""Symmetric, quasi-symmetric and link-symmetric windows of folding patterns.

A window is a closed range ``[i, j]`` of entries of a source pattern.  Every
entry carries the link of its level; maximal runs of consecutive entries in
one link stand in for the arc-components of an arc inside a link, and the
*tip-midpoint* of a run is its entry of highest level.

Quasi-symmetry of ``[i, j]`` (both endpoints in link ``L``):

* the level sequence is not a palindrome;
* removing the end runs of ``L``-entries inside the window leaves a
  non-empty palindrome (its centre is the midpoint);
* growing the window by the full ``L``-runs around both endpoints (in the
  source) does not give a palindrome.

Chains of quasi-symmetric windows are followed node by node: if
``[a, x]`` is quasi-symmetric with midpoint ``b`` and the run of ``a``
ends at ``e``, the palindromic core is ``[e + 1, 2b - e - 1]``, so the run
holding ``x`` must start exactly at ``2b - e``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chains import LinkAssignment
from .folding import INF


class SymmetryError(ValueError):
    """A precondition of a symmetry query does not hold."""


class SymmetryClass(enum.Enum):
    P_SYMMETRIC = "p_symmetric"
    QUASI_P_SYMMETRIC = "quasi_p_symmetric"
    BASIC_QUASI = "basic_quasi"
    LINK_SYMMETRIC_ONLY = "link_symmetric_only"
    DECREASING_QUASI = "decreasing_quasi"
    INCREASING_QUASI = "increasing_quasi"
    MAXIMAL_DECREASING = "maximal_decreasing"
    MAXIMAL_INCREASING = "maximal_increasing"
    CONCAT_INC_DEC = "concat_inc_dec"
    NONE = "none"
    INCONCLUSIVE = "inconclusive"


class Source:
    """A level sequence with per-entry links and precomputed link runs."""

    def __init__(self, levels: Sequence[int] | np.ndarray, links: LinkAssignment | Sequence[int] | dict):
        lv = np.asarray(levels, dtype=np.int64)
        self.levels = lv
        self.n = len(lv)
        if isinstance(links, LinkAssignment):
            table = np.asarray(links.links, dtype=np.int64)
            finite = lv[lv != INF]
            if len(finite) and finite.max() > links.depth:
                raise SymmetryError(f"level {int(finite.max())} beyond the link assignment")
            lk = np.where(lv == INF, -1, table[np.where(lv == INF, 0, lv)])
        elif isinstance(links, dict):
            lk = np.array([-1 if x == INF else links[int(x)] for x in lv], dtype=np.int64)
        else:
            lk = np.asarray(links, dtype=np.int64)
            if len(lk) != len(lv):
                raise SymmetryError("per-entry links must match the levels")
        self.links = lk
        change = np.flatnonzero(np.diff(lk) != 0) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change - 1, [self.n - 1]))
        self.run_of = np.repeat(np.arange(len(starts)), ends - starts + 1)
        self.run_start = starts
        self.run_end = ends
        top = np.empty(len(starts), dtype=np.int64)
        for k, (a, b) in enumerate(zip(starts.tolist(), ends.tolist())):
            top[k] = a + int(np.argmax(lv[a:b + 1]))
        self.run_top = top
        self._lv = lv.tolist()
        self._lk = lk.tolist()

    def level(self, i: int) -> int:
        return self._lv[i]

    def link(self, i: int) -> int:
        return self._lk[i]

    def palindrome(self, i: int, j: int) -> bool:
        lv = self._lv
        while i < j:
            if lv[i] != lv[j]:
                return False
            i += 1
            j -= 1
        return True

    def run_bounds(self, i: int) -> tuple[int, int]:
        k = self.run_of[i]
        return int(self.run_start[k]), int(self.run_end[k])

    def tip_midpoint(self, i: int, lo: int = 0, hi: int | None = None) -> int:
        """Highest entry of the run through ``i``, restricted to ``[lo, hi]``."""
        a, b = self.run_bounds(i)
        hi = self.n - 1 if hi is None else hi
        a, b = max(a, lo), min(b, hi)
        return a + int(np.argmax(self.levels[a:b + 1]))


@dataclass(frozen=True)
class ArcWindow:
    source: Source
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end < self.source.n:
            raise SymmetryError(f"window [{self.start}, {self.end}] outside the source")
        if INF in self.source.levels[self.start:self.end + 1]:
            raise SymmetryError("windows must not contain the anchor")

    @property
    def levels(self) -> list[int]:
        return self.source.levels[self.start:self.end + 1].tolist()


def _bounds(w: ArcWindow) -> tuple[Source, int, int]:
    return w.source, w.start, w.end


# --- plain symmetry --------------------------------------------------------------


def is_p_symmetric(w: ArcWindow) -> tuple[bool, int | None]:
    """Palindrome test; the midpoint is returned for palindromes."""
    src, i, j = _bounds(w)
    if src.palindrome(i, j) and (j - i) % 2 == 0:
        return True, (i + j) // 2
    return False, None


@dataclass(frozen=True)
class QuasiResult:
    ok: bool
    midpoint: int | None = None
    core: tuple[int, int] | None = None
    reason: str = ""
    at_edge: bool = False

    def __bool__(self) -> bool:
        return self.ok


def quasi(src: Source, i: int, j: int) -> QuasiResult:
    if i >= j:
        return QuasiResult(False, reason="fewer than two entries")
    if src.palindrome(i, j):
        return QuasiResult(False, reason="p-symmetric")
    if src.link(i) != src.link(j):
        return QuasiResult(False, reason="endpoints in different links")
    ri0, ri1 = src.run_bounds(i)
    rj0, rj1 = src.run_bounds(j)
    e = min(ri1, j)
    f = max(rj0, i)
    if e + 1 > f - 1:
        return QuasiResult(False, reason="single link")
    if not src.palindrome(e + 1, f - 1) or (f - e) % 2 != 0:
        return QuasiResult(False, reason="core is not symmetric")
    a0, b0 = min(i, ri0), max(j, rj1)
    edge = a0 == 0 or b0 == src.n - 1
    if src.palindrome(a0, b0):
        return QuasiResult(False, reason="extends to a symmetric arc within the link", at_edge=edge)
    return QuasiResult(True, (e + f) // 2, (e + 1, f - 1), at_edge=edge)


def is_quasi_p_symmetric(w: ArcWindow) -> bool:
    return quasi(*_bounds(w)).ok


def basic(src: Source, i: int, j: int, q: QuasiResult | None = None) -> bool:
    q = q or quasi(src, i, j)
    if not q.ok:
        raise SymmetryError("basic-ness is only defined for quasi-symmetric windows")
    m = q.midpoint
    for w in range(i + 1, m + 1):
        if quasi(src, i, w).ok:
            return False
    for w in range(m, j):
        if quasi(src, w, j).ok:
            return False
    return True


def is_basic_quasi(w: ArcWindow) -> bool:
    return basic(*_bounds(w))


def link_itinerary(src: Source, i: int, j: int) -> list[int]:
    """Links visited between entries ``i`` and ``j``, repeats collapsed.

    The projection runs monotonically between consecutive p-points, so
    consecutive entries are joined by every link index in between.
    """
    out = [src.link(i)]
    for k in range(i + 1, j + 1):
        a, b = out[-1], src.link(k)
        step = 1 if b > a else -1
        for x in range(a + step, b + step, step) if a != b else ():
            out.append(x)
    return out


def link_turns(src: Source, i: int, j: int) -> list[int]:
    """Start, turning links and end of the link itinerary.

    The itinerary moves by single link steps, so it is determined by these
    values and is a palindrome exactly when they are.
    """
    lk = src._lk
    out = [lk[i]]
    direction = 0
    for k in range(i + 1, j + 1):
        b = lk[k]
        if b == out[-1]:
            continue
        d = 1 if b > out[-1] else -1
        if d == direction:
            out[-1] = b
        else:
            out.append(b)
            direction = d
    return out


def is_link_symmetric(w: ArcWindow) -> bool:
    t = link_turns(*_bounds(w))
    return t == t[::-1]


def single_link(src: Source, i: int, j: int) -> bool:
    return src.run_of[i] == src.run_of[j]


# --- chains of quasi-symmetric windows --------------------------------------------


@dataclass(frozen=True)
class QuasiChain:
    direction: str  # "decreasing" | "increasing"
    nodes: tuple[int, ...]

    def levels(self, src: Source) -> list[int]:
        return [src.level(x) for x in self.nodes]


class _Edge(Exception):
    pass


def _next_right(src: Source, a: int, b: int) -> int | None:
    """``x`` with ``[a, x]`` quasi-symmetric and midpoint ``b`` (``a < b``)."""
    _, e = src.run_bounds(a)
    if e >= b:
        return None
    q = 2 * b - e
    if q >= src.n:
        raise _Edge()
    if src.level(q) == INF or src.link(q) != src.link(a):
        return None
    s0, s1 = src.run_bounds(q)
    if s0 != q:
        return None
    if s1 == src.n - 1:
        raise _Edge()
    x = src.tip_midpoint(q)
    r = quasi(src, a, x)
    if r.ok and r.midpoint == b:
        return x
    return None


def _next_left(src: Source, a: int, b: int) -> int | None:
    """``x`` with ``[x, a]`` quasi-symmetric and midpoint ``b`` (``b < a``)."""
    s, _ = src.run_bounds(a)
    if s <= b:
        return None
    q = 2 * b - s
    if q < 0:
        raise _Edge()
    if src.level(q) == INF or src.link(q) != src.link(a):
        return None
    r0, r1 = src.run_bounds(q)
    if r1 != q:
        return None
    if r0 == 0:
        raise _Edge()
    x = src.tip_midpoint(q)
    r = quasi(src, x, a)
    if r.ok and r.midpoint == b:
        return x
    return None


def _monotone(levels: list[int]) -> str | None:
    if all(a > b for a, b in zip(levels, levels[1:])):
        return "decreasing"
    if all(a < b for a, b in zip(levels, levels[1:])):
        return "increasing"
    return None


def decompose_quasi_chain(w: ArcWindow) -> QuasiChain | None:
    """Nodes ``x^1 < ... < x^n`` covering the window, or ``None``.

    ``[x^{i-1}, x^{i+1}]`` is quasi-symmetric with midpoint ``x^i``, node
    levels are strictly monotone, the window starts in the run of ``x^1``
    and ends in the run of ``x^n``.  Every quasi-symmetric window starting
    at ``x^1`` inside ``w`` is tried as the first piece; later nodes are
    forced.
    """
    src, i, j = _bounds(w)
    x1 = src.tip_midpoint(i, i, j)
    target_run = src.run_of[j]
    L = src.link(x1)
    k = src.run_of[x1] + 1
    while k <= target_run:
        if src.links[src.run_start[k]] == L:
            x3 = src.tip_midpoint(int(src.run_start[k]), i, j)
            r = quasi(src, x1, x3)
            if r.ok:
                nodes = [x1, r.midpoint, x3]
                direction = _monotone([src.level(x) for x in nodes])
                if direction:
                    chain = _follow(src, nodes, direction, j)
                    if chain is not None and src.run_of[chain[-1]] == target_run:
                        return QuasiChain(direction, tuple(chain))
        k += 1
    return None


def _follow(src: Source, nodes: list[int], direction: str, limit: int) -> list[int] | None:
    nodes = list(nodes)
    while True:
        try:
            x = _next_right(src, nodes[-2], nodes[-1])
        except _Edge:
            return nodes
        if x is None or x > limit:
            return nodes
        if _monotone([src.level(nodes[-1]), src.level(x)]) != direction:
            return nodes
        nodes.append(x)


@dataclass(frozen=True)
class Extension:
    """A maximal chain of quasi-symmetric windows around a given one."""

    direction: str
    nodes: tuple[int, ...]
    start: int
    end: int
    extended_start: int | None
    inconclusive: bool

    @property
    def window(self) -> tuple[int, int]:
        return (self.extended_start if self.extended_start is not None else self.start, self.end)


def maximal_extension(w: ArcWindow) -> Extension:
    """Grow a quasi-symmetric window into a maximal monotone chain.

    The endpoints are first moved to the tip-midpoints of their runs.
    Nodes are added on both sides while the forced next node exists and
    keeps the levels monotone.  ``extended_start`` is the mirror image of
    the second node across the first when that mirrored window is a
    palindrome (with the mirrored end for increasing chains).
    """
    src, i, j = _bounds(w)
    q = quasi(src, i, j)
    if not q.ok:
        raise SymmetryError(f"not quasi-symmetric: {q.reason}")
    u, v = src.tip_midpoint(i), src.tip_midpoint(j)
    m = q.midpoint
    if not quasi(src, u, v).ok:
        u, v = src.tip_midpoint(i, i, j), src.tip_midpoint(j, i, j)
    direction = _monotone([src.level(u), src.level(m), src.level(v)])
    if direction is None:
        direction = "decreasing" if src.level(u) > src.level(v) else "increasing"
        return Extension(direction, (u, m, v), u, v, None, q.at_edge)
    nodes = [u, m, v]
    hit_edge = q.at_edge
    while True:
        try:
            x = _next_right(src, nodes[-2], nodes[-1])
        except _Edge:
            hit_edge = True
            break
        if x is None or _monotone([src.level(nodes[-1]), src.level(x)]) != direction:
            break
        nodes.append(x)
    while True:
        try:
            x = _next_left(src, nodes[1], nodes[0])
        except _Edge:
            hit_edge = True
            break
        if x is None or _monotone([src.level(x), src.level(nodes[0])]) != direction:
            break
        nodes.insert(0, x)
    ext = None
    if direction == "decreasing":
        mirror = 2 * nodes[0] - nodes[1]
        if mirror < 0:
            hit_edge = True
        elif src.palindrome(mirror, nodes[1]):
            ext = mirror
    else:
        mirror = 2 * nodes[-1] - nodes[-2]
        if mirror >= src.n:
            hit_edge = True
        elif src.palindrome(nodes[-2], mirror):
            return Extension(direction, tuple(nodes), nodes[0], mirror, None, hit_edge)
    return Extension(direction, tuple(nodes), nodes[0], nodes[-1], ext, hit_edge)


# --- extension propositions --------------------------------------------------------


def _check_basic_tips(src: Source, i: int, j: int) -> QuasiResult:
    q = quasi(src, i, j)
    if not q.ok:
        raise SymmetryError(f"not quasi-symmetric: {q.reason}")
    if single_link(src, i, j):
        raise SymmetryError("window lies in a single link")
    if src.tip_midpoint(i) != i or src.tip_midpoint(j) != j:
        raise SymmetryError("endpoints must be tip-midpoints")
    if not basic(src, i, j, q):
        raise SymmetryError("window is not basic")
    return q


def extend_high(w: ArcWindow) -> int | None:
    """``m'`` beyond the higher endpoint ``x`` with ``[m, m']`` (or ``[m', m]``)
    symmetric or quasi-symmetric with midpoint ``x``; ``None`` if not found."""
    src, i, j = _bounds(w)
    q = _check_basic_tips(src, i, j)
    m = q.midpoint
    if src.level(i) == src.level(j):
        raise SymmetryError("endpoints have equal levels")
    x = i if src.level(i) > src.level(j) else j
    mirror = 2 * x - m
    if 0 <= mirror < src.n:
        lo, hi = sorted((mirror, m))
        if src.palindrome(lo, hi):
            return mirror
    rng = range(x - 1, -1, -1) if x < m else range(x + 1, src.n)
    for y in rng:
        lo, hi = sorted((y, m))
        r = quasi(src, lo, hi)
        if r.ok and r.midpoint == x:
            return y
    return None


@dataclass(frozen=True)
class Crossing:
    """A point where the arc passes straight through ``link`` between the
    entries ``before`` and ``before + 1``; it is not a p-point."""

    before: int
    link: int


def _crossing_low(src: Source, m: int, y: int) -> Crossing | None:
    # the core around y is forced to run from m's tip to the crossing
    L = src.link(m)
    if y < m:
        f = src.run_bounds(m)[0]
        k = 2 * y - f + 1
        core, before = (k, f - 1), k - 1
    else:
        e = src.run_bounds(m)[1]
        k = 2 * y - e - 1
        core, before = (e + 1, k), k
    if before < 0 or before + 1 >= src.n or core[0] > core[1]:
        return None
    a, b = src.link(before), src.link(before + 1)
    if INF in (src.level(before), src.level(before + 1)) or not min(a, b) < L < max(a, b):
        return None
    if not src.palindrome(*core) or (core[1] - core[0]) % 2:
        return None
    return Crossing(before, L)


def extend_low(w: ArcWindow) -> int | Crossing | None:
    """``a`` beyond the lower endpoint ``y`` with ``[m, a]`` quasi-symmetric
    with midpoint ``y``; ``None`` if not found.

    ``a`` is a p-point when one qualifies and otherwise a :class:`Crossing`.
    A level-0 ``y`` is a straight-through point rather than a turn, and no
    such ``a`` exists for it.
    """
    src, i, j = _bounds(w)
    q = _check_basic_tips(src, i, j)
    m = q.midpoint
    if src.level(i) == src.level(j):
        raise SymmetryError("endpoints have equal levels")
    y = j if src.level(i) > src.level(j) else i
    rng = range(y + 1, src.n) if y > m else range(y - 1, -1, -1)
    for a in rng:
        lo, hi = sorted((a, m))
        r = quasi(src, lo, hi)
        if r.ok and r.midpoint == y:
            return a
    return _crossing_low(src, m, y)


# --- classification ---------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    cls: SymmetryClass
    nodes: tuple[int, ...] = ()
    witness: tuple[int, int] | None = None
    normalized: tuple[int, int] | None = None
    note: str = ""

    def to_json(self) -> dict:
        return {"class": self.cls.value, "nodes": list(self.nodes),
                "witness": list(self.witness) if self.witness else None,
                "normalized": list(self.normalized) if self.normalized else None,
                "note": self.note}


def classify_window(w: ArcWindow) -> Classification:
    """Most specific class of a window (used for single queries)."""
    src, i, j = _bounds(w)
    sym, mid = is_p_symmetric(w)
    if sym:
        return Classification(SymmetryClass.P_SYMMETRIC, (mid,), (i, j))
    q = quasi(src, i, j)
    if q.ok:
        cls = SymmetryClass.BASIC_QUASI if basic(src, i, j, q) else SymmetryClass.QUASI_P_SYMMETRIC
        return Classification(cls, (q.midpoint,), (i, j))
    chain = decompose_quasi_chain(w)
    if chain is not None:
        cls = SymmetryClass.DECREASING_QUASI if chain.direction == "decreasing" else SymmetryClass.INCREASING_QUASI
        return Classification(cls, chain.nodes, (i, j))
    if is_link_symmetric(w):
        return Classification(SymmetryClass.LINK_SYMMETRIC_ONLY, (), (i, j))
    return Classification(SymmetryClass.NONE)


def _contains(outer: tuple[int, int], inner: tuple[int, int]) -> bool:
    return outer[0] <= inner[0] and inner[1] <= outer[1]


def _palindrome_around(src: Source, c: int) -> tuple[int, int, bool]:
    k = 0
    while c - k - 1 >= 0 and c + k + 1 < src.n and src.level(c - k - 1) == src.level(c + k + 1) \
            and src.level(c - k - 1) != INF:
        k += 1
    edge = c - k - 1 < 0 or c + k + 1 >= src.n
    return c - k, c + k, edge


def classify_link_symmetric(w: ArcWindow) -> Classification:
    """One of the three outcomes for a link-symmetric window.

    The endpoints are moved to the tip-midpoints of their runs first.  The
    window is then ``P_SYMMETRIC``, lies in an extended maximal monotone
    chain (``MAXIMAL_DECREASING`` / ``MAXIMAL_INCREASING``), or lies in a
    palindrome around the top node of such a chain (``CONCAT_INC_DEC``).
    ``INCONCLUSIVE`` marks windows whose witness would need data beyond the
    source; ``NONE`` would be a conclusive counterexample.
    """
    src, i, j = _bounds(w)
    if not is_link_symmetric(w):
        raise SymmetryError("window is not link-symmetric")
    if src.palindrome(i, j):
        return Classification(SymmetryClass.P_SYMMETRIC, ((i + j) // 2,), (i, j), (i, j))
    u, v = src.tip_midpoint(i, i, j), src.tip_midpoint(j, i, j)
    if u >= v or single_link(src, u, v):
        return Classification(SymmetryClass.P_SYMMETRIC, (u,), (u, u), (u, u), "single link run")
    norm = (u, v)
    if src.palindrome(u, v):
        return Classification(SymmetryClass.P_SYMMETRIC, ((u + v) // 2,), norm, norm)
    a0, b0 = src.run_bounds(u)[0], src.run_bounds(v)[1]
    if src.palindrome(a0, b0):
        return Classification(SymmetryClass.P_SYMMETRIC, ((a0 + b0) // 2,), (a0, b0), norm,
                              "symmetric once the link-tips are completed")
    start_q = _first_mismatch(src, u, v)
    if start_q is not None and not quasi(src, *start_q).ok:
        start_q = None
    if start_q is None:
        # fall back to any quasi-symmetric window inside the normalized one
        # that shares the link of the endpoints around the top entry
        start_q = _any_quasi_inside(src, u, v)
    if start_q is None:
        return Classification(SymmetryClass.NONE, (), None, norm, "no quasi-symmetric piece found")
    ext = maximal_extension(ArcWindow(src, *start_q))
    ew = ext.window
    if _contains(ew, norm):
        cls = SymmetryClass.MAXIMAL_DECREASING if ext.direction == "decreasing" else SymmetryClass.MAXIMAL_INCREASING
        return Classification(cls, ext.nodes, ew, norm)
    top = max(ext.nodes, key=src.level)
    a, b, edge = _palindrome_around(src, top)
    if _contains((a, b), norm):
        return Classification(SymmetryClass.CONCAT_INC_DEC, ext.nodes, (a, b), norm)
    if ext.inconclusive or edge:
        return Classification(SymmetryClass.INCONCLUSIVE, ext.nodes, ew, norm, "witness reaches the edge of the data")
    return Classification(SymmetryClass.NONE, ext.nodes, ew, norm, "no containing arc found")


def _first_mismatch(src: Source, u: int, v: int) -> tuple[int, int] | None:
    """Tip-midpoints of the innermost pair of mirrored runs that differ.

    Runs are compared whole (one reversed), counting outwards from the
    middle run; ``None`` if the number of runs is even.
    """
    r0, r1 = int(src.run_of[u]), int(src.run_of[v])
    if (r1 - r0) % 2:
        return None
    mid = (r0 + r1) // 2

    def run(k):
        a = max(int(src.run_start[k]), u)
        b = min(int(src.run_end[k]), v)
        return a, b

    for k in range(1, mid - r0 + 1):
        (a0, a1), (b0, b1) = run(mid - k), run(mid + k)
        left = src._lv[a0:a1 + 1]
        right = src._lv[b0:b1 + 1]
        if left != right[::-1]:
            return src.tip_midpoint(a0, u, v), src.tip_midpoint(b0, u, v)
    return None


def _any_quasi_inside(src: Source, u: int, v: int) -> tuple[int, int] | None:
    L = src.link(u)
    best = None
    for a in range(u, v):
        if src.link(a) != L or src.tip_midpoint(a) != a:
            continue
        for b in range(v, a, -1):
            if src.link(b) != L or src.tip_midpoint(b) != b:
                continue
            if quasi(src, a, b).ok:
                if best is None or b - a > best[1] - best[0]:
                    best = (a, b)
                break
    return best


def link_symmetric_windows(src: Source, max_len: int, lo: int = 0, hi: int | None = None):
    """All link-symmetric windows ``[i, j]`` with ``j - i + 1 <= max_len``."""
    hi = src.n if hi is None else hi
    for i in range(lo, hi):
        if src.level(i) == INF:
            continue
        for j in range(i, min(i + max_len, hi)):
            if src.level(j) == INF:
                break
            if src.link(i) != src.link(j):
                continue
            t = link_turns(src, i, j)
            if t == t[::-1]:
                yield i, j
