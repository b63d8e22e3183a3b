"""Folding patterns of the arc-components ``C0`` and ``R``.

A folding pattern is stored as an ``int64`` array of levels with ``-1``
standing for the infinite level of the anchor (``0bar`` for ``C0``,
``rho`` for ``R``).  Applying the shift adds one to every level; a new
level-0 point appears inside a gap exactly when the gap's projection
covers ``c`` after the shift:

* a finite gap with flanks ``a, b`` projects onto ``D_n`` (``n = max(a, b)``)
  or onto ``[c, c_n]`` when the other flank is 0; it covers ``c`` after the
  shift iff ``n + 1`` is a cutting time;
* the anchor gap of ``C0`` next to level ``x`` projects onto ``[0, c_x]``
  and covers ``c`` after the shift iff ``c_{x+1} > c``;
* an anchor gap of ``R`` projects onto ``[c_x, r]`` (or ``[r, c_x]``) and
  covers ``c`` after the shift iff ``c_{x+1} < c``.

The shift reverses orientation on ``R``, so ``R`` patterns are reversed
after each step.  Away from the anchor the rule is local and symmetric
under reversal, which lets windows be stepped on their own
(:func:`step_window`).
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kneading import CuttingTimes, KappaData, KneadingData, beta, kappa_data

INF = -1
DEFAULT_MAX_ENTRIES = 1 << 20


class PatternError(ValueError):
    """An inconsistent folding pattern was passed in."""


class PatternCapError(RuntimeError):
    """Pattern growth hit the entry cap; ``partial`` holds the last pattern."""

    def __init__(self, message: str, partial: "FoldingPattern"):
        super().__init__(message)
        self.partial = partial


def max_entries_from_env() -> int:
    raw = os.environ.get("TENTLIM_MAX_ENTRIES")
    if not raw:
        return DEFAULT_MAX_ENTRIES
    value = int(raw)
    if value <= 0:
        raise ValueError("TENTLIM_MAX_ENTRIES must be positive")
    return value


@dataclass(frozen=True)
class FoldingPattern:
    """Levels along an arc, ``-1`` marking the anchor.

    ``side`` is ``"C0"``, ``"R"`` or ``"window"`` (a piece of a pattern
    without anchor); ``steps`` counts shifts applied since the seed.
    """

    entries: np.ndarray
    side: str
    steps: int = 0

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        if self.side not in ("C0", "R", "window"):
            raise PatternError(f"unknown side {self.side!r}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def anchor(self) -> int | None:
        idx = np.flatnonzero(self.entries == INF)
        return int(idx[0]) if len(idx) else None

    def levels(self) -> list[int]:
        return self.entries.tolist()

    def text(self, start: int = 0, end: int | None = None) -> str:
        return format_levels(self.entries[start:end])

    def window(self, start: int, end: int) -> "FoldingPattern":
        """Entries ``[start, end)`` as an anchor-free window when possible."""
        part = self.entries[start:end]
        side = "window" if INF not in part else self.side
        return FoldingPattern(part, side, self.steps)

    def to_json(self, S: CuttingTimes | None = None) -> dict:
        out = {"side": self.side, "steps": self.steps,
               "entries": ["INF" if x == INF else int(x) for x in self.entries]}
        if S is not None:
            out["gaps"] = [int(g) for g in gap_labels(self, S)]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FoldingPattern":
        entries = [INF if x in ("INF", None) else int(x) for x in data["entries"]]
        return cls(np.array(entries, dtype=np.int64), data.get("side", "window"), int(data.get("steps", 0)))

    @classmethod
    def from_text(cls, text: str, side: str = "window") -> "FoldingPattern":
        return cls(parse_levels(text), side)


def parse_levels(text: str) -> np.ndarray:
    out = []
    for tok in text.replace(",", " ").split():
        if tok.upper() in ("INF", "∞"):
            out.append(INF)
        else:
            try:
                v = int(tok)
            except ValueError:
                raise PatternError(f"not a level: {tok!r}") from None
            if v < 0:
                raise PatternError(f"negative level {v}")
            out.append(v)
    return np.array(out, dtype=np.int64)


def format_levels(levels: Iterable[int]) -> str:
    return " ".join("INF" if x == INF else str(int(x)) for x in levels)


def seed_c0() -> FoldingPattern:
    return FoldingPattern(np.array([INF, 0]), "C0", 0)


def seed_r() -> FoldingPattern:
    return FoldingPattern(np.array([0, INF, 1]), "R", 0)


# --- the step ----------------------------------------------------------------


class _StepTables:
    """Lookup arrays for the insertion rule, sized to the largest level."""

    def __init__(self, kd: KneadingData):
        self.kd = kd
        self.nu = np.asarray(kd.nu.symbols, dtype=np.int8)
        top = len(self.nu)
        is_cut = np.zeros(top + 2, dtype=bool)
        for s in kd.S.s_values:
            if s <= top + 1:
                is_cut[s] = True
        self.is_cut = is_cut

    def check(self, max_level: int) -> None:
        if max_level + 1 >= len(self.nu):
            raise PatternError(f"level {max_level} exceeds the kneading horizon {len(self.nu)}")


_TABLES: dict[int, _StepTables] = {}


def _tables(kd: KneadingData) -> _StepTables:
    t = _TABLES.get(id(kd))
    if t is None or t.kd is not kd:
        t = _StepTables(kd)
        _TABLES[id(kd)] = t
    return t


def _step_array(lv: np.ndarray, side: str, tab: _StepTables) -> np.ndarray:
    if len(lv) == 0:
        return lv.copy()
    tab.check(int(lv.max()))
    new = np.where(lv >= 0, lv + 1, INF)
    if len(lv) == 1:
        return new
    a, b = lv[:-1], lv[1:]
    finite = (a >= 0) & (b >= 0)
    top = np.maximum(a, b) + 1
    ins = finite & tab.is_cut[np.where(finite, top, 0)]
    if not finite.all():
        if side == "window":
            raise PatternError("a window must not contain the anchor")
        x = np.where(a < 0, b, a)
        sym = tab.nu[np.where(finite, 0, x)]  # nu_{x+1}
        want = 1 if side == "C0" else 0
        ins |= ~finite & (sym == want)
    out = np.insert(new, np.flatnonzero(ins) + 1, 0)
    if side == "R":
        out = out[::-1].copy()
    return out


def sigma_step(fp: FoldingPattern, kd: KneadingData) -> FoldingPattern:
    """One application of the shift to a pattern."""
    return FoldingPattern(_step_array(fp.entries, fp.side, _tables(kd)), fp.side, fp.steps + 1)


def step_window(levels: Sequence[int] | np.ndarray, kd: KneadingData, times: int = 1) -> np.ndarray:
    """Step an anchor-free run of consecutive entries ``times`` times.

    The result is exactly the stretch of the stepped pattern between the
    images of the first and last entry.
    """
    arr = np.asarray(levels, dtype=np.int64)
    tab = _tables(kd)
    for _ in range(times):
        arr = _step_array(arr, "window", tab)
    return arr


def iterate(seed: FoldingPattern, kd: KneadingData, steps: int,
            max_entries: int | None = None) -> FoldingPattern:
    cap = max_entries or max_entries_from_env()
    fp = seed
    for _ in range(steps):
        nxt = sigma_step(fp, kd)
        if len(nxt) > cap:
            raise PatternCapError(f"pattern would grow to {len(nxt)} entries (cap {cap})", fp)
        fp = nxt
    return fp


def fp_c0(kd: KneadingData, n_salient: int, max_entries: int | None = None) -> FoldingPattern:
    """``FP(C0)`` stepped until it has ``n_salient`` salient points.

    After ``j`` steps the salient levels are exactly ``1..j``.
    """
    if n_salient < 0:
        raise ValueError("n_salient must be non-negative")
    fp = seed_c0()
    cap = max_entries or max_entries_from_env()
    while len(salient_indices(fp)) < n_salient:
        nxt = sigma_step(fp, kd)
        if len(nxt) > cap:
            raise PatternCapError(
                f"FP(C0) reached {len(fp)} entries with "
                f"{len(salient_indices(fp))} of {n_salient} salient points (cap {cap})", fp)
        fp = nxt
    return fp


def fp_r(kd: KneadingData, n_salient: int, max_entries: int | None = None) -> FoldingPattern:
    """``FP(R)`` stepped until both sides together hold ``n_salient`` salient points."""
    if n_salient < 0:
        raise ValueError("n_salient must be non-negative")
    fp = seed_r()
    cap = max_entries or max_entries_from_env()
    while len(salient_indices(fp)) < n_salient:
        nxt = sigma_step(fp, kd)
        if len(nxt) > cap:
            raise PatternCapError(
                f"FP(R) reached {len(fp)} entries before {n_salient} salient points (cap {cap})", fp)
        fp = nxt
    return fp


def fp_r_two_sided(kd: KneadingData, per_side: int, max_entries: int | None = None) -> FoldingPattern:
    """``FP(R)`` with at least ``per_side`` salient points on each side of ``rho``."""
    fp = seed_r()
    cap = max_entries or max_entries_from_env()
    while True:
        idx = salient_indices(fp)
        if len(idx.right) >= per_side and len(idx.left) >= per_side:
            return fp
        nxt = sigma_step(fp, kd)
        if len(nxt) > cap:
            raise PatternCapError(f"FP(R) cap {cap} hit before {per_side} salient points per side", fp)
        fp = nxt


# --- gaps and invariants -------------------------------------------------------


def gap_labels(fp: FoldingPattern, S: CuttingTimes) -> np.ndarray:
    """Label of every gap: the larger finite flank level.

    A finite gap with label ``n`` projects onto ``D_n`` when ``n`` is not a
    cutting time (then the other flank is ``beta(n)``) and onto ``[c, c_n]``
    when it is (the other flank is 0).
    """
    lv = fp.entries
    if len(lv) < 2:
        return np.zeros(0, dtype=np.int64)
    return np.maximum(lv[:-1], lv[1:])


def check_gaps(fp: FoldingPattern, S: CuttingTimes) -> list[tuple[int, str]]:
    """Flank-consistency violations as ``(gap index, reason)``."""
    bad = []
    lv = fp.entries.tolist()
    for i in range(len(lv) - 1):
        a, b = lv[i], lv[i + 1]
        if a == INF and b == INF:
            bad.append((i, "two anchors"))
            continue
        if a == INF or b == INF:
            continue
        n, m = max(a, b), min(a, b)
        if n == m:
            bad.append((i, f"equal neighbours {n}"))
        elif S.is_cutting_time(n):
            if m != 0:
                bad.append((i, f"cutting time {n} next to {m}, expected 0"))
        elif m != beta(n, S):
            bad.append((i, f"level {n} next to {m}, expected beta = {beta(n, S)}"))
    return bad


def equal_levels_separated(levels: Sequence[int] | np.ndarray) -> bool:
    """Between two equal finite levels there is always a strictly higher one.

    A monotone stack holds the levels still visible from the current
    position; meeting an equal visible level is a violation.
    """
    stack: list[int] = []
    for x in np.asarray(levels).tolist():
        if x == INF:
            stack = []
            continue
        while stack and stack[-1] < x:
            stack.pop()
        if stack and stack[-1] == x:
            return False
        stack.append(x)
    return True


def validate(fp: FoldingPattern, S: CuttingTimes) -> None:
    """Raise :class:`PatternError` naming the first violated invariant."""
    if fp.side in ("C0", "R"):
        n_anchor = int((fp.entries == INF).sum())
        if n_anchor != 1:
            raise PatternError(f"{fp.side} pattern needs exactly one anchor, has {n_anchor}")
    if fp.side == "R":
        k = fp.anchor
        if k == 0 or k == len(fp) - 1:
            raise PatternError("anchor of an R pattern must have two neighbours")
        if {int(fp.entries[k - 1]), int(fp.entries[k + 1])} != {0, 1}:
            raise PatternError("neighbours of rho must have levels 0 and 1")
    bad = check_gaps(fp, S)
    if bad:
        raise PatternError(f"gap flank consistency violated at gap {bad[0][0]}: {bad[0][1]}")
    if not equal_levels_separated(fp.entries):
        raise PatternError("two equal levels without a higher level between them")


# --- salient points ------------------------------------------------------------


@dataclass(frozen=True)
class SalientIndex:
    """Salient positions; ``right[i-1]`` is ``t^i`` and ``left[i-1]`` is ``t^{-i}``.

    For ``C0`` only ``right`` is used.
    """

    side: str
    right: tuple[int, ...]
    left: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.right) + len(self.left)

    def position(self, i: int) -> int:
        if i > 0:
            return self.right[i - 1]
        if i < 0:
            return self.left[-i - 1]
        raise IndexError("salient points are numbered from 1 (and -1)")


def _records(levels: np.ndarray) -> list[int]:
    """Positions of strict running maxima with level >= 1."""
    if len(levels) == 0:
        return []
    run = np.maximum.accumulate(levels)
    prev = np.concatenate(([0], run[:-1]))
    return np.flatnonzero((levels > prev) & (levels >= 1)).tolist()


def salient_indices(fp: FoldingPattern) -> SalientIndex:
    """Points whose level exceeds every level between them and the anchor.

    The first level-0 point next to the anchor is not counted, so that the
    ``i``-th salient point of ``C0`` has level ``i``.
    """
    k = fp.anchor
    if k is None:
        return SalientIndex(fp.side, ())
    lv = fp.entries
    right = tuple(k + 1 + i for i in _records(lv[k + 1:]))
    left = tuple(k - 1 - i for i in _records(lv[:k][::-1]))
    if fp.side == "C0":
        if left:
            raise PatternError("C0 patterns have no entries before the anchor")
        return SalientIndex("C0", right)
    return SalientIndex(fp.side, right, left)


# --- bridges -------------------------------------------------------------------


class Bridge(enum.Enum):
    FOUND = "found"
    ABSENT = "absent"
    INCONCLUSIVE = "inconclusive"


def bridge_at(levels: np.ndarray, y: int, a: int) -> Bridge:
    """Grow the palindrome around ``y`` until level ``a`` shows up.

    ``FOUND`` when both sides reach level ``a`` at the same distance,
    ``ABSENT`` when the palindrome breaks first, ``INCONCLUSIVE`` when the
    edge of the data or the anchor is hit.
    """
    n = len(levels)
    b = levels[y]
    j = 1
    while True:
        lo, hi = y - j, y + j
        if lo < 0 or hi >= n:
            return Bridge.INCONCLUSIVE
        u, v = levels[lo], levels[hi]
        if u == INF or v == INF:
            return Bridge.INCONCLUSIVE
        if u != v or u > b:
            return Bridge.ABSENT
        if u == a:
            return Bridge.FOUND
        j += 1


def bridges_exists(fp: FoldingPattern | np.ndarray, a: int, b: int) -> Bridge:
    """Search for ``x < y < z`` with levels ``a, b, a``, ``[x, z]`` a
    palindrome centred at ``y`` and no level ``a`` strictly inside."""
    if not b > a >= 0:
        raise ValueError("need b > a >= 0")
    levels = fp.entries if isinstance(fp, FoldingPattern) else np.asarray(fp)
    if isinstance(fp, FoldingPattern) and fp.side == "R":
        # rho lies inside a gap; only the p-points on either side count
        levels = levels[levels != INF]
    lv = levels.tolist()
    seen_inconclusive = False
    for y in np.flatnonzero(levels == b).tolist():
        res = bridge_at(lv, y, a)
        if res is Bridge.FOUND:
            return res
        if res is Bridge.INCONCLUSIVE:
            seen_inconclusive = True
    return Bridge.INCONCLUSIVE if seen_inconclusive else Bridge.ABSENT


def bridges_predicate(kappa: KappaData, a: int, b: int) -> bool:
    """Whether ``b - a`` lies in ``Lambda_kappa``."""
    return kappa.in_lambda(b - a)


@dataclass(frozen=True)
class BridgeScan:
    results: dict
    kappa: int

    def disagreements(self) -> list[tuple[int, int]]:
        k = KappaData(self.kappa)
        return [(a, b) for (a, b), r in self.results.items()
                if r is not Bridge.INCONCLUSIVE and (r is Bridge.FOUND) != k.in_lambda(b - a)]

    def inconclusive(self) -> list[tuple[int, int]]:
        return [ab for ab, r in self.results.items() if r is Bridge.INCONCLUSIVE]


def bridge_scan(fp: FoldingPattern, kd: KneadingData, max_level: int = 12) -> BridgeScan:
    kap = kappa_data(kd.nu)
    res = {}
    for b in range(1, max_level + 1):
        for a in range(0, b):
            res[(a, b)] = bridges_exists(fp, a, b)
    return BridgeScan(res, kap.kappa)


# --- locating deep windows ----------------------------------------------------


def find_all(levels: np.ndarray, window: Sequence[int]) -> np.ndarray:
    """Start indices of every occurrence of ``window`` in ``levels``."""
    w = np.asarray(window, dtype=np.int64)
    L = len(w)
    if L == 0 or L > len(levels):
        return np.zeros(0, dtype=np.int64)
    cand = np.flatnonzero(levels[: len(levels) - L + 1] == w[0])
    for j in range(1, L):
        if len(cand) == 0:
            break
        cand = cand[levels[cand + j] == w[j]]
    return cand


def lower(window: Sequence[int]) -> list[int]:
    """The window one shift earlier: drop level-0 entries, subtract one."""
    return [x - 1 for x in window if x > 0]


@dataclass(frozen=True)
class LocatedWindow:
    """A stretch of a generated pattern containing a requested window.

    ``context[offset:offset + len(window)]`` equals the window; ``steps``
    is the number of shifts since the seed of ``side``.
    """

    context: np.ndarray
    offset: int
    side: str
    steps: int
    window: tuple[int, ...] = field(default=())

    def pattern(self) -> FoldingPattern:
        return FoldingPattern(self.context, "window", self.steps)


def locate_window(kd: KneadingData, window: Sequence[int], side: str = "C0",
                  base_level: int = 18, margin: int = 200,
                  max_entries: int | None = None) -> LocatedWindow | None:
    """Find ``window`` (or its mirror image) in the generated pattern.

    The window is lowered until its largest level is at most
    ``base_level``; occurrences of the lowered window are located in the
    pattern after enough steps to contain them, then a stretch around each
    occurrence is stepped forward on its own, keeping ``margin`` entries of
    context on each side, until the original window appears.
    """
    w = [int(x) for x in window]
    for cand in (w, w[::-1]):
        res = _locate(kd, cand, side, base_level, margin, max_entries)
        if res is not None:
            return res
    return None


def _locate(kd, w, side, base_level, margin, max_entries):
    chain = [w]
    while chain[-1] and max(chain[-1]) > base_level:
        chain.append(lower(chain[-1]))
    low = chain[-1]
    j = len(chain) - 1
    if not low:
        return None
    seed = seed_c0() if side == "C0" else seed_r()
    base = iterate(seed, kd, max(base_level + 4, max(low) + 4), max_entries)
    arr = base.entries
    for h in find_all(arr, low).tolist():
        lo = max(h - margin, 0)
        hi = min(h + len(low) + margin, len(arr))
        piece = arr[lo:hi]
        if INF in piece:
            continue
        target = h - lo
        ok = True
        for i in range(j - 1, -1, -1):
            stepped = step_window(piece, kd)
            pos = find_all(stepped, chain[i])
            if len(pos) == 0:
                ok = False
                break
            # the occurrence nearest to where the old one went
            p = int(pos[np.argmin(np.abs(pos - 2 * target))]) if len(pos) > 1 else int(pos[0])
            lo2 = max(p - margin, 0)
            hi2 = min(p + len(chain[i]) + margin, len(stepped))
            piece = stepped[lo2:hi2]
            target = p - lo2
        if ok:
            return LocatedWindow(piece.copy(), target, side, base.steps + j, tuple(w))
    return None


def grow_context(loc: LocatedWindow, kd: KneadingData, steps: int, margin: int) -> LocatedWindow:
    """Step a located window further, keeping ``margin`` entries each side.

    The window is followed as the stretch between the images of its first
    and last entry, so it may gain inserted level-0 points.
    """
    piece = loc.context
    start, end = loc.offset, loc.offset + len(loc.window) - 1
    for _ in range(steps):
        stepped = step_window(piece, kd)
        old_pos = np.flatnonzero(stepped != 0)  # inserted points are exactly the zeros
        start, end = int(old_pos[start]), int(old_pos[end])
        lo = max(start - margin, 0)
        hi = min(end + 1 + margin, len(stepped))
        piece = stepped[lo:hi]
        start, end = start - lo, end - lo
    return LocatedWindow(piece.copy(), start, loc.side, loc.steps + steps,
                         tuple(piece[start:end + 1].tolist()))


# --- local triples -----------------------------------------------------------


def realized_triples(kd: KneadingData, depth: int, warmup: int = 8) -> set[tuple[int, int, int]]:
    """All consecutive level triples ``(a, m, b)`` of ``FP(C0)`` and ``FP(R)``
    with every level at most ``depth`` (both orientations).

    Every triple of a stepped pattern comes from stepping at most three
    consecutive entries, so the closure of the triples of the first few
    patterns under :func:`step_window` (with the anchor rule for anchored
    triples) is complete.  Triples containing the anchor are kept with
    ``INF`` so that the closure can follow them.
    """
    tab = _tables(kd)
    todo: list[tuple[tuple[int, int, int], str]] = []
    seen: set[tuple[tuple[int, int, int], str]] = set()

    def add_from(arr, side):
        lv = arr.tolist()
        for i in range(len(lv) - 2):
            t = (lv[i], lv[i + 1], lv[i + 2])
            if max(t) > depth:
                continue
            sd = side if INF in t else "window"
            key = (t, sd)
            if key not in seen:
                seen.add(key)
                todo.append(key)

    for seed in (seed_c0(), seed_r()):
        fp = seed
        for _ in range(warmup):
            fp = sigma_step(fp, kd)
            add_from(fp.entries, fp.side)
    while todo:
        t, sd = todo.pop()
        add_from(_step_array(np.array(t, dtype=np.int64), sd, tab), sd)
    out = set()
    for t, _ in seen:
        if INF in t:
            continue
        out.add(t)
        out.add(t[::-1])
    return out
