"""Chains of ``[0, s/2]`` pulled back along the projection ``pi_p``.

A chain is given by boundary points ``g_0 < ... < g_N``.  Odd links are the
open intervals ``(g_m, g_{m+1})`` and even links are the ``delta``-balls
around the ``g_m``; link ``2m + 1`` sits between balls ``2m`` and ``2m + 2``.
A p-point of level ``n`` projects to ``c_n``, so its link is the link
containing ``c_n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .folding import INF, FoldingPattern, realized_triples
from .kneading import CuttingTimes, HorizonError, KneadingData, beta
from .numeric import C, TentParams, eta_candidates, is_local_max


class ChainError(RuntimeError):
    """Chain construction failed."""


@dataclass(frozen=True)
class ChainSpec:
    boundaries: tuple[float, ...]
    delta: float
    p: int
    epsilon: float
    s: float

    def __post_init__(self):
        g = tuple(float(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", g)
        if len(g) < 2:
            raise ChainError("a chain needs at least two boundary points")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ChainError("boundary points must increase strictly")
        if self.delta <= 0:
            raise ChainError("delta must be positive")

    @property
    def n_links(self) -> int:
        return 2 * len(self.boundaries) - 1

    @property
    def mesh(self) -> float:
        g = np.asarray(self.boundaries)
        return float(np.max(np.diff(g)))

    def interval(self, i: int) -> tuple[float, float]:
        """Projection interval of link ``i`` (open)."""
        g = self.boundaries
        if i % 2 == 0:
            m = i // 2
            return g[m] - self.delta, g[m] + self.delta
        m = (i - 1) // 2
        return g[m], g[m + 1]

    def links_containing(self, x: float) -> list[int]:
        g = np.asarray(self.boundaries)
        out = []
        m = int(np.searchsorted(g, x))  # g[m-1] < x <= g[m]
        for i in (2 * m - 2, 2 * m - 1, 2 * m, 2 * m + 1):
            if 0 <= i < self.n_links:
                lo, hi = self.interval(i)
                if lo < x < hi:
                    out.append(i)
        return out

    def link_of(self, x: float) -> int:
        found = self.links_containing(x)
        if len(found) != 1:
            raise ChainError(f"point {x!r} lies in links {found}")
        return found[0]

    def to_json(self) -> dict:
        return {"p": self.p, "epsilon": self.epsilon, "delta": self.delta, "s": self.s,
                "boundaries": list(self.boundaries)}

    @classmethod
    def from_json(cls, data: dict) -> "ChainSpec":
        return cls(tuple(data["boundaries"]), float(data["delta"]), int(data["p"]),
                   float(data["epsilon"]), float(data["s"]))


@dataclass(frozen=True)
class LinkAssignment:
    links: tuple[int, ...]  # links[n] for 0 <= n <= depth

    @property
    def depth(self) -> int:
        return len(self.links) - 1

    def __call__(self, n: int) -> int:
        return link_of_level(self, n)


def link_of_level(assign: LinkAssignment, n: int) -> int:
    if n < 0 or n > assign.depth:
        raise HorizonError(f"level {n} outside the assigned range 0..{assign.depth}")
    return assign.links[n]


def assign_links(spec: ChainSpec, params: TentParams, depth: int) -> LinkAssignment:
    return LinkAssignment(tuple(spec.link_of(params.point(n)) for n in range(depth + 1)))


def lowest_levels(assign: LinkAssignment) -> dict[int, int]:
    """Lowest level present in each link."""
    low: dict[int, int] = {}
    for n, i in enumerate(assign.links):
        low.setdefault(i, n)
    return low


# --- construction -------------------------------------------------------------


def hofbauer_interval(params: TentParams, S: CuttingTimes, n: int) -> tuple[float, float]:
    if n == 1:
        return 0.0, params.point(1)
    a, b = params.point(n), params.point(beta(n, S))
    return min(a, b), max(a, b)


def _inside_one_gap(g: np.ndarray, lo: float, hi: float) -> bool:
    i = int(np.searchsorted(g, lo, side="right"))
    j = int(np.searchsorted(g, hi, side="left"))
    return i == j


@dataclass
class BuildLog:
    inserted: list = field(default_factory=list)  # (n, boundary, eta)
    skipped: list = field(default_factory=list)
    dropped_seed: int = 0
    retries: int = 0


def build_chain(params: TentParams, S: CuttingTimes, p: int, epsilon: float, depth: int,
                max_retries: int = 5, log: BuildLog | None = None) -> ChainSpec:
    """Equidistant seed refined by the points ``c_n -/+ eta_n``.

    A boundary goes at ``c_n - eta_n`` when ``c_n`` is a local maximum of
    ``T^n`` at ``c`` and at ``c_n + eta_n`` otherwise, unless ``D_n`` already
    lies between two boundaries.  Seed points closer than a tenth of the
    seed spacing to an inserted point are dropped; an inserted point that
    lands too close to another inserted point or to a ``c_j`` is moved to
    the next admissible ``eta`` (at most ``max_retries`` times).
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if p < 0 or depth < 1:
        raise ValueError("need p >= 0 and depth >= 1")
    log = log if log is not None else BuildLog()
    s = params.s
    half = s / 2
    mesh_max = s ** (-p) * epsilon / 2
    n_seed = max(math.ceil(2 * s ** p / epsilon), 2)
    h = half / n_seed
    if h > mesh_max:
        n_seed = math.ceil(half / mesh_max) + 1
        h = half / n_seed
    seed = [h * (i + 0.5) for i in range(n_seed)]
    levels = np.array([params.point(n) for n in range(depth + 1)])
    guard = h * 1e-3  # seed points and well separated levels keep this distance to any c_n
    seed = [x for x in seed if np.min(np.abs(levels - x)) > guard]
    inserted: list[float] = []
    cap = epsilon / 2 * s ** (-p)
    for n in range(1, depth + 1):
        g = np.sort(np.array(seed + inserted))
        lo, hi = hofbauer_interval(params, S, n)
        if _inside_one_gap(g, lo, hi):
            log.skipped.append(n)
            continue
        cn = params.point(n)
        sign = -1.0 if is_local_max(params.nu, n) else 1.0
        cands = eta_candidates(params, S, n, depth, cap)
        placed = False
        for tries, eta in enumerate(cands[: max_retries + 1]):
            x = cn + sign * eta
            if not (0.0 < x < half):
                continue
            # c_n can sit within 1e-11 of another c_j, so the guard shrinks with eta
            near = min(guard, 0.25 * eta)
            if np.min(np.abs(levels - x)) <= near:
                log.retries += 1
                continue
            if inserted and min(abs(x - y) for y in inserted) <= near:
                log.retries += 1
                continue
            inserted.append(x)
            log.inserted.append((n, x, eta))
            placed = True
            break
        if not placed:
            raise ChainError(f"no admissible boundary for level {n} after {max_retries} retries")
    ins = np.array(inserted)
    kept = [x for x in seed if len(ins) == 0 or np.min(np.abs(ins - x)) > h / 10]
    log.dropped_seed = len(seed) - len(kept)
    g = np.sort(np.array(kept + inserted))
    return _finish(g, params, p, epsilon, depth, mesh_max)


def _finish(inner: np.ndarray, params: TentParams, p: int, epsilon: float, depth: int,
            mesh_cap: float) -> ChainSpec:
    """Add the two end boundaries and pick ``delta``.

    The first boundary sits at ``delta / 2``.  The last one sits at
    ``s/2 + 2 delta``, just outside the interval, so that ``c_1`` and the
    critical values accumulating on it share the top odd link instead of
    being split by a ball around ``s/2``.  ``delta`` starts at a thousandth of the largest spacing and is halved
    until it is below a hundredth of the smallest spacing and every ``c_n``
    (``n <= depth``) and ``c`` lies in exactly one link.
    """
    half = params.s / 2
    delta = mesh_cap / 1000
    levels = [params.point(n) for n in range(depth + 1)]
    for _ in range(200):
        g = np.concatenate(([delta / 2], inner[(inner > delta) & (inner < half - delta)], [half + 2 * delta]))
        spec = ChainSpec(tuple(g), delta, p, epsilon, params.s)
        if delta <= np.min(np.diff(g)) / 100 and all(len(spec.links_containing(x)) == 1 for x in levels):
            return spec
        delta /= 2
    raise ChainError("could not find delta separating the critical orbit from the boundaries")


def stipulated_chain(params: TentParams, groups: Sequence[Sequence[int]], mesh: float,
                     depth: int, p: int = 0, epsilon: float = 0.5) -> ChainSpec:
    """A chain in which each group of levels shares one odd link.

    The groups must occupy disjoint ranges of ``[0, s/2]``; a boundary is
    placed just outside every group's range and equidistant boundaries at
    spacing ``mesh`` fill the rest.
    """
    half = params.s / 2
    ranges = []
    for grp in groups:
        xs = [params.point(n) for n in grp]
        ranges.append((min(xs), max(xs)))
    ranges.sort()
    for (a0, a1), (b0, b1) in zip(ranges, ranges[1:]):
        if a1 >= b0:
            raise ChainError("level groups overlap")
    pad = mesh / 4
    forced = []
    for i, (lo, hi) in enumerate(ranges):
        left = lo - min(pad, (lo - ranges[i - 1][1]) / 2 if i else pad)
        right = hi + min(pad, (ranges[i + 1][0] - hi) / 2 if i + 1 < len(ranges) else pad)
        forced += [left, right]
    if forced[-1] >= half:
        forced.pop()  # the top group then runs into the end ball
    forced_arr = np.array(forced)
    grid = np.arange(mesh / 2, half, mesh)
    keep = [x for x in grid
            if not any(lo - pad <= x <= hi + pad for lo, hi in ranges)
            and np.min(np.abs(forced_arr - x)) > mesh / 4]
    inner = np.sort(np.array(keep + forced))
    return _finish(inner, params, p, epsilon, depth, mesh)


# --- verification --------------------------------------------------------------


@dataclass
class ChainReport:
    diameters: list = field(default_factory=list)  # (link, width)
    unique_link: list = field(default_factory=list)  # (n, links)
    neighbours_inside: list = field(default_factory=list)  # (a, m, b)
    escape: list = field(default_factory=list)  # (x, y, z)
    structure: list = field(default_factory=list)
    checked_triples: int = 0

    @property
    def passed(self) -> dict:
        return {
            "diameter": not self.diameters,
            "unique_link": not self.unique_link,
            "neighbours_inside": not self.neighbours_inside,
            "escape": not self.escape,
            "structure": not self.structure,
        }

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_json(self, limit: int = 50) -> dict:
        return {
            "passed": self.passed,
            "ok": self.ok,
            "checked_triples": self.checked_triples,
            "violations": {
                "diameter": self.diameters[:limit],
                "unique_link": self.unique_link[:limit],
                "neighbours_inside": [list(t) for t in self.neighbours_inside[:limit]],
                "escape": [list(t) for t in self.escape[:limit]],
                "structure": self.structure[:limit],
            },
        }


def verify_chain(spec: ChainSpec, params: TentParams, kd: KneadingData, depth: int,
                 triples: Iterable[tuple[int, int, int]] | None = None) -> ChainReport:
    """Check the four chain properties for every level up to ``depth``.

    1. odd links are narrower than ``s^-p * epsilon``;
    2. every ``c_n`` lies in exactly one link;
    3. a point of level ``m`` that is not of the lowest level in its link has
       both neighbours in that link;
    4. for neighbours ``x, y, z`` with ``y`` outside the link of ``x``, the
       point ``z`` is outside that link too, unless it has the level of ``x``.

    Points are compared through consecutive level triples realised in
    ``FP(C0)`` or ``FP(R)`` (:func:`realized_triples`).
    """
    rep = ChainReport()
    g = np.asarray(spec.boundaries)
    if spec.delta > np.min(np.diff(g)) / 100:
        rep.structure.append("delta is not below a hundredth of the smallest spacing")
    if min(g[0], abs(spec.s / 2 - g[-1])) >= spec.delta:
        rep.structure.append("no end boundary within delta of the interval ends")
    if g[0] >= spec.delta or g[-1] <= spec.s / 2:
        rep.structure.append("the links do not cover [0, s/2]")
    width_cap = spec.s ** (-spec.p) * spec.epsilon
    for i in range(1, spec.n_links, 2):
        lo, hi = spec.interval(i)
        if hi - lo >= width_cap:
            rep.diameters.append((i, hi - lo))
    links = []
    for n in range(depth + 1):
        found = spec.links_containing(params.point(n))
        if len(found) != 1:
            rep.unique_link.append((n, found))
        links.append(found[0] if found else -1)
    if rep.unique_link:
        return rep
    assign = LinkAssignment(tuple(links))
    low = lowest_levels(assign)
    if triples is None:
        triples = realized_triples(kd, depth)
    for a, m, b in sorted(triples):
        rep.checked_triples += 1
        lm = links[m]
        if low[lm] != m and (links[a] != lm or links[b] != lm):
            rep.neighbours_inside.append((a, m, b))
        lx = links[a]
        if links[m] != lx and links[b] == lx and b != a:
            rep.escape.append((a, m, b))
    return rep


# --- turns ---------------------------------------------------------------------


def detect_turns(fp: FoldingPattern | Sequence[int], assign: LinkAssignment) -> list[tuple[int, int, int]]:
    """Interior local maxima as ``(position, link, level)``.

    An arc turns exactly at its local level maxima; everywhere else it
    passes straight through the link.
    """
    lv = np.asarray(fp.entries if isinstance(fp, FoldingPattern) else fp, dtype=np.int64)
    finite = lv[lv != INF]
    if len(finite) and finite.max() > assign.depth:
        raise HorizonError(f"level {int(finite.max())} above the assigned depth {assign.depth}")
    out = []
    for i in range(1, len(lv) - 1):
        x = lv[i]
        if x == INF or lv[i - 1] == INF or lv[i + 1] == INF:
            continue
        if x > lv[i - 1] and x > lv[i + 1]:
            out.append((i, assign.links[x], int(x)))
    return out


def spec_to_file(spec: ChainSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_json(), fh, indent=2)


def spec_from_file(path: str) -> ChainSpec:
    with open(path) as fh:
        return ChainSpec.from_json(json.load(fh))
