"""Run configuration, the FP(R) comparison and the acceptance battery."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chains import assign_links, build_chain, stipulated_chain, verify_chain
from .folding import (
    INF,
    Bridge,
    bridge_scan,
    fp_c0,
    fp_r_two_sided,
    iterate,
    locate_window,
    salient_indices,
    seed_c0,
    seed_r,
    step_window,
)
from .kneading import (
    KneadingData,
    KneadingError,
    KneadingMap,
    is_admissible,
    is_fibonacci_like,
)
from .numeric import (
    closest_return_check,
    oracle_local_end,
    oracle_p_points_C0,
    oracle_p_points_R,
    solve_slope,
)
from .symmetry import (
    ArcWindow,
    SymmetryClass,
    Source,
    basic,
    classify_link_symmetric,
    decompose_quasi_chain,
    link_symmetric_windows,
    quasi,
)


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


# Windows printed in the literature for the Fibonacci map, used as golden data.
GOLDEN_B = (1, 14, 1, 6, 1, 0, 3, 0, 1, 0, 2, 0, 1, 4, 1, 9, 1, 4, 1, 0, 2, 0, 1, 0, 3, 0, 1, 6, 1, 0, 3, 0)
GOLDEN_C1 = (1, 22, 77, 22, 1, 9, 43, 9, 1, 22, 1, 9, 1)
GOLDEN_C3 = GOLDEN_C1 + (4, 1, 0, 2, 0, 1, 0, 3, 0, 1, 6, 1, 14, 1, 6, 1, 0, 3, 0, 1, 0, 2, 0, 1, 4, 1, 9, 1)
GOLDEN_C2 = (1, 22, 1, 56, 1, 22, 1, 9, 1, 4, 1, 0, 2, 0, 1, 0, 3, 0, 1, 6, 1, 14, 1, 35, 1, 14, 1, 6, 1,
             0, 3, 0, 1, 0, 2, 0, 1, 4, 1, 9, 1, 22, 1, 9, 1, 4, 1, 0, 2, 0, 1, 0, 3, 0, 1, 6, 1, 14, 1,
             6, 1, 0, 3, 0, 1, 0, 2, 0, 1, 4, 1, 9, 1)
LINK_GROUPS = ((1, 14, 22, 35, 56, 77), (9, 43))


@dataclass
class RunConfig:
    kneading: KneadingMap = field(default_factory=lambda: KneadingMap.fibonacci(60))
    compare_with: KneadingMap = field(default_factory=lambda: KneadingMap.with_offset(3, 60))
    depth: int = 150
    p: int = 8
    epsilon: float = 0.05
    salient: int = 20
    r_salient: int = 12
    compare_salient: int = 8
    oracle_depth: int = 60
    tolerance: float = 1e-7
    bridge_max: int = 12
    mesh: float = 2e-3
    window_len: int = 40
    scan_steps: int = 22
    n_symbols: int = 16384

    def validate(self) -> None:
        for name in ("depth", "salient", "r_salient", "compare_salient", "oracle_depth",
                     "bridge_max", "window_len", "scan_steps", "n_symbols"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.p < 0:
            raise ConfigError("p must be non-negative")
        if not (self.tolerance > 0 and self.mesh > 0):
            raise ConfigError("tolerance and mesh must be positive")


# --- comparison of FP(R) ------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    diverged: bool
    index: int | None  # distance from rho of the first differing entry
    side: str | None  # "right" | "left" | "both"
    block: int | None  # salient points passed on that side before the divergence
    horizon: int  # distance from rho up to which both patterns were compared
    salient_counts: dict

    @property
    def message(self) -> str:
        if self.diverged:
            return f"folding patterns diverge at depth {self.index}"
        return f"identical to horizon {self.horizon}"

    def to_json(self) -> dict:
        return {"diverged": self.diverged, "index": self.index, "side": self.side,
                "block": self.block, "horizon": self.horizon,
                "salient_counts": self.salient_counts, "message": self.message}


def _sides(fp) -> tuple[np.ndarray, np.ndarray]:
    a = fp.anchor
    return fp.entries[a + 1:], fp.entries[:a][::-1]


def _first_diff(x: np.ndarray, y: np.ndarray) -> int | None:
    n = min(len(x), len(y))
    d = np.flatnonzero(x[:n] != y[:n])
    return int(d[0]) if len(d) else None


def compare_fp_r(Q1: KneadingMap, Q2: KneadingMap, n_salient: int,
                 n_symbols: int = 4096) -> ComparisonReport:
    """First entry where the two-sided ``FP(R)`` of two maps differ.

    Both patterns are grown until each side of ``rho`` holds ``n_salient``
    salient points and are aligned at ``rho``; the index is the distance
    from ``rho`` (1 for the neighbours of ``rho``).
    """
    for Q in (Q1, Q2):
        if not is_admissible(Q):
            raise KneadingError(f"kneading map {Q.to_json()} is not admissible")
        if not is_fibonacci_like(Q):
            raise KneadingError(f"kneading map {Q.to_json()} is not Fibonacci-like")
    fps = [fp_r_two_sided(KneadingData.build(Q, n_symbols), n_salient) for Q in (Q1, Q2)]
    (r1, l1), (r2, l2) = (_sides(fp) for fp in fps)
    dr, dl = _first_diff(r1, r2), _first_diff(l1, l2)
    horizon = min(len(r1), len(r2), len(l1), len(l2))
    counts = {}
    for tag, fp in zip("AB", fps):
        idx = salient_indices(fp)
        counts[tag] = {"right": len(idx.right), "left": len(idx.left)}
    cands = [(d + 1, side) for d, side in ((dr, "right"), (dl, "left")) if d is not None and d < horizon]
    if not cands:
        return ComparisonReport(False, None, None, None, horizon, counts)
    index = min(d for d, _ in cands)
    sides = sorted({s for d, s in cands if d == index})
    side = sides[0] if len(sides) == 1 else "both"
    # salient points of pattern A strictly between rho and the divergence
    a = fps[0].anchor
    idx = salient_indices(fps[0])
    pos = idx.right if side != "left" else idx.left
    block = sum(1 for i in pos if abs(i - a) < index)
    return ComparisonReport(True, index, side, block, horizon, counts)


# --- the acceptance battery ----------------------------------------------------------


@dataclass
class CheckResult:
    id: str
    title: str
    ok: bool
    detail: dict
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.id} {self.title} ({self.seconds:.1f}s)"

    def to_json(self, timings: bool = False) -> dict:
        out = {"id": self.id, "title": self.title, "ok": self.ok, "detail": self.detail}
        if timings:
            out["seconds"] = round(self.seconds, 3)
        return out


class Context:
    """Shared, lazily built data for the checks."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._cache: dict = {}

    def get(self, key: str, build: Callable):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def kd(self) -> KneadingData:
        return self.get("kd", lambda: KneadingData.build(self.cfg.kneading, self.cfg.n_symbols))

    @property
    def params(self):
        return self.get("params", lambda: solve_slope(self.kd.nu, 40, 1e-13))

    @property
    def links(self):
        def build():
            spec = stipulated_chain(self.params, LINK_GROUPS, self.cfg.mesh, self.cfg.depth)
            return assign_links(spec, self.params, self.cfg.depth)
        return self.get("links", build)

    def located(self, window) -> tuple[Source, int]:
        def build():
            loc = locate_window(self.kd, window)
            if loc is None:
                raise LookupError("window not found in the generated pattern")
            return Source(loc.context, self.links), loc.offset
        return self.get(("loc",) + tuple(window), build)


def check_cutting_times(ctx: Context) -> dict:
    got = [int(x) for x in ctx.kd.S.s_values[:8]]
    return {"ok": got == [1, 2, 3, 5, 8, 13, 21, 34], "S": got}


def check_c0_prefix(ctx: Context) -> dict:
    want = [INF, 0, 1, 0, 2, 0, 1]
    sym = iterate(seed_c0(), ctx.kd, 3).entries[:7].tolist()
    orc = list(oracle_p_points_C0(ctx.params, 3 + ctx.cfg.p, ctx.cfg.p).levels)[:7]
    return {"ok": sym == want and orc == want, "symbolic": sym, "oracle": orc}


def check_salient_levels(ctx: Context) -> dict:
    n = ctx.cfg.salient
    c0 = fp_c0(ctx.kd, n)
    right = [int(c0.entries[i]) for i in salient_indices(c0).right][:n]
    r = fp_r_two_sided(ctx.kd, ctx.cfg.r_salient)
    idx = salient_indices(r)
    rr = [int(r.entries[i]) for i in idx.right][:ctx.cfg.r_salient]
    rl = [int(r.entries[i]) for i in idx.left][:ctx.cfg.r_salient]
    ok = (right == list(range(1, n + 1))
          and rr == [2 * i - 1 for i in range(1, ctx.cfg.r_salient + 1)]
          and rl == [2 * i for i in range(1, ctx.cfg.r_salient + 1)])
    return {"ok": ok, "c0": right, "r_right": rr, "r_left": rl}


def check_golden_window(ctx: Context) -> dict:
    loc = locate_window(ctx.kd, GOLDEN_B)
    if loc is None:
        return {"ok": False, "found": False}
    seen = loc.context[loc.offset:loc.offset + len(GOLDEN_B)].tolist()
    ok = seen in (list(GOLDEN_B), list(GOLDEN_B[::-1]))
    return {"ok": ok, "found": True, "steps": loc.steps, "mirrored": seen != list(GOLDEN_B)}


def check_classifications(ctx: Context) -> dict:
    out = {}
    src, off = ctx.located(GOLDEN_B)
    x = lambda k: off + k - 2  # noqa: E731  x^2 is the first entry of the window
    q26 = quasi(src, x(2), x(6))
    out["x2_x6_basic_quasi"] = bool(q26.ok and basic(src, x(2), x(6), q26))
    q230 = quasi(src, x(2), x(30))
    out["x2_x30_quasi_not_basic"] = bool(q230.ok and not basic(src, x(2), x(30), q230))
    src, off = ctx.located(GOLDEN_C1)
    ch = decompose_quasi_chain(ArcWindow(src, off, off + len(GOLDEN_C1) - 1))
    out["example1_decreasing"] = bool(ch and ch.direction == "decreasing"
                                      and ch.levels(src) == [77, 43, 22, 9, 1])
    src, off = ctx.located(GOLDEN_C2)
    ch = decompose_quasi_chain(ArcWindow(src, off, off + len(GOLDEN_C2) - 1))
    out["example2_decreasing"] = bool(ch and ch.direction == "decreasing"
                                      and ch.levels(src) == [56, 35, 22, 14, 1])
    src, off = ctx.located(GOLDEN_C3)
    out["example3_not_decreasing"] = decompose_quasi_chain(ArcWindow(src, off, off + len(GOLDEN_C3) - 1)) is None
    return {"ok": all(out.values()), **out}


def check_chain(ctx: Context) -> dict:
    cfg = ctx.cfg
    spec = build_chain(ctx.params, ctx.kd.S, cfg.p, cfg.epsilon, cfg.depth)
    rep = verify_chain(spec, ctx.params, ctx.kd, cfg.depth)
    return {"ok": rep.ok, "passed": rep.passed, "links": spec.n_links,
            "checked_triples": rep.checked_triples}


def symbolic_end(kd: KneadingData, side: str, M: int, K: int, start: int = 18) -> list[int]:
    """The ``K`` entries closest to the level-``M`` end of the pattern after
    ``M`` steps, listed from that end inwards.

    Only the tail is stepped: a slice steps to the stretch between the
    images of its end entries, so the tail stays exact.
    """
    start = min(start, M)
    fp = iterate(seed_c0() if side == "C0" else seed_r(), kd, start)
    e = fp.entries
    arr = e[-K:].copy() if e[-1] == start else e[:K][::-1].copy()
    if INF in arr:
        raise ValueError("tail reaches the anchor; increase start")
    for _ in range(M - start):
        arr = step_window(arr, kd)[-K:]
    return arr[::-1].tolist()


def check_oracle(ctx: Context) -> dict:
    cfg, P, kd = ctx.cfg, ctx.params, ctx.kd
    p = cfg.p
    exact_depth = min(22, cfg.oracle_depth)
    worst = 0.0
    bad = []
    for side, seed, orc_fn in (("C0", seed_c0(), oracle_p_points_C0), ("R", seed_r(), oracle_p_points_R)):
        for M in range(1, exact_depth + 1):
            orc = orc_fn(P, M + p, p)
            sym = iterate(seed, kd, M).entries.tolist()
            if list(orc.levels) != sym:
                bad.append((side, M))
                continue
            for lv, pr in zip(orc.levels, orc.proj):
                if lv != INF:
                    worst = max(worst, abs(pr - P.point(lv)))
        deep = sorted({d for d in (25, 40, cfg.oracle_depth) if exact_depth < d <= cfg.oracle_depth})
        for M in deep:
            lv, pr = oracle_local_end(kd.nu, side, M, 150)
            if symbolic_end(kd, side, M, len(lv)) != lv:
                bad.append((side, M))
            worst = max([worst] + [abs(a - P.point(b)) for a, b in zip(pr, lv)])
    return {"ok": not bad and worst <= cfg.tolerance, "mismatches": bad, "max_projection_error": worst}


def check_closest_return(ctx: Context) -> dict:
    P, kd = ctx.params, ctx.kd
    rows = [closest_return_check(P, kd.Q, kd.S, k) for k in range(3, 16)]
    failed = [r["k"] for r in rows if not (r["first"] and r["second"])]
    return {"ok": not failed, "failed_k": failed}


def check_bridges(ctx: Context) -> dict:
    out = {}
    ok = True
    for side, fp in (("R", fp_r_two_sided(ctx.kd, ctx.cfg.r_salient)), ("C0", fp_c0(ctx.kd, ctx.cfg.salient))):
        bs = bridge_scan(fp, ctx.kd, ctx.cfg.bridge_max)
        dis = bs.disagreements()
        ok &= not dis
        out[side] = {"kappa": bs.kappa, "disagreements": [list(x) for x in dis],
                     "inconclusive": len(bs.inconclusive()),
                     "found": sum(r is Bridge.FOUND for r in bs.results.values())}
    return {"ok": ok, **out}


def totality_scan(src: Source, max_len: int) -> Counter:
    cnt = Counter()
    for i, j in link_symmetric_windows(src, max_len):
        cnt[classify_link_symmetric(ArcWindow(src, i, j)).cls.value] += 1
    return cnt


def check_totality(ctx: Context) -> dict:
    fp = iterate(seed_c0(), ctx.kd, ctx.cfg.scan_steps)
    cnt = totality_scan(Source(fp.entries, ctx.links), ctx.cfg.window_len)
    for w in (GOLDEN_C2, GOLDEN_C3):
        src, _ = ctx.located(w)
        cnt.update(totality_scan(src, ctx.cfg.window_len))
    return {"ok": cnt.get(SymmetryClass.NONE.value, 0) == 0, "counts": dict(sorted(cnt.items())),
            "entries": int(len(fp))}


def check_divergence(ctx: Context) -> dict:
    n = ctx.cfg.compare_salient
    a = compare_fp_r(ctx.cfg.kneading, ctx.cfg.compare_with, n)
    b = compare_fp_r(ctx.cfg.compare_with, ctx.cfg.kneading, n)
    again = compare_fp_r(ctx.cfg.kneading, ctx.cfg.compare_with, n)
    ok = a.diverged and a.index == b.index == again.index and a.side == b.side
    return {"ok": ok, "report": a.to_json(), "swapped_index": b.index}


CHECKS: list[tuple[str, str, Callable[[Context], dict]]] = [
    ("c01", "cutting times", check_cutting_times),
    ("c02", "FP(C0) prefix", check_c0_prefix),
    ("c03", "salient levels", check_salient_levels),
    ("c04", "golden window", check_golden_window),
    ("c05", "worked-example classifications", check_classifications),
    ("c06", "chain verification", check_chain),
    ("c07", "oracle equivalence", check_oracle),
    ("c08", "closest return inequalities", check_closest_return),
    ("c09", "bridges against Lambda_kappa", check_bridges),
    ("c10", "link-symmetric totality", check_totality),
    ("c11", "FP(R) divergence", check_divergence),
]


def suite(cfg: RunConfig, only: list[str] | None = None) -> list[CheckResult]:
    """Run the acceptance battery; results are sorted by check id.

    An inadmissible kneading map fails every check without running it.
    """
    cfg.validate()
    unknown = sorted(set(only or ()) - {cid for cid, _, _ in CHECKS})
    if unknown:
        raise ConfigError(f"unknown check ids: {', '.join(unknown)}")
    ctx = Context(cfg)
    adm = is_admissible(cfg.kneading)
    results = []
    for cid, title, fn in CHECKS:
        if only and cid not in only:
            continue
        t0 = time.perf_counter()
        if not adm:
            detail = {"ok": False, "error": f"kneading map not admissible: {adm.first_violation}"}
        else:
            try:
                detail = fn(ctx)
            except Exception as exc:  # a crashing check is a failed check
                detail = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
        ok = bool(detail.pop("ok"))
        results.append(CheckResult(cid, title, ok, _jsonable(detail), time.perf_counter() - t0))
    return sorted(results, key=lambda r: r.id)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
