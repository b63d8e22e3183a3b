"""Numeric layer for the tent family ``T_s(x) = min(s x, s (1 - x))``.

Forward orbits of the critical point lose a factor ``s`` of accuracy per
step, so beyond a few dozen iterates they are noise.  The orbit stored in
:class:`TentParams` is therefore rebuilt backwards from the kneading
sequence: ``c_j = B_{nu_j}(c_{j+1})`` with the contracting inverse branches
``B_0(y) = y / s`` and ``B_1(y) = 1 - y / s``.  Distances to ``c`` that are
far below machine precision are handled in log form (:func:`log_dist_to_c`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .kneading import (
    CuttingTimes,
    HorizonError,
    KneadingData,
    KneadingSequence,
    beta,
)

C = 0.5
SQRT2 = math.sqrt(2.0)
EXTRA_SYMBOLS = 64  # backward steps needed to forget the seed of the recursion


class SlopeError(ValueError):
    """No slope in (sqrt 2, 2] realises the requested kneading data."""


def tent(s: float, x: float) -> float:
    return s * x if x <= C else s * (1.0 - x)


def forward_orbit(s: float, n: int) -> list[float]:
    """``c_1..c_n`` by plain forward iteration (reliable for small ``n`` only)."""
    out = [s / 2.0]
    while len(out) < n:
        out.append(tent(s, out[-1]))
    return out[:n]


def backward_orbit(s: float, nu: KneadingSequence, n: int) -> np.ndarray:
    """``c_1..c_n`` from the itinerary; needs ``len(nu) >= n + EXTRA_SYMBOLS``."""
    L = n + EXTRA_SYMBOLS
    if len(nu) < L:
        raise HorizonError(f"backward orbit to {n} needs {L} kneading symbols, have {len(nu)}")
    sym = nu.symbols
    y = C
    out = np.empty(L)
    for j in range(L, 0, -1):
        y = y / s if sym[j - 1] == 0 else 1.0 - y / s
        out[j - 1] = y
    return out[:n]


@dataclass(frozen=True)
class TentParams:
    """Slope, critical orbit ``c_1..c_N`` and (optionally) the kneading data."""

    s: float
    orbit: tuple[float, ...]
    nu: KneadingSequence | None = None
    bracket: tuple[float, float] | None = None
    c: float = C
    _arr: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (SQRT2 - 1e-12 <= self.s <= 2.0):
            raise SlopeError(f"slope {self.s} outside (sqrt 2, 2]")
        object.__setattr__(self, "_arr", np.asarray(self.orbit, dtype=float))

    @property
    def N(self) -> int:
        return len(self.orbit)

    @property
    def r(self) -> float:
        return self.s / (self.s + 1.0)

    def point(self, n: int) -> float:
        """``c_n`` with the convention ``c_0 = c``."""
        if n == 0:
            return C
        if n < 0 or n > self.N:
            raise HorizonError(f"c_{n} outside stored orbit 1..{self.N}")
        return self.orbit[n - 1]

    @property
    def points(self) -> np.ndarray:
        """Array ``[c, c_1, ..., c_N]`` indexed by level."""
        return np.concatenate(([C], self._arr))

    @classmethod
    def from_slope(cls, s: float, N: int, nu: KneadingSequence | None = None,
                   bracket: tuple[float, float] | None = None) -> "TentParams":
        if nu is not None and len(nu) >= N + EXTRA_SYMBOLS:
            orb = backward_orbit(s, nu, N)
        else:
            orb = np.array(forward_orbit(s, N))
        return cls(float(s), tuple(float(x) for x in orb), nu, bracket)

    def to_json(self) -> dict:
        return {"s": self.s, "N": self.N, "orbit": list(self.orbit)}


def orbit(params: TentParams, n: int) -> list[float]:
    if n > params.N:
        raise HorizonError(f"orbit requested to {n}, stored to {params.N}")
    return list(params.orbit[:n])


def _itinerary(s: float, n: int) -> list[int]:
    return [1 if x > C else 0 for x in forward_orbit(s, n)]


def _parity_cmp(a: list[int], nu: KneadingSequence, n: int) -> int:
    """Sign of ``itinerary - nu`` in the parity-lexicographic order (first n symbols)."""
    flips = 0
    for j in range(n):
        x, y = a[j], nu.symbols[j]
        if x != y:
            sign = 1 if x > y else -1
            return -sign if flips % 2 else sign
        flips += x
    return 0


def solve_slope(nu: KneadingSequence, match_len: int = 40, tol: float = 1e-12,
                N: int = 400) -> TentParams:
    """Bisection for the slope whose critical itinerary starts with ``nu``.

    The kneading sequence grows with ``s`` in the parity-lexicographic order,
    which gives the bisection its direction.  The returned slope is checked
    against the first ``match_len`` symbols with a binary64 forward orbit.
    """
    if match_len > len(nu):
        raise ValueError("match_len exceeds the kneading sequence")
    if _parity_cmp(_itinerary(2.0, match_len), nu, match_len) == 0:
        lo = hi = 2.0
    else:
        # Forward float orbits are noise after ~50 symbols, so the bisection
        # runs in extended precision and only the result is rounded.
        n_cmp = min(len(nu), max(match_len, 200))
        s_mp = refine_slope_mp(tuple(nu.symbols[:n_cmp]), 40)
        lo, hi = float(s_mp - tol / 2), float(s_mp + tol / 2)
    s = 0.5 * (lo + hi)
    if not (SQRT2 < s <= 2.0) or _parity_cmp(_itinerary(s, match_len), nu, match_len) != 0:
        raise SlopeError("no slope in (sqrt 2, 2] matches the kneading sequence")
    return TentParams.from_slope(s, min(N, max(len(nu) - EXTRA_SYMBOLS, 1)), nu, (lo, hi))


def fibonacci_params(N: int = 400, n_symbols: int = 16384) -> tuple[TentParams, KneadingData]:
    from .kneading import fibonacci_data

    kd = fibonacci_data(40, n_symbols)
    return solve_slope(kd.nu, 40, 1e-13, N), kd


# --- distances to c in log form ------------------------------------------------


def log_dist_to_c(params: TentParams, n: int, dps: int | None = None) -> float:
    """``ln |c_n - c|`` accurate far below machine precision.

    The critical orbit is recomputed in extended precision by the same
    backward composition as :func:`backward_orbit`, with the slope solved
    to working precision by :func:`refine_slope_mp`.  Without an explicit
    ``dps`` the precision doubles until the distance is resolved.
    """
    if params.nu is None:
        raise ValueError("log distances need the kneading sequence")
    if n == 0:
        return -math.inf
    return float(mpmath.log(_mp_dist(params.nu, n, dps)))


def _mp_dist(nu: KneadingSequence, n: int, dps: int | None = None):
    trial = dps or 60
    while True:
        _, orb = _mp_orbit(nu.symbols, n, trial)
        with mpmath.workdps(trial):
            d = abs(orb[n - 1] - mpmath.mpf(1) / 2)
            if d != 0 and d > mpmath.mpf(10) ** (-(trial - 30)):
                return d
        if dps is not None or trial >= 6000:
            raise HorizonError(f"|c_{n} - c| below the working precision of {trial} digits")
        trial *= 2


def _extra_symbols(dps: int, s: float = SQRT2) -> int:
    return int(dps / math.log10(s)) + 8


@lru_cache(maxsize=32)
def _mp_orbit(symbols: tuple, n: int, dps: int):
    n = max(n, 64)
    n = 1 << (n - 1).bit_length()  # share cache entries between nearby requests
    s0 = _float_bisect(symbols[:48])
    L = n + _extra_symbols(dps, s0)
    if len(symbols) < L:
        raise HorizonError(f"{L} kneading symbols needed for c_{n} at {dps} digits, have {len(symbols)}")
    s = refine_slope_mp(symbols[: _extra_symbols(dps, s0)], dps)
    with mpmath.workdps(dps):
        y = mpmath.mpf(1) / 2
        out = [None] * L
        for j in range(L, 0, -1):
            y = y / s if symbols[j - 1] == 0 else 1 - y / s
            out[j - 1] = y
    return s, out[:n]


def precritical_bracket(params: TentParams, S: CuttingTimes, k: int, Q) -> dict:
    """Check that ``zeta_{Q(k+1)}`` is the lowest-order precritical point
    of the ``zeta`` family between ``c`` and ``c_{S_k}``.

    ``c_{S_k}`` sits extremely close to that point, so the comparison runs
    on extended-precision distances:
    ``|zeta_j - c| = |c_{S_j} - c| / s^{S_j}``.
    """
    nu = params.nu
    j = Q(k + 1)
    # |c_{S_k} - zeta_j| is about |c_{S_k + S_j} - c| / s^{S_j}; size the
    # working precision so that this gap is resolved relative to |c_{S_k} - c|.
    d0 = _mp_dist(nu, S[k])
    g0 = _mp_dist(nu, S[k] + S[j]) / mpmath.mpf(params.s) ** S[j]
    dps = 60 + int(-mpmath.log10(g0))
    d = _mp_dist(nu, S[k], dps)
    with mpmath.workdps(dps):
        s, _ = _mp_orbit(nu.symbols, S[k], dps)

        def zeta_dist(i):
            if i < 1:
                return mpmath.mpf(1) / 2
            return _mp_dist(nu, S[i], dps) / s ** S[i]

        inner = zeta_dist(j)
        outer = zeta_dist(j - 1)
        del d0
        return {
            "k": k,
            "order": j,
            "inside": bool(inner < d),
            "lowest": bool(d < outer),
            "log_gap": float(mpmath.log(d - inner)) if d > inner else -math.inf,
        }


def log_dist_zeta(params: TentParams, S: CuttingTimes, k: int) -> float:
    """``ln |zeta_k - c| = ln |c_{S_k} - c| - S_k ln s``."""
    return log_dist_to_c(params, S[k]) - S[k] * math.log(params.s)


def closest_precritical(params: TentParams, S: CuttingTimes, k: int) -> tuple[float, float]:
    """``(zeta_k, 1 - zeta_k)``: the closest points to ``c`` with ``T^{S_k} = c``.

    ``zeta_k = B_0(B_{nu_1}(... B_{nu_{S_k - 1}}(c)))``.
    """
    nu = params.nu
    if nu is None:
        raise ValueError("closest_precritical needs the kneading sequence")
    Sk = S[k]
    if Sk - 1 > len(nu):
        raise HorizonError(f"S_{k} = {Sk} exceeds the kneading horizon")
    s = params.s
    y = C
    for j in range(Sk - 1, 0, -1):
        y = y / s if nu[j] == 0 else 1.0 - y / s
        if not (0.0 <= y <= s / 2 + 1e-15):
            raise ArithmeticError("branch preimage left [0, s/2]")
    z = y / s
    return z, 1.0 - z


def closest_return_check(params: TentParams, Q, S: CuttingTimes, k: int) -> dict:
    """Both inequalities ``|c_{S_k}-c| < |c_{S_Q(k)}-c|`` and
    ``|c_{S_k}-c| < |c_{S_Q^2(k)}-c| / 2`` in log form."""
    a = log_dist_to_c(params, S[k])
    b = log_dist_to_c(params, S[Q(k)])
    c2 = log_dist_to_c(params, S[Q(Q(k))])
    return {
        "k": k,
        "log_dist_Sk": a,
        "log_dist_SQk": b,
        "log_dist_SQ2k": c2,
        "first": a < b,
        "second": a < math.log(0.5) + c2,
    }


def level_width_proxy(params: TentParams, S: CuttingTimes, N: int) -> float:
    """``max_{N/2 <= n <= N} |c_n - c_{beta(n)}|``."""
    return max(abs(params.point(n) - params.point(beta(n, S))) for n in range(max(2, N // 2), N + 1))


def is_local_max(nu: KneadingSequence, n: int) -> bool:
    """Whether ``c_n`` is a local maximum of ``T^n`` at ``c``.

    ``T^n = T^{n-1} o T``; ``T`` peaks at ``c`` and ``T^{n-1}`` preserves
    orientation at ``c_1`` iff an even number of ``c_1..c_{n-1}`` lie right of c.
    """
    return sum(nu.symbols[: n - 1]) % 2 == 0


# --- eta table ---------------------------------------------------------------


def beta_children(n: int, S: CuttingTimes, N: int) -> list[int]:
    """All ``m <= N`` with ``beta(m) = n``: ``m = S_k + n`` with ``n <= S_{k+1} - S_k``."""
    out = []
    s = S.s_values
    for k in range(len(s) - 1):
        m = s[k] + n
        if m > N:
            break
        if n <= s[k + 1] - s[k]:
            out.append(m)
    return out


@dataclass(frozen=True)
class EtaTable:
    etas: dict
    N: int
    cap: float
    forbidden: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, n: int) -> float:
        return self.etas[n]


def _descendant_paths(n: int, S: CuttingTimes, N: int):
    """Yield ``(n', d_{n'}-index chain max)`` data by DFS over beta-children.

    Each item is ``(m, max_intermediate)``, where ``max_intermediate`` is the
    index set of the path strictly between ``m`` and ``n``.
    """
    stack = [(child, ()) for child in beta_children(n, S, N)]
    while stack:
        m, inter = stack.pop()
        yield m, inter
        for child in beta_children(m, S, N):
            stack.append((child, inter + (m,)))


def forbidden_intervals(params: TentParams, S: CuttingTimes, n: int, N: int) -> list[tuple[float, float]]:
    """Intervals of ``eta`` violating the separation property at ``n``.

    For a beta-path ``n' -> ... -> n`` with distances ``d_i = |c_{m_i} - c_n|``
    the property fails exactly when ``d_{n'} <= eta <= max(intermediate d_i)``.
    """
    cn = params.point(n)
    out = []
    for m, inter in _descendant_paths(n, S, N):
        if not inter:
            continue
        d0 = abs(params.point(m) - cn)
        dmax = max(abs(params.point(x) - cn) for x in inter)
        if dmax >= d0:
            out.append((d0, dmax))
    return out


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def eta_candidates(params: TentParams, S: CuttingTimes, n: int, N: int, cap: float) -> list[float]:
    """Admissible values of ``eta_n`` below ``cap``, best first.

    With no forbidden interval the whole of ``(0, cap)`` is admissible;
    keeping clear of the other ``c_m`` is left to the caller.
    """
    bad = _merge(forbidden_intervals(params, S, n, N))
    # complement of the forbidden union inside (0, cap)
    gaps = []
    prev = 0.0
    for a, b in bad:
        if a > prev:
            gaps.append((prev, min(a, cap)))
        prev = max(prev, b)
        if prev >= cap:
            break
    if prev < cap:
        gaps.append((prev, cap))
    gaps = [(a, b) for a, b in gaps if b > a]
    gaps.sort(key=lambda g: -g[1])
    out = []
    for a, b in gaps:
        for f in (0.5, 0.3, 0.7, 0.15, 0.85):
            out.append(a + f * (b - a))
    return out


def eta_table(params: TentParams, S: CuttingTimes, N: int, shrink: float, p: int = 0) -> EtaTable:
    """Pick ``eta_n`` for ``1 <= n <= N`` below ``shrink * s^-p`` and verify."""
    cap = shrink * params.s ** (-p)
    etas = {}
    for n in range(1, N + 1):
        cands = eta_candidates(params, S, n, N, cap)
        if not cands:
            raise ArithmeticError(f"no admissible eta for n={n} below {cap}")
        etas[n] = cands[0]
    table = EtaTable(etas, N, cap)
    bad = verify_eta_table(params, S, table, N)
    if bad:
        raise ArithmeticError(f"eta verification failed: {bad[:5]}")
    return table


def verify_eta_table(params: TentParams, S: CuttingTimes, table: EtaTable, N: int) -> list[tuple[int, int, int]]:
    """Brute-force scan of every beta-path to depth ``N``.

    Returns violations ``(n, n', n'')``: ``|c_{n'} - c_n| <= eta_n`` while an
    intermediate ``n''`` on the path has ``|c_{n''} - c_n| >= eta_n``.
    """
    bad = []
    for n, eta in table.etas.items():
        if n > N:
            continue
        cn = params.point(n)
        for m, inter in _descendant_paths(n, S, N):
            if abs(params.point(m) - cn) > eta:
                continue
            for x in inter:
                if abs(params.point(x) - cn) >= eta:
                    bad.append((n, m, x))
                    break
    return bad


# --- numeric oracle for p-points ---------------------------------------------


@dataclass(frozen=True)
class OraclePointList:
    """p-points along an arc: parameters ``t`` and levels (``-1`` is the sentinel).

    ``proj`` holds ``pi_p`` of each point (the sentinel gets ``nan``).
    """

    side: str
    t: np.ndarray
    levels: np.ndarray
    proj: np.ndarray
    depth: int
    p: int

    @property
    def anchor(self) -> int:
        return int(np.nonzero(self.levels < 0)[0][0])


def _preimage_tree(s: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``y`` in ``[0, s/2]`` with ``T^m(y) = c`` for some ``0 <= m <= M``.

    Returns arrays of points and of their (first-hit) orders ``m``.
    """
    c2 = s * (1.0 - s / 2.0)
    ys = np.array([C])
    pts = [ys]
    orders = [np.zeros(1, dtype=np.int64)]
    for m in range(1, M + 1):
        left = ys / s
        right = 1.0 - ys[ys >= c2] / s
        ys = np.concatenate((left, right))
        pts.append(ys)
        orders.append(np.full(len(ys), m, dtype=np.int64))
    return np.concatenate(pts), np.concatenate(orders)


def _forward_many(s: float, x: np.ndarray, n: int) -> np.ndarray:
    y = x.copy()
    for _ in range(n):
        y = np.where(y <= C, s * y, s * (1.0 - y))
    return y


def oracle_p_points_C0(params: TentParams, N: int, p: int) -> OraclePointList:
    """p-points of the arc of ``C0`` on which ``x_{-N}`` runs through ``[0, c]``.

    Deeper coordinates follow the left branch, so the arc starts at ``0bar``.
    A point with ``T^m(t) = c`` has ``x_{-(N-m)} = c`` and level ``N - p - m``.
    """
    if p >= N:
        raise ValueError("depth must exceed p")
    M = N - p
    s = params.s
    pts, ords = _preimage_tree(s, M)
    keep = pts <= C
    t = pts[keep]
    lev = M - ords[keep]
    order = np.argsort(t, kind="stable")
    t, lev = t[order], lev[order]
    proj = _forward_many(s, t, M)
    t = np.concatenate(([0.0], t))
    lev = np.concatenate(([-1], lev))
    proj = np.concatenate(([np.nan], proj))
    return OraclePointList("C0", t, lev, proj, N, p)


def oracle_p_points_R(params: TentParams, N: int, p: int) -> OraclePointList:
    """p-points of the arc of ``R`` on which ``x_{-N}`` runs through ``[c, c_1]``.

    Deeper coordinates follow ``y -> 1 - y/s`` towards ``r``; the endpoint
    ``t = c_1`` is the point whose next deeper coordinate is ``c``.
    """
    if p >= N:
        raise ValueError("depth must exceed p")
    M = N - p
    s = params.s
    pts, ords = _preimage_tree(s, M)
    keep = (pts >= C) & (pts <= s / 2)
    t = np.concatenate((pts[keep], [s / 2]))
    lev = np.concatenate((M - ords[keep], [M + 1]))
    order = np.argsort(t, kind="stable")
    t, lev = t[order], lev[order]
    proj = _forward_many(s, t, M)
    r = s / (s + 1.0)
    k = int(np.searchsorted(t, r))
    t = np.insert(t, k, r)
    lev = np.insert(lev, k, -1)
    proj = np.insert(proj, k, np.nan)
    if lev[k - 1] != 0:  # orient so that the left neighbour of rho has level 0
        t, lev, proj = t[::-1].copy(), lev[::-1].copy(), proj[::-1].copy()
    return OraclePointList("R", t, lev, proj, N, p)


# --- high-precision local oracle ----------------------------------------------


@lru_cache(maxsize=16)
def refine_slope_mp(symbols: tuple, dps: int = 80) -> mpmath.mpf:
    """Slope to working precision ``dps`` digits.

    The slope is the root of ``g(s) = s/2`` where ``g`` composes the inverse
    branches along the kneading symbols, backwards from ``c``.  The symbol
    count should exceed ``dps / log10(s)`` so that the seed is forgotten.
    A binary64 bisection supplies the starting point.
    """
    L = len(symbols)
    s0 = _float_bisect(symbols[: min(L, 48)])
    with mpmath.workdps(dps + 10):
        half = mpmath.mpf(1) / 2

        def g(s):
            y = half
            for j in range(L - 1, -1, -1):
                y = y / s if symbols[j] == 0 else 1 - y / s
            return y - s / 2

        if s0 >= 2.0 - 1e-12:
            return mpmath.mpf(2)
        s = mpmath.findroot(g, (mpmath.mpf(s0) - mpmath.mpf("1e-9"), mpmath.mpf(s0) + mpmath.mpf("1e-9")),
                            solver="secant", tol=mpmath.mpf(10) ** (-2 * dps))
    return s


def _float_bisect(symbols: tuple) -> float:
    nu = KneadingSequence(tuple(symbols))
    n = len(symbols)
    if _parity_cmp(_itinerary(2.0, n), nu, n) == 0:
        return 2.0
    lo, hi = SQRT2, 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        d = _parity_cmp(_itinerary(mid, n), nu, n)
        if d == 0:
            return mid
        if d < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def oracle_local_end(nu: KneadingSequence, side: str, M: int, min_points: int = 120,
                     dps: int = 80) -> tuple[list[int], list[float]]:
    """Levels and projections of the p-points closest to the level-``M`` end.

    The arc is the one of :func:`oracle_p_points_C0` / ``_R`` at depth
    ``M = N - p``; only parameters within ``w`` of ``t = c`` are enumerated,
    by splitting ``[c - w, c]`` (C0) or ``[c, c + w]`` (R) at preimages of
    ``c``.  ``w`` doubles until ``min_points`` points are found.  The list is
    ordered from the level-``M`` endpoint inwards.
    """
    s = refine_slope_mp(tuple(nu.symbols[: _extra_symbols(dps) + 64]), dps)
    with mpmath.workdps(dps):
        half = mpmath.mpf(1) / 2
        w = s ** (-M) / 8
        while True:
            pts = _split_enumerate(s, half, w, side, M)
            if len(pts) >= min_points or w > mpmath.mpf("0.05"):
                break
            w *= 2
        pts.sort(key=lambda item: abs(item[0] - half))
        levels = [lv for _, lv, _ in pts]
        proj = [float(pr) for _, _, pr in pts]
    return levels, proj


def _split_enumerate(s, half, w, side, M):
    def T(x):
        return s * x if x <= half else s * (1 - x)

    if side == "C0":
        lo, hi = half - w, half
    else:
        lo, hi = half, half + w
    found = [(half, M, None)]
    stack = [(lo, hi, lo, hi, 0)]
    while stack:
        a, b, fa, fb, m = stack.pop()
        while m < M:
            fa, fb = T(fa), T(fb)
            m += 1
            if (fa - half) * (fb - half) < 0:
                x = a + (half - fa) / (fb - fa) * (b - a)
                found.append((x, M - m, None))
                stack.append((x, b, half, fb, m))
                b, fb = x, half
    out = []
    for x, lv, _ in found:
        y = x
        for _ in range(M):
            y = T(y)
        out.append((x, lv, y))
    return out
