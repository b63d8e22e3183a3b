"""Kneading maps, cutting times and the symbolic order of the critical orbit.

Everything here is exact integer / symbol arithmetic.  Indices follow the
usual conventions: ``Q(k)`` is defined for ``k >= 1``, cutting times are
``S_0 = 1 < S_1 < ...`` and the kneading sequence is indexed from 1, so that
``nu[j] == 1`` means ``c_j > c``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


class KneadingError(ValueError):
    """Raised for invalid kneading data (circular maps, bad JSON, ...)."""


class HorizonError(IndexError):
    """Raised when a query needs data beyond the stored horizon."""


@dataclass(frozen=True)
class KneadingMap:
    """A finite stretch ``Q(1..k_max)`` of a kneading map.

    ``values[k - 1]`` holds ``Q(k)``.  ``generator`` records how the values
    were produced; ``offset`` maps carry their shift in ``offset``.
    """

    values: tuple[int, ...]
    generator: str = "explicit"
    offset: int | None = None

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise KneadingError("kneading map needs at least Q(1)")
        if vals[0] != 0:
            raise KneadingError(f"Q(1) must be 0, got {vals[0]}")
        for k, q in enumerate(vals, start=1):
            if q < 0:
                raise KneadingError(f"Q({k}) = {q} is negative")
            if q >= k:
                raise KneadingError(
                    f"Q({k}) = {q} >= {k}: the cutting-time recursion would be circular")
        if self.generator == "fibonacci":
            expected = tuple(max(k - 2, 0) for k in range(1, len(vals) + 1))
            if vals != expected:
                raise KneadingError("values do not match the Fibonacci map")
        if self.generator == "offset":
            d = self.offset
            if d is None or d < 1:
                raise KneadingError("offset maps need an offset d >= 1")
            if vals != tuple(max(k - d, 0) for k in range(1, len(vals) + 1)):
                raise KneadingError(f"values do not match Q(k) = max(k-{d}, 0)")

    @property
    def k_max(self) -> int:
        return len(self.values)

    def __call__(self, k: int) -> int:
        # Q(0) = 0 is the usual convention, needed when Q(k) = 0 is fed back in.
        if k == 0:
            return 0
        if k < 0 or k > len(self.values):
            raise HorizonError(f"Q({k}) outside stored range 1..{len(self.values)}")
        return self.values[k - 1]

    @classmethod
    def fibonacci(cls, k_max: int) -> "KneadingMap":
        return cls(tuple(max(k - 2, 0) for k in range(1, k_max + 1)), "fibonacci")

    @classmethod
    def with_offset(cls, d: int, k_max: int) -> "KneadingMap":
        """``Q(k) = max(k - d, 0)``; ``d = 2`` is the Fibonacci map."""
        if d == 2:
            return cls.fibonacci(k_max)
        return cls(tuple(max(k - d, 0) for k in range(1, k_max + 1)), "offset", d)

    @classmethod
    def from_rule(cls, rule: Callable[[int], int], k_max: int) -> "KneadingMap":
        return cls(tuple(rule(k) for k in range(1, k_max + 1)), "rule")

    @classmethod
    def from_json(cls, doc: dict) -> "KneadingMap":
        """Build from ``{"kind": "explicit" | "fibonacci" | "offset", ...}``."""
        if not isinstance(doc, dict) or "kind" not in doc:
            raise KneadingError("kneading JSON must be an object with a 'kind' field")
        kind = doc["kind"]
        try:
            if kind == "explicit":
                return cls(tuple(doc["values"]))
            if kind == "fibonacci":
                return cls.fibonacci(int(doc["k_max"]))
            if kind == "offset":
                return cls.with_offset(int(doc["d"]), int(doc["k_max"]))
        except KeyError as exc:
            raise KneadingError(f"kneading JSON of kind {kind!r} lacks {exc}") from None
        raise KneadingError(f"unknown kneading map kind {kind!r}")

    def to_json(self) -> dict:
        if self.generator == "fibonacci":
            return {"kind": "fibonacci", "k_max": self.k_max}
        if self.generator == "offset":
            return {"kind": "offset", "d": self.offset, "k_max": self.k_max}
        return {"kind": "explicit", "values": list(self.values)}


@dataclass(frozen=True)
class CuttingTimes:
    """Cutting times ``S_0..S_kmax`` (arbitrary-precision integers)."""

    s_values: tuple[int, ...]

    def __post_init__(self):
        s = self.s_values
        if not s or s[0] != 1:
            raise KneadingError("cutting times must start with S_0 = 1")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise KneadingError("cutting times must be strictly increasing")

    def __getitem__(self, k: int) -> int:
        if k < 0 or k >= len(self.s_values):
            raise HorizonError(f"S_{k} outside stored range 0..{len(self.s_values) - 1}")
        return self.s_values[k]

    def __len__(self) -> int:
        return len(self.s_values)

    def __iter__(self):
        return iter(self.s_values)

    @property
    def k_max(self) -> int:
        return len(self.s_values) - 1

    def is_cutting_time(self, n: int) -> bool:
        if n > self.s_values[-1]:
            raise HorizonError(f"{n} exceeds the largest stored cutting time")
        return n in self._set

    @property
    def _set(self) -> frozenset:
        cached = self.__dict__.get("_cached_set")
        if cached is None:
            cached = frozenset(self.s_values)
            object.__setattr__(self, "_cached_set", cached)
        return cached

    def index_of(self, n: int) -> int | None:
        """Return ``k`` with ``S_k = n`` or None."""
        try:
            return self.s_values.index(n)
        except ValueError:
            return None


def cutting_times(Q: KneadingMap, k_max: int | None = None) -> CuttingTimes:
    """``S_0 = 1`` and ``S_k = S_{k-1} + S_{Q(k)}``."""
    if k_max is None:
        k_max = Q.k_max
    if k_max > Q.k_max:
        raise HorizonError(f"k_max={k_max} exceeds the stored kneading map ({Q.k_max})")
    S = [1]
    for k in range(1, k_max + 1):
        q = Q(k)
        if q >= k:  # also guarded by KneadingMap, kept for hand-built objects
            raise KneadingError(f"Q({k}) = {q} makes the recursion circular")
        S.append(S[-1] + S[q])
    return CuttingTimes(tuple(S))


def beta(n: int, S: CuttingTimes) -> int:
    """``beta(n) = n - max{S_k : S_k < n}`` for ``n >= 2``."""
    if n < 2:
        raise ValueError(f"beta is defined for n >= 2, got {n}")
    if n > S.s_values[-1]:
        raise HorizonError(f"n={n} exceeds the last stored cutting time {S.s_values[-1]}")
    best = 1
    for s_k in S.s_values:
        if s_k < n:
            best = s_k
        else:
            break
    return n - best


def beta_orbit(n: int, S: CuttingTimes) -> list[int]:
    """``n, beta(n), beta^2(n), ..., 1``."""
    out = [n]
    while out[-1] >= 2:
        out.append(beta(out[-1], S))
    return out


@dataclass(frozen=True)
class HofbauerLevel:
    n: int
    beta_n: int  # 0 stands for the left endpoint 0 of D_1 = [0, c_1]


def hofbauer_level(n: int, S: CuttingTimes) -> HofbauerLevel:
    if n == 1:
        return HofbauerLevel(1, 0)
    return HofbauerLevel(n, beta(n, S))


def _lex_ge(a: Sequence[int], b: Sequence[int]) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return x > y
    return True


@dataclass(frozen=True)
class AdmissibilityResult:
    admissible: bool
    first_violation: int | None = None

    def __bool__(self) -> bool:
        return self.admissible


def is_admissible(Q: KneadingMap, k_max: int | None = None) -> AdmissibilityResult:
    """Hofbauer's lexicographic condition, truncated at the stored horizon.

    For each ``k`` the two tails ``Q(k+j)`` and ``Q(Q(Q(k))+j)`` are compared
    for every ``j`` at which both are still stored.
    """
    if k_max is None:
        k_max = Q.k_max
    K = Q.k_max
    for k in range(1, k_max + 1):
        q2 = Q(Q(k))
        length = min(K - k, K - q2)
        left = [Q(k + j) for j in range(1, length + 1)]
        right = [Q(q2 + j) for j in range(1, length + 1)]
        if not _lex_ge(left, right):
            return AdmissibilityResult(False, k)
    return AdmissibilityResult(True, None)


def is_fibonacci_like(Q: KneadingMap, k_max: int | None = None, k_0: int = 3) -> bool:
    """Eventually non-decreasing and ``Q(k+1) > Q(Q(k)+1)`` on ``[k_0, k_max]``."""
    if k_max is None:
        k_max = Q.k_max
    for k in range(k_0, k_max):
        if Q(k + 1) < Q(k):
            return False
        if Q(k) + 1 > Q.k_max:
            raise HorizonError(f"Q(Q({k})+1) needs Q beyond the stored horizon")
        if not Q(k + 1) > Q(Q(k) + 1):
            return False
    return True


@dataclass(frozen=True)
class KneadingSequence:
    """Symbols ``nu_1..nu_n`` of the itinerary of ``c_1`` (1 = right of c)."""

    symbols: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, j: int) -> int:
        """One-based access: ``nu[j]`` is the symbol of ``c_j``."""
        if j < 1 or j > len(self.symbols):
            raise HorizonError(f"nu_{j} outside stored range 1..{len(self.symbols)}")
        return self.symbols[j - 1]

    def text(self) -> str:
        return "".join(map(str, self.symbols))


def kneading_sequence(Q: KneadingMap, n_max: int, check_admissible: bool = True) -> KneadingSequence:
    """Block construction: each block ``S_{k-1}+1..S_k`` copies the first
    ``S_{Q(k)}`` symbols with the final symbol flipped."""
    if check_admissible:
        adm = is_admissible(Q)
        if not adm:
            raise KneadingError(f"kneading map is not admissible (first violation at k={adm.first_violation})")
    S = cutting_times(Q)
    nu = [1]
    k = 1
    while len(nu) < n_max:
        if k > Q.k_max:
            raise HorizonError(
                f"{n_max} symbols need more than the {Q.k_max} stored kneading values")
        block = nu[:S[Q(k)]]
        block[-1] = 1 - block[-1]
        nu.extend(block)
        k += 1
    return KneadingSequence(tuple(nu[:n_max]))


class Order(enum.Enum):
    LESS = "less"
    GREATER = "greater"
    UNDECIDED = "undecided"


def compare_points(m: int, n: int, nu: KneadingSequence) -> Order:
    """Order of ``c_m`` against ``c_n`` from their itineraries.

    Returns ``Order.UNDECIDED`` if the itineraries agree up to the stored
    horizon.
    """
    if m == n:
        raise ValueError("compare_points needs two distinct indices")
    if m < 1 or n < 1:
        raise ValueError("indices must be positive")
    flips = 0
    N = len(nu)
    j = 0
    while m + j <= N and n + j <= N:
        a, b = nu[m + j], nu[n + j]
        if a != b:
            greater = a > b
            if flips % 2:
                greater = not greater
            return Order.GREATER if greater else Order.LESS
        flips += a
        j += 1
    return Order.UNDECIDED


def lowest_precritical_order(k: int, Q: KneadingMap, S: CuttingTimes | None = None) -> int:
    """Index ``Q(k+1)`` of the closest precritical point next to ``c_{S_k}``."""
    if k + 1 > Q.k_max:
        raise HorizonError(f"Q({k + 1}) outside stored range")
    return Q(k + 1)


@dataclass(frozen=True)
class KappaData:
    kappa: int

    @property
    def excluded(self) -> frozenset:
        return frozenset(range(1, self.kappa - 3, 2))

    def in_lambda(self, n: int) -> bool:
        """Membership in ``N minus {1, 3, ..., kappa-4}``."""
        if n < 1:
            raise ValueError("Lambda_kappa is a set of positive integers")
        return n not in self.excluded


def kappa_data(nu: KneadingSequence) -> KappaData:
    for j in range(3, len(nu) + 1):
        if nu[j] == 0:
            if j % 2 == 0:
                raise KneadingError(f"first j > 2 with c_j < c is even ({j}); the sequence is not realisable")
            return KappaData(j)
    raise HorizonError("no c_j < c with j > 2 inside the stored kneading sequence")


@dataclass(frozen=True)
class KneadingData:
    """Bundle of a kneading map with its cutting times and kneading sequence.

    The folding generator needs all three; building them together keeps the
    horizons consistent.
    """

    Q: KneadingMap
    S: CuttingTimes
    nu: KneadingSequence

    @classmethod
    def build(cls, Q: KneadingMap, n_symbols: int = 4096) -> "KneadingData":
        S = cutting_times(Q)
        n_symbols = min(n_symbols, S.s_values[-1])
        return cls(Q, S, kneading_sequence(Q, n_symbols))

    def cut_table(self, upto: int) -> list[bool]:
        """Boolean table ``t[n] = (n is a cutting time)`` for ``0 <= n <= upto``."""
        if upto > self.S.s_values[-1]:
            raise HorizonError(f"cutting times known only up to {self.S.s_values[-1]}")
        table = [False] * (upto + 1)
        for s_k in self.S.s_values:
            if s_k <= upto:
                table[s_k] = True
        return table


def fibonacci_data(k_max: int = 40, n_symbols: int = 4096) -> KneadingData:
    return KneadingData.build(KneadingMap.fibonacci(k_max), n_symbols)


def enumerate_kneading_maps(k_max: int) -> Iterable[KneadingMap]:
    """All maps with ``Q(1) = 0`` and ``Q(k) < k`` for ``k <= k_max``."""
    ranges = [range(k) for k in range(2, k_max + 1)]
    for tail in itertools.product(*ranges):
        yield KneadingMap((0,) + tail)
