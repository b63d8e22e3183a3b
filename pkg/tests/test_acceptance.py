"""The eleven acceptance criteria, each at its stated tolerance and time bound.

Every test calls the library directly and compares with frozen values; the
``suite`` command runs the same checks through the harness.  A PASS/FAIL
line per criterion is printed in the terminal summary.
"""
import time
from collections import Counter

import pytest

from tentlim.chains import build_chain, verify_chain
from tentlim.folding import (
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
)
from tentlim.harness import GOLDEN_B, GOLDEN_C1, GOLDEN_C2, GOLDEN_C3, compare_fp_r, symbolic_end
from tentlim.kneading import KneadingMap, cutting_times
from tentlim.numeric import (
    closest_return_check,
    oracle_local_end,
    oracle_p_points_C0,
    oracle_p_points_R,
)
from tentlim.symmetry import (
    ArcWindow,
    Source,
    SymmetryClass,
    basic,
    classify_link_symmetric,
    decompose_quasi_chain,
    link_symmetric_windows,
    quasi,
)

P_LEVEL = 8


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.mark.criterion(1, "Fibonacci cutting times")
def test_cutting_times():
    Q = KneadingMap.fibonacci(10)
    with Timer() as t:
        S = cutting_times(Q)
    assert [S[k] for k in range(8)] == [1, 2, 3, 5, 8, 13, 21, 34]
    assert t.seconds < 1e-3


@pytest.mark.criterion(2, "FP(C0) prefix from generator and oracle")
def test_c0_prefix(P, kd):
    want = [INF, 0, 1, 0, 2, 0, 1]
    with Timer() as t:
        symbolic = iterate(seed_c0(), kd, 3).entries[:7].tolist()
        oracle = list(oracle_p_points_C0(P, 3 + P_LEVEL, P_LEVEL).levels)[:7]
    assert symbolic == want
    assert oracle == want
    assert t.seconds < 1.0


@pytest.mark.criterion(3, "salient levels on FP(C0) and FP(R)")
def test_salient_levels(kd):
    with Timer() as t:
        c0 = fp_c0(kd, 20)
        c0_levels = [int(c0.entries[i]) for i in salient_indices(c0).right][:20]
        r = fp_r_two_sided(kd, 12)
        idx = salient_indices(r)
        right = [int(r.entries[i]) for i in idx.right][:12]
        left = [int(r.entries[i]) for i in idx.left][:12]
    assert c0_levels == list(range(1, 21))
    assert right == [2 * i - 1 for i in range(1, 13)]
    assert left == [2 * i for i in range(1, 13)]
    assert t.seconds < 10


@pytest.mark.criterion(4, "golden window occurs in the generated pattern")
def test_golden_window(kd):
    with Timer() as t:
        loc = locate_window(kd, GOLDEN_B)
    assert loc is not None
    seen = loc.context[loc.offset:loc.offset + len(GOLDEN_B)].tolist()
    assert seen in (list(GOLDEN_B), list(GOLDEN_B[::-1]))
    assert t.seconds < 30


@pytest.mark.criterion(5, "worked classifications under the grouped chain")
def test_worked_classifications(located):
    with Timer() as t:
        src, off = located(GOLDEN_B)
        x = lambda k: off + k - 2  # noqa: E731
        short = quasi(src, x(2), x(6))
        long = quasi(src, x(2), x(30))
        first = decompose_quasi_chain(ArcWindow(*_whole(located, GOLDEN_C1)))
        second = decompose_quasi_chain(ArcWindow(*_whole(located, GOLDEN_C2)))
        third = decompose_quasi_chain(ArcWindow(*_whole(located, GOLDEN_C3)))
        short_basic = short.ok and basic(src, x(2), x(6), short)
        long_basic = long.ok and basic(src, x(2), x(30), long)
    assert short.ok and short_basic
    assert long.ok and not long_basic
    assert first.direction == "decreasing" and first.levels(_whole(located, GOLDEN_C1)[0]) == [77, 43, 22, 9, 1]
    assert second.direction == "decreasing" and second.levels(_whole(located, GOLDEN_C2)[0]) == [56, 35, 22, 14, 1]
    assert third is None
    assert t.seconds < 60


def _whole(located, window):
    src, off = located(window)
    return src, off, off + len(window) - 1


@pytest.mark.criterion(6, "chain at p = 8, eps = 0.05, depth 150 has all four properties")
def test_chain_verification(P, kd):
    with Timer() as t:
        spec = build_chain(P, kd.S, 8, 0.05, 150)
        rep = verify_chain(spec, P, kd, 150)
    assert rep.passed == {"diameter": True, "unique_link": True, "neighbours_inside": True, "escape": True,
                          "structure": True}
    assert rep.checked_triples > 0
    assert t.seconds < 60


@pytest.mark.criterion(7, "symbolic patterns equal the numeric oracle")
def test_oracle_equivalence(P, kd):
    worst = 0.0
    with Timer() as t:
        for side, seed, oracle in (("C0", seed_c0(), oracle_p_points_C0), ("R", seed_r(), oracle_p_points_R)):
            for M in range(1, 23):
                orc = oracle(P, M + P_LEVEL, P_LEVEL)
                assert list(orc.levels) == iterate(seed, kd, M).entries.tolist(), (side, M)
                worst = max([worst] + [abs(x - P.point(lv)) for lv, x in zip(orc.levels, orc.proj) if lv != INF])
            # beyond 22 steps the full oracle list is too long; compare the deep end
            for M in (25, 40, 60):
                levels, proj = oracle_local_end(kd.nu, side, M, 150)
                assert symbolic_end(kd, side, M, len(levels)) == levels, (side, M)
                worst = max([worst] + [abs(x - P.point(lv)) for x, lv in zip(proj, levels)])
    assert worst <= 1e-7
    assert t.seconds < 60


@pytest.mark.criterion(8, "closest return inequalities for 3 <= k <= 15")
def test_closest_return(P, kd):
    with Timer() as t:
        rows = [closest_return_check(P, kd.Q, kd.S, k) for k in range(3, 16)]
    assert all(r["first"] for r in rows)
    assert all(r["second"] for r in rows)
    assert t.seconds < 5


@pytest.mark.criterion(9, "bridges agree with the kappa predicate")
def test_bridges(kd):
    with Timer() as t:
        scans = {"R": bridge_scan(fp_r_two_sided(kd, 12), kd, 12), "C0": bridge_scan(fp_c0(kd, 20), kd, 12)}
    for side, scan in scans.items():
        assert scan.disagreements() == [], side
        conclusive = [v for v in scan.results.values() if v is not Bridge.INCONCLUSIVE]
        assert len(conclusive) == 78, side  # every pair a < b <= 12
    assert t.seconds < 120


@pytest.mark.criterion(10, "every link-symmetric window up to length 40 is classified")
def test_totality(kd, grouped_links, located):
    counts = Counter()
    with Timer() as t:
        sources = [Source(iterate(seed_c0(), kd, 22).entries, grouped_links)]
        sources += [located(w)[0] for w in (GOLDEN_C2, GOLDEN_C3)]
        for src in sources:
            for i, j in link_symmetric_windows(src, 40):
                counts[classify_link_symmetric(ArcWindow(src, i, j)).cls] += 1
    assert counts[SymmetryClass.NONE] == 0
    assert counts[SymmetryClass.P_SYMMETRIC] == 1_000_039
    assert counts[SymmetryClass.MAXIMAL_DECREASING] == 1042
    assert counts[SymmetryClass.MAXIMAL_INCREASING] == 1046
    assert counts[SymmetryClass.CONCAT_INC_DEC] == 146
    assert t.seconds < 600


@pytest.mark.criterion(11, "FP(R) of Q(k)=max(k-2,0) and max(k-3,0) diverge stably")
def test_divergence():
    fib, other = KneadingMap.fibonacci(60), KneadingMap.with_offset(3, 60)
    with Timer() as t:
        runs = [compare_fp_r(fib, other, 8) for _ in range(2)]
        swapped = compare_fp_r(other, fib, 8)
    for rep in runs + [swapped]:
        assert rep.diverged
        assert (rep.index, rep.side, rep.block) == (5, "left", 1)
    assert t.seconds < 60
