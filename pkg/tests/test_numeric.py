"""Slope solving, critical orbit distances, eta tables and the p-point oracle."""

import math

import mpmath
import numpy as np
import pytest

from tentlim.folding import iterate, seed_c0, seed_r
from tentlim.harness import symbolic_end
from tentlim.kneading import KneadingMap, kneading_sequence
from tentlim.numeric import (
    SlopeError,
    TentParams,
    backward_orbit,
    closest_precritical,
    eta_table,
    forward_orbit,
    is_local_max,
    closest_return_check,
    log_dist_to_c,
    log_dist_zeta,
    oracle_local_end,
    oracle_p_points_C0,
    oracle_p_points_R,
    precritical_bracket,
    refine_slope_mp,
    solve_slope,
    tent,
    verify_eta_table,
)

FIB_SLOPE = 1.7292119317087213

# ln|c_{S_k} - c| for k = 3..15, frozen from a 6000-digit orbit
LOG_DIST = [-3.98, -6.72, -11.1, -18.22, -29.72, -48.34, -78.46, -127.21, -206.07,
            -333.68, -540.15, -874.22, -1414.77]

# c_n frozen from a 200-digit orbit at the Fibonacci slope
CRIT = {
    1: 0.8646059658543607,
    9: 0.8625201011032878,
    14: 0.8645798740116459,
    22: 0.8646059447448654,
    35: 0.8646059658541471,
    43: 0.8625201011203663,
}


def test_tent_basics():
    assert tent(2.0, 0.5) == 1.0
    assert tent(1.5, 0.25) == pytest.approx(0.375)
    assert forward_orbit(2.0, 3)[:3] == pytest.approx([1.0, 0.0, 0.0])


def test_fibonacci_slope(P):
    assert P.s == pytest.approx(FIB_SLOPE, abs=1e-13)
    assert math.sqrt(2) < P.s < 2


def test_slope_root_by_independent_mp_orbit(P, kd):
    """The mp orbit at the refined slope reproduces 300 kneading symbols."""
    s = refine_slope_mp(tuple(kd.nu.symbols[:600]), 200)
    with mpmath.workdps(200):
        x = s / 2
        for j in range(1, 301):
            assert (1 if x > mpmath.mpf(1) / 2 else 0) == kd.nu[j], j
            x = s * min(x, 1 - x)


def test_slope_two():
    nu = kneading_sequence(KneadingMap((0,) * 250), 200)
    assert solve_slope(nu).s == 2.0


def test_slope_rejects_low_entropy():
    nu = kneading_sequence(KneadingMap(tuple(range(20))), 2**19)  # period doubling, entropy zero
    with pytest.raises(SlopeError):
        solve_slope(nu)


def test_critical_values(P):
    for n, v in CRIT.items():
        assert P.point(n) == pytest.approx(v, abs=1e-12), n
    # the c_1 cluster lies above the 9/43 cluster
    assert min(P.point(n) for n in (1, 14, 22, 35)) > max(P.point(n) for n in (9, 43))
    assert P.point(0) == 0.5


def test_params_json(P):
    doc = P.to_json()
    assert doc["s"] == P.s and doc["N"] == P.N and len(doc["orbit"]) == P.N


def test_backward_orbit_hits_c(P, kd):
    pts = backward_orbit(P.s, kd.nu, 12)
    assert len(pts) >= 12
    assert np.all((pts >= 0) & (pts <= P.s / 2 + 1e-12))


def test_log_distances_frozen(P, kd):
    got = [round(log_dist_to_c(P, kd.S[k]), 2) for k in range(3, 16)]
    assert got == pytest.approx(LOG_DIST, abs=0.011)


def test_log_distance_agrees_with_float_where_resolvable(P, kd):
    for n in (5, 8, 13):
        assert log_dist_to_c(P, n) == pytest.approx(math.log(abs(P.point(n) - 0.5)), abs=1e-6)


@pytest.mark.parametrize("k", range(3, 16))
def test_closest_return_inequalities(P, kd, k):
    r = closest_return_check(P, kd.Q, kd.S, k)
    assert r["first"] and r["second"]


@pytest.mark.parametrize("k", range(3, 11))
def test_precritical_bracket(P, kd, k):
    r = precritical_bracket(P, kd.S, k, kd.Q)
    assert r["inside"] and r["lowest"]


def test_closest_precritical_points(P, kd):
    for k in range(2, 6):
        z, z2 = closest_precritical(P, kd.S, k)
        assert z + z2 == pytest.approx(1.0)
        y = z
        for _ in range(kd.S[k]):
            y = tent(P.s, y)
        assert y == pytest.approx(0.5, abs=1e-9)
        assert math.log(abs(z - 0.5)) == pytest.approx(log_dist_zeta(P, kd.S, k), abs=1e-6)


@pytest.mark.parametrize("n", range(2, 20))
def test_local_max_by_finite_difference(P, kd, n):
    h = 1e-9
    mid = 0.5
    for _ in range(n):
        mid = tent(P.s, mid)
    sides = []
    for x in (0.5 - h, 0.5 + h):
        for _ in range(n):
            x = tent(P.s, x)
        sides.append(x)
    assert is_local_max(kd.nu, n) == (max(sides) < mid)


def test_eta_table_verifies(P, kd):
    tab = eta_table(P, kd.S, 60, 0.05, 4)
    assert verify_eta_table(P, kd.S, tab, 60) == []
    assert all(0 < tab[n] <= tab.cap for n in range(1, 61))


@pytest.mark.parametrize("M", range(1, 15))
def test_oracle_matches_generator(P, kd, M):
    p = 8
    for orc_fn, seed in ((oracle_p_points_C0, seed_c0()), (oracle_p_points_R, seed_r())):
        orc = orc_fn(P, M + p, p)
        assert list(orc.levels) == iterate(seed, kd, M).entries.tolist()
        finite = orc.levels >= 0
        err = np.abs(orc.proj[finite] - P.points[orc.levels[finite]])
        assert err.max() < 1e-7


def test_oracle_rejects_zero_depth(P):
    with pytest.raises(ValueError):
        oracle_p_points_C0(P, 8, 8)


@pytest.mark.parametrize("side", ["C0", "R"])
def test_deep_local_oracle(P, kd, side):
    lv, proj = oracle_local_end(kd.nu, side, 30, 120)
    assert len(lv) >= 120
    assert symbolic_end(kd, side, 30, len(lv)) == lv
    assert max(abs(a - P.point(b)) for a, b in zip(proj, lv)) < 1e-7


def test_from_slope_builds_orbit():
    T = TentParams.from_slope(2.0, 5)
    assert T.point(1) == 1.0 and T.point(2) == 0.0
