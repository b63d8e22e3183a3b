"""Chain construction and verification of the four chain properties."""

import json

import numpy as np
import pytest

from tentlim.chains import (
    BuildLog,
    ChainError,
    ChainSpec,
    LinkAssignment,
    assign_links,
    build_chain,
    detect_turns,
    link_of_level,
    lowest_levels,
    spec_from_file,
    spec_to_file,
    stipulated_chain,
    verify_chain,
)
from tentlim.folding import iterate, locate_window, seed_c0
from tentlim.harness import GOLDEN_B, LINK_GROUPS
from tentlim.kneading import HorizonError


@pytest.fixture(scope="module")
def chain8(P, kd):
    log = BuildLog()
    spec = build_chain(P, kd.S, 8, 0.05, 150, log=log)
    return spec, log


def test_acceptance_chain_passes(P, kd, chain8):
    spec, log = chain8
    rep = verify_chain(spec, P, kd, 150)
    assert rep.ok, rep.to_json(5)
    assert rep.checked_triples > 400
    assert len(log.inserted) > 0 and len(log.skipped) > 0


def test_diameter_bound(P, chain8):
    spec, _ = chain8
    widths = np.diff(np.asarray(spec.boundaries)[:-1])
    assert widths.max() < P.s ** -8 * 0.05


def test_every_level_in_one_link(P, chain8):
    spec, _ = chain8
    for n in range(151):
        assert len(spec.links_containing(P.point(n))) == 1


def test_c1_cluster_shares_top_link(P, chain8):
    spec, _ = chain8
    A = assign_links(spec, P, 150)
    assert len({A(n) for n in (1, 14, 22, 35, 56, 77)}) == 1
    assert A(9) == A(43) != A(1)


@pytest.mark.parametrize("p,eps", [(2, 0.5), (4, 0.2), (6, 0.1), (10, 0.05)])
def test_smaller_chains_pass(P, kd, p, eps):
    spec = build_chain(P, kd.S, p, eps, 80)
    assert verify_chain(spec, P, kd, 80).ok


def test_link_parity_and_adjacency(P, chain8):
    spec, _ = chain8
    g = spec.boundaries
    # a point between two boundaries sits in an odd link only
    x = (g[10] + g[11]) / 2
    assert spec.links_containing(x) == [21]
    # a boundary sits in its even ball and not in the open neighbours
    assert spec.links_containing(g[10]) == [20]
    # near a boundary the ball overlaps its odd neighbour
    assert spec.links_containing(g[10] + spec.delta / 2) == [20, 21]
    for i in range(1, spec.n_links - 1):
        a, b = spec.interval(i), spec.interval(i + 1)
        assert a[1] > b[0]
        if i + 2 < spec.n_links:
            c = spec.interval(i + 2)
            assert a[1] <= c[0]


def test_spec_roundtrip(tmp_path, chain8):
    spec, _ = chain8
    path = tmp_path / "chain.json"
    spec_to_file(spec, str(path))
    assert spec_from_file(str(path)) == spec
    assert set(json.loads(path.read_text())) == {"p", "epsilon", "delta", "s", "boundaries"}


def test_spec_validation():
    with pytest.raises(ChainError):
        ChainSpec((0.1,), 1e-3, 0, 0.5, 1.7)
    with pytest.raises(ChainError):
        ChainSpec((0.2, 0.1), 1e-3, 0, 0.5, 1.7)
    with pytest.raises(ValueError):
        build_chain(None, None, 1, 1.5, 10)


def test_link_of_level_horizon():
    A = LinkAssignment((1, 3, 5))
    assert A(2) == 5 and link_of_level(A, 0) == 1
    with pytest.raises(HorizonError):
        A(3)
    assert lowest_levels(LinkAssignment((3, 3, 5, 3))) == {3: 0, 5: 2}


def test_stipulated_groups(P, grouped_links):
    A = grouped_links
    assert len({A(n) for n in LINK_GROUPS[0]}) == 1
    assert len({A(n) for n in LINK_GROUPS[1]}) == 1
    assert A(1) != A(9)
    others = [A(n) for n in range(0, 30) if n not in LINK_GROUPS[0] + LINK_GROUPS[1]]
    assert A(1) not in others and A(9) not in others


def test_stipulated_rejects_overlap(P):
    with pytest.raises(ChainError):
        stipulated_chain(P, [(1, 9), (14,)], 1e-2, 30)


def test_turns():
    A = LinkAssignment(tuple(range(10)))
    assert detect_turns([0, 2, 0], A) == [(1, 2, 2)]
    assert detect_turns([0, 1], A) == []
    with pytest.raises(HorizonError):
        detect_turns([0, 12, 0], A)


def test_turn_at_level_14_in_golden_window(kd, grouped_links):
    loc = locate_window(kd, GOLDEN_B)
    turns = detect_turns(loc.context, grouped_links)
    here = [t for t in turns if t[0] == loc.offset + 1]
    assert here == [(loc.offset + 1, grouped_links(1), 14)]


def test_turns_happen_in_level_link(kd, grouped_links):
    """Every local maximum turns inside the link of its own level."""
    fp = iterate(seed_c0(), kd, 14)
    for pos, link, level in detect_turns(fp, grouped_links):
        assert link == grouped_links(level)
