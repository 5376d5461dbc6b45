import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasifrac.compact_sets import (
    CrackSet,
    LatticeSpec,
    component_count,
    connected_components,
    crack_length,
    dilate,
    golab_report,
    hausdorff_distance,
    midline_segment,
    oscillating_crack,
    packed_crack,
    point_segment_distance,
    strip_lattice,
)
from quasifrac.errors import CrackOffLattice

LAT8 = strip_lattice(1 / 8)
DIAM = math.sqrt(5)


def sampled_hausdorff(A, B, per_seg=400):
    """Oracle: dense sampling of each set against exact point-segment distance."""

    def directed(X, Y):
        pts = np.concatenate([np.linspace(s[0], s[1], per_seg) for s in X])
        return point_segment_distance(pts, Y).min(axis=1).max()

    return max(directed(A, B), directed(B, A))


# strategies -----------------------------------------------------------------

def edge_lists(lattice, max_edges=6):
    def make(draw_ij):
        i, j, d = draw_ij
        di, dj = ((1, 0), (0, 1), (1, 1), (-1, 1))[d]
        if not lattice.contains_ij(i + di, j + dj):
            return None
        return (lattice.index(i, j), lattice.index(i + di, j + dj))

    one = st.tuples(
        st.integers(0, lattice.nx), st.integers(0, lattice.ny), st.integers(0, 3)
    ).map(make)
    return st.lists(one, max_size=max_edges).map(lambda es: [e for e in es if e is not None])


def cracks(lattice=LAT8, max_edges=6):
    def build(es):
        try:
            return CrackSet(lattice, frozenset(es))
        except CrackOffLattice:
            # drop one of each crossing pair by keeping only axis edges
            keep = [e for e in es if lattice.ij(e[0])[0] == lattice.ij(e[1])[0]
                    or lattice.ij(e[0])[1] == lattice.ij(e[1])[1]]
            return CrackSet(lattice, frozenset(keep))

    return edge_lists(lattice, max_edges).map(build)


# hausdorff ------------------------------------------------------------------

def test_hausdorff_conventions():
    K = midline_segment(0, 0.5, LAT8)
    E = CrackSet.empty(LAT8)
    assert hausdorff_distance(E, E) == 0.0
    assert hausdorff_distance(E, K) == pytest.approx(DIAM)
    assert hausdorff_distance(K, E) == pytest.approx(DIAM)
    assert hausdorff_distance(K, K) == 0.0


def test_hausdorff_points():
    assert hausdorff_distance(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]])) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_oscillating_distance_to_segment(n):
    lat = strip_lattice(1 / 64) if 64 % (2 * n) == 0 else strip_lattice(1 / (2 * n))
    K = oscillating_crack(n, lat)
    S = midline_segment(0, 1, lat)
    d = hausdorff_distance(K, S)
    assert d <= 1 / (2 * n) + 1e-12
    assert d == pytest.approx(sampled_hausdorff(K.segments(), S.segments()), abs=2e-3)


def test_hausdorff_needs_crossing_candidates():
    # The farthest point of A from B lies where two distance branches cross,
    # not at an endpoint or a perpendicular foot.
    A = np.array([[[0.0, 1.0], [2.0, 1.0]]])
    B = np.array([[[0.0, 0.0], [0.5, 0.0]], [[1.5, 0.0], [2.0, 0.0]]])
    exact = hausdorff_distance(A, B, diam=10)
    assert exact == pytest.approx(math.hypot(0.5, 1.0))
    assert exact == pytest.approx(sampled_hausdorff(A, B, 4001), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(cracks(), cracks())
def test_hausdorff_matches_sampling_oracle(A, B):
    if not A or not B:
        return
    d = hausdorff_distance(A, B)
    oracle = sampled_hausdorff(A.segments(), B.segments(), 200)
    assert oracle <= d + 1e-12
    assert d - oracle <= LAT8.spacing * math.sqrt(2) / 199 + 1e-12


@settings(max_examples=40, deadline=None)
@given(cracks(), cracks(), cracks())
def test_hausdorff_metric(A, B, C):
    assert hausdorff_distance(A, B) == hausdorff_distance(B, A)
    if A and B and C:
        assert hausdorff_distance(A, C) <= hausdorff_distance(A, B) + hausdorff_distance(B, C) + 1e-12
    if A and B and hausdorff_distance(A, B) == 0:
        assert A.edges == B.edges or (A.nodes() and sorted(A.nodes()) == sorted(B.nodes()))


# length and components ------------------------------------------------------

def test_lengths_from_examples():
    assert crack_length(CrackSet.empty(LAT8)) == 0
    assert crack_length(midline_segment(0, 1, LAT8)) == pytest.approx(1.0)
    for n in (1, 2, 4, 8, 16, 32):
        assert crack_length(oscillating_crack(n, strip_lattice(1 / 64))) == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(cracks(), cracks())
def test_length_monotone_and_additive(A, B):
    U = A.union(B)
    assert crack_length(A) <= crack_length(U) + 1e-12
    if not (A.edges & B.edges):
        assert crack_length(U) == pytest.approx(crack_length(A) + crack_length(B))


def test_component_examples():
    assert component_count(CrackSet.empty(LAT8)) == 0
    for n in (1, 3, 4, 7):
        assert component_count(oscillating_crack(n)) == n
    a, b, c = LAT8.index(1, 8), LAT8.index(2, 8), LAT8.index(3, 9)
    assert component_count(CrackSet(LAT8, frozenset({(a, b), (b, c)}))) == 1


@settings(max_examples=40, deadline=None)
@given(cracks(max_edges=8), st.randoms())
def test_components_invariant_under_reordering(K, rnd):
    es = list(K.edges)
    rnd.shuffle(es)
    K2 = CrackSet(K.lattice, frozenset((b, a) for a, b in es))
    assert component_count(K2) == component_count(K)
    lab = connected_components(K)
    for e1 in K.edges:
        for e2 in K.edges:
            if set(e1) & set(e2):
                assert lab.labels[e1] == lab.labels[e2]


# dilation -------------------------------------------------------------------

def test_dilation_examples():
    pt = np.array([[[0.0, 0.0], [0.0, 0.0]]])
    assert (0.5, 0.5) in dilate(pt, 1.0)
    seg = midline_segment(0, 1, LAT8)
    assert (0.5, 0.0) in dilate(seg, 0.0)
    assert (0.5, 0.2) not in dilate(seg, 0.1)


@settings(max_examples=25, deadline=None)
@given(cracks(), st.floats(0, 0.3), st.floats(0, 0.3))
def test_dilation_monotone(K, e1, e2):
    if not K:
        return
    e1, e2 = sorted((e1, e2))
    gx, gy = np.meshgrid(np.linspace(0, 1, 21), np.linspace(-1, 1, 41))
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    small, big = dilate(K, e1).contains(pts), dilate(K, e2).contains(pts)
    assert np.all(~small | big)


# families -------------------------------------------------------------------

def test_oscillating_one():
    K = oscillating_crack(1)
    assert sorted(map(tuple, K.maximal_segments().reshape(-1, 4).tolist())) == [(0.0, 0.0, 0.5, 0.0)]


def test_packed_two():
    K = packed_crack(2)
    segs = sorted(tuple(s.ravel()) for s in K.maximal_segments())
    gap = math.exp(-2)
    assert len(segs) == 2
    assert segs[0][0] == pytest.approx(0) and segs[1][0] == pytest.approx(0.5)
    assert abs(segs[0][2] - (0.5 - gap)) <= K.snap_error + 1e-12
    assert abs(segs[1][2] - (1 - gap)) <= K.snap_error + 1e-12
    assert K.snap_error <= K.lattice.spacing / 2


def test_family_rejects_unrepresentable():
    with pytest.raises(CrackOffLattice):
        oscillating_crack(8, strip_lattice(1 / 8))
    with pytest.raises(CrackOffLattice):
        packed_crack(5, strip_lattice(1 / 10))


# golab ----------------------------------------------------------------------

def test_golab_constant_sequence():
    K = midline_segment(0, 0.5, LAT8)
    r = golab_report([K, K, K], K)
    assert r.semicontinuous and r.limit_length == pytest.approx(r.liminf_estimate)


def test_golab_dichotomy():
    lat = strip_lattice(1 / 64)
    full = midline_segment(0, 1, lat)
    conn = golab_report([midline_segment(0, 1 - 1 / n, lat) for n in (2, 4, 8, 16, 32, 64)], full)
    assert conn.semicontinuous
    osc = golab_report([oscillating_crack(n, lat) for n in (4, 8, 16, 32)], full)
    assert not osc.semicontinuous
    assert osc.lengths == pytest.approx((0.5,) * 4)
    assert osc.limit_length == pytest.approx(1.0)


def test_golab_window():
    lat = strip_lattice(1 / 64)
    full = midline_segment(0, 1, lat)
    r = golab_report([oscillating_crack(8, lat)], full, U=(0, 0.25, -1, 1))
    assert r.limit_length == pytest.approx(0.25)
    assert r.lengths[0] == pytest.approx(0.125)


# serialization --------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(cracks())
def test_json_round_trip(K):
    text = K.to_json()
    assert CrackSet.from_json(text) == K
    assert CrackSet.from_json(text).to_json() == text


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeSpec.covering((0, 1, -1, 1), 0.3)
    with pytest.raises(CrackOffLattice):
        CrackSet(LAT8, frozenset({(0, 2)}))
    a, b, c, d = LAT8.index(0, 0), LAT8.index(1, 1), LAT8.index(1, 0), LAT8.index(0, 1)
    with pytest.raises(CrackOffLattice):
        CrackSet(LAT8, frozenset({(a, b), (c, d)}))
