import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from quasifrac.compact_sets import CrackSet, midline_segment, oscillating_crack, strip_lattice
from quasifrac.errors import ConfigError, CrackOffLattice, MeshFailure
from quasifrac.slit_mesh import (
    CRACK,
    DIRICHLET,
    NEUMANN,
    DomainSpec,
    SlitMesh,
    build_mesh,
    export_mesh,
    raster_components,
    read_mesh_file,
    tip_refinement_boxes,
    validate_mesh,
)

LAT8 = strip_lattice(1 / 8)


def polyline(lat, pts):
    return CrackSet.from_polyline(lat, pts)


def test_empty_crack_unit_square():
    dom = DomainSpec.rectangle((0, 1, 0, 1))
    m = build_mesh(dom, None, h=0.25)
    assert m.slit_map == {}
    assert len(m.triangles) == 32 and m.num_nodes == 25
    assert m.components()[0] == 1
    rep = validate_mesh(m, raster_check=True)
    assert rep.passed, rep.failed()


def test_full_slit_two_components(strip_td):
    K = midline_segment(0, 1, LAT8)
    m = build_mesh(strip_td, K, h=1 / 8)
    assert m.components()[0] == 2
    assert validate_mesh(m, raster_check=True).passed


def test_interior_slit(strip_full):
    K = midline_segment(0.25, 0.75, LAT8)
    m = build_mesh(strip_full, K, h=1 / 16)
    assert m.components()[0] == 1
    tips = {LAT8.index(2, 8), LAT8.index(6, 8)}
    for p in K.nodes():
        g = int(np.nonzero((np.abs(m.nodes[: m.num_grid_nodes] - LAT8.position(p)) < 1e-12).all(axis=1))[0][0])
        ncopy = len(m.slit_map.get(g, (g,)))
        assert ncopy == (1 if p in tips else 2)
    assert validate_mesh(m, raster_check=True).passed


@pytest.mark.parametrize(
    "pts",
    [
        [(0.25, 0.0), (0.5, 0.25), (0.75, 0.25)],              # kinked, interior
        [(0.0, -0.5), (0.5, 0.0), (1.0, 0.5)],                  # boundary to boundary diagonal
        [(0.125, 0.125), (0.5, 0.125), (0.5, -0.25)],           # right-angle kink
    ],
)
def test_kinked_cracks_validate(strip_td, pts):
    K = polyline(LAT8, pts)
    m = build_mesh(strip_td, K, h=1 / 16)
    rep = validate_mesh(m, raster_check=True)
    assert rep.passed, rep.failed()


def test_t_junction(strip_td):
    K = midline_segment(0.25, 0.75, LAT8).union(polyline(LAT8, [(0.5, 0.0), (0.5, 0.5)]))
    m = build_mesh(strip_td, K, h=1 / 16)
    junction = [g for g, c in m.slit_map.items() if len(c) == 3]
    assert len(junction) == 1
    assert validate_mesh(m, raster_check=True).passed


def test_area_and_orientation(strip_td):
    K = oscillating_crack(4, strip_lattice(1 / 16))
    m = build_mesh(strip_td, K, h=1 / 32)
    assert np.all(m.areas() > 0)
    assert m.areas().sum() == pytest.approx(2.0, rel=1e-12)


def test_plus_minus_sides(strip_td):
    K = midline_segment(0.25, 0.75, LAT8)
    m = build_mesh(strip_td, K, h=1 / 16)
    centroids = m.nodes[m.triangles].mean(axis=1)
    for g, (plus, minus) in m.slit_map.items():
        for copy, sign in ((plus, 1), (minus, -1)):
            tris = np.nonzero((m.triangles == copy).any(axis=1))[0]
            assert np.all(np.sign(centroids[tris, 1]) == sign)


def test_corrupted_mesh_fails_side_consistency(strip_td):
    K = midline_segment(0.25, 0.75, LAT8)
    m = build_mesh(strip_td, K, h=1 / 16)
    g, (plus, minus) = next(iter(m.slit_map.items()))
    tri = m.triangles.copy()
    t = int(np.nonzero((tri == plus).any(axis=1))[0][0])
    tri[t][tri[t] == plus] = minus
    bad = SlitMesh(**{**m.__dict__, "triangles": tri, "_cache": {}})
    rep = validate_mesh(bad)
    assert not rep.checks["side_consistency"].passed


def test_crack_touching_dirichlet_boundary():
    dom = DomainSpec.rectangle((0, 1, -1, 1), ("left",))
    K = midline_segment(0, 0.5, LAT8)
    m = build_mesh(dom, K, h=1 / 16)
    corner = int(np.nonzero((np.abs(m.nodes - [0.0, 0.0]) < 1e-12).all(axis=1))[0][0])
    copies = m.slit_map[corner]
    assert len(copies) == 2
    assert not np.isin(copies, m.dirichlet_nodes).any()
    # Dirichlet edges on the left side remain on both sides of the touch point
    mids = 0.5 * (m.nodes[m.boundary_edges[:, 0]] + m.nodes[m.boundary_edges[:, 1]])
    left_d = mids[(m.boundary_tags == DIRICHLET)]
    assert (left_d[:, 1] > 0).any() and (left_d[:, 1] < 0).any()
    assert validate_mesh(m).passed


def test_tags(strip_td):
    K = midline_segment(0.25, 0.75, LAT8)
    m = build_mesh(strip_td, K, h=1 / 16)
    mids = 0.5 * (m.nodes[m.boundary_edges[:, 0]] + m.nodes[m.boundary_edges[:, 1]])
    crack = m.boundary_tags == CRACK
    assert np.allclose(mids[crack, 1], 0)
    assert crack.sum() == 2 * 8  # two faces of eight mesh edges
    side = np.isclose(mids[:, 0], 0) | np.isclose(mids[:, 0], 1)
    assert np.all(m.boundary_tags[side] == NEUMANN)
    tb = np.isclose(np.abs(mids[:, 1]), 1)
    assert np.all(m.boundary_tags[tb] == DIRICHLET)


def test_min_angle_failure(strip_td):
    with pytest.raises(MeshFailure):
        build_mesh(strip_td, None, h=1 / 4, refinement_boxes=[((0, 1, -0.1, 0.1), 100)], min_angle=5)


def test_overlapping_dirichlet_intervals():
    with pytest.raises(ConfigError, match=r"dirichlet\[1\]"):
        DomainSpec((0, 1, 0, 1), (("top", 0.0, 0.6), ("top", 0.5, 1.0)))


def test_refinement_and_tip_boxes(strip_full):
    K = midline_segment(0.25, 0.75, LAT8)
    boxes = tip_refinement_boxes(K, 0.1)
    assert len(boxes) == 4 and sorted(f for _, f in boxes) == [4, 4, 16, 16]
    m = build_mesh(strip_full, K, h=1 / 16, refinement_boxes=boxes)
    assert np.diff(m.xs).min() == pytest.approx(1 / 256)
    assert validate_mesh(m).passed


def test_export_round_trip(tmp_path, strip_td):
    K = midline_segment(0.25, 0.75, LAT8)
    m = build_mesh(strip_td, K, h=1 / 16)
    p = tmp_path / "mesh.txt"
    export_mesh(m, p)
    assert p.read_text().startswith("# quasifrac slit mesh v1; indices are 0-based")
    d = read_mesh_file(p)
    assert np.array_equal(d["triangles"], m.triangles)
    assert np.allclose(d["nodes"], m.nodes, rtol=0, atol=0)
    assert d["boundary_tags"].count("crack") == int((m.boundary_tags == CRACK).sum())


@st.composite
def lattice_walks(draw):
    lat = LAT8
    i, j = draw(st.integers(1, 7)), draw(st.integers(1, 15))
    steps = draw(st.lists(st.sampled_from([(1, 0), (0, 1), (1, 1), (-1, 1), (0, -1), (1, -1)]), min_size=1, max_size=6))
    pts = [(i, j)]
    for d in steps:
        ni, nj = pts[-1][0] + d[0], pts[-1][1] + d[1]
        if not lat.contains_ij(ni, nj) or (ni, nj) in pts:
            break
        pts.append((ni, nj))
    edges = {(min(lat.index(*a), lat.index(*b)), max(lat.index(*a), lat.index(*b))) for a, b in zip(pts, pts[1:])}
    try:
        return CrackSet(lat, frozenset(edges))
    except CrackOffLattice:  # the walk crossed its own diagonal
        assume(False)


@settings(max_examples=25, deadline=None)
@given(lattice_walks())
def test_random_walk_cracks_validate(K):
    dom = DomainSpec.rectangle((0, 1, -1, 1), ("bottom", "top"))
    if not K:
        return
    m = build_mesh(dom, K, h=1 / 16)
    rep = validate_mesh(m, raster_check=True)
    assert rep.passed, rep.failed()
    assert m.components()[0] == raster_components(dom, K, 1 / 64)
