import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatequi.errors import GluingMismatch, NonSimplePolygon, SingularMatrix
from flatequi.surface import (
    BUNDLED, PolygonSpec, apply_matrix, area, deform, delaunay_retriangulate, from_polygon_spec,
    geodesic_matrix, horocycle_matrix, is_delaunay, l_shape, lattice_torus, normalize_area,
    square_torus, torus_two_marked,
)
from flatequi import saddle

from oracles import gauss_reduce


def test_square_torus_invariants():
    x = square_torus()
    assert x.genus == 1
    assert x.marked_count == 1
    assert x.cone_points == [(0, 0)]
    assert area(x) == pytest.approx(1.0, abs=1e-15)


def test_l_shape_is_h2():
    x = l_shape()
    assert (x.genus, x.marked_count, x.stratum) == (2, 1, (2,))
    assert x.cone_angles[0] == pytest.approx(6 * math.pi)
    assert area(x) == pytest.approx(3.0, abs=1e-14)


def test_two_marked_torus():
    x = torus_two_marked()
    assert (x.genus, x.marked_count, x.stratum) == (1, 2, (0, 0))


def test_perturbed_side_is_rejected():
    spec = PolygonSpec([[0, 1 + 1e-3, 1 + 1j, 1j]], [(0, 2), (1, 3)])
    with pytest.raises(GluingMismatch):
        from_polygon_spec(spec)


def test_gluing_errors():
    with pytest.raises(GluingMismatch):
        from_polygon_spec(PolygonSpec([[0, 1, 1 + 1j, 1j]], [(0, 2)]))
    with pytest.raises(GluingMismatch):
        from_polygon_spec(PolygonSpec([[0, 1, 1 + 1j, 1j]], [(0, 2), (0, 3)]))


def test_non_simple_and_clockwise_polygons():
    bowtie = [0, 1 + 1j, 1, 1j]
    with pytest.raises(NonSimplePolygon):
        from_polygon_spec(PolygonSpec([bowtie], [(0, 2), (1, 3)]))
    with pytest.raises(NonSimplePolygon):
        from_polygon_spec(PolygonSpec([[0, 1j, 1 + 1j, 1]], [(0, 2), (1, 3)]))


def test_hexagon_torus_has_two_marked_points():
    hexagon = [complex(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)) for k in range(6)]
    spec = PolygonSpec([hexagon], [(0, 3), (1, 4), (2, 5)])
    x = from_polygon_spec(spec)
    assert x.genus == 1 and x.marked_count == 2
    assert [a for _, a in x.cone_points] == [0, 0]


def test_unglued_triangle_side():
    with pytest.raises(GluingMismatch):
        from_polygon_spec(PolygonSpec([[0, 2, 1 + 1j]], [(0, 1)]))


def test_area_and_identity_action():
    for make in BUNDLED.values():
        x = make()
        y = apply_matrix(x, np.eye(2))
        assert np.array_equal(x.holonomy, y.holonomy)
        z = apply_matrix(x, geodesic_matrix(1.3))
        assert area(z) == pytest.approx(area(x), rel=1e-12)


def test_singular_matrix():
    with pytest.raises(SingularMatrix):
        apply_matrix(square_torus(), [[1, 2], [2, 4]])
    with pytest.raises(SingularMatrix):
        apply_matrix(square_torus(), [[1, 0], [0, -1]])


def test_geodesic_on_periods():
    x = apply_matrix(square_torus(), geodesic_matrix(math.log(2)))
    hol = x.holonomy[0::2]
    assert np.any(np.isclose(hol, 2.0, atol=1e-14))
    assert np.any(np.isclose(hol, 0.5j, atol=1e-14))


def test_horocycle_gives_square_lattice():
    x = apply_matrix(square_torus(), horocycle_matrix(1.0))
    y = delaunay_retriangulate(x)
    v1, v2 = gauss_reduce(y.holonomy[0], y.holonomy[2])
    assert sorted([abs(v1), abs(v2)]) == pytest.approx([1.0, 1.0])
    assert abs((v1.conjugate() * v2).imag) == pytest.approx(1.0)


def test_delaunay_keeps_square_torus():
    x = square_torus()
    assert delaunay_retriangulate(x) is x
    assert is_delaunay(x)


def test_delaunay_exposes_short_edge():
    x = apply_matrix(square_torus(), geodesic_matrix(3))
    y = delaunay_retriangulate(x)
    assert is_delaunay(y)
    assert np.abs(y.holonomy).min() == pytest.approx(math.exp(-3), rel=1e-12)
    assert saddle.systole(x) == pytest.approx(saddle.systole(y), rel=1e-12)


def test_normalize_area():
    y = normalize_area(l_shape())
    assert area(y) == pytest.approx(1.0, rel=1e-14)


def test_deform_repairs_with_flips():
    x = square_torus()
    delta = np.zeros(x.n_half_edges, dtype=complex)
    # shear by 3 along the real parts: u_3 acting on the holonomy
    sheared = apply_matrix(x, horocycle_matrix(3.0))
    y = deform(x, sheared.holonomy - x.holonomy + delta)
    assert area(y) == pytest.approx(1.0, rel=1e-12)
    assert saddle.systole(y) == pytest.approx(1.0, rel=1e-12)


matrices = st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * math.pi))


def _sl2(t, s, th):
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return geodesic_matrix(t) @ horocycle_matrix(s) @ R


@settings(max_examples=40, deadline=None)
@given(matrices, matrices, st.sampled_from(sorted(BUNDLED)))
def test_action_composes(m1, m2, name):
    x = BUNDLED[name]()
    M, N = _sl2(*m1), _sl2(*m2)
    lhs = apply_matrix(apply_matrix(x, M), N).holonomy
    rhs = apply_matrix(x, N @ M).holonomy
    scale = np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.sampled_from(sorted(BUNDLED)))
def test_flow_round_trip(t, name):
    x = BUNDLED[name]()
    y = apply_matrix(apply_matrix(x, geodesic_matrix(t)), geodesic_matrix(-t))
    assert np.abs(y.holonomy - x.holonomy).max() <= 1e-12 * np.abs(x.holonomy).max()


@settings(max_examples=30, deadline=None)
@given(matrices, st.sampled_from(sorted(BUNDLED)))
def test_closure_after_flips(m, name):
    x = apply_matrix(BUNDLED[name](), _sl2(*m))
    y = delaunay_retriangulate(x)
    e = y.holonomy[y.triangles]
    assert np.abs(e.sum(axis=1)).max() <= 1e-12 * max(1.0, np.abs(e).max())
    assert sum(a for _, a in y.cone_points) == 2 * y.genus - 2
    assert area(y) == pytest.approx(area(x), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3), st.floats(-2, 2), st.floats(0.3, 3))
def test_lattice_torus_gauss_bonnet(a, b, c):
    x = lattice_torus(a, b + 1j * c)
    assert x.genus == 1 and x.stratum == (0,)
    assert area(x) == pytest.approx(a * c, rel=1e-12)
