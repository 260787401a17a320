import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatequi import saddle
from flatequi.errors import BudgetExceeded
from flatequi.homology import build_basis
from flatequi.surface import (
    BUNDLED, apply_matrix, geodesic_matrix, horocycle_matrix, l_shape, lattice_torus,
    square_torus, torus_two_marked,
)

from oracles import primitive_vectors, sorted_holonomies


@pytest.mark.parametrize("R", [1, 2.5, 5, 10])
def test_square_torus_matches_oracle(R):
    got = saddle.enumerate(square_torus(), R)
    want = primitive_vectors(1, 1j, R)
    assert len(got) == len(want)
    assert sorted_holonomies(sc.holonomy for sc in got) == sorted_holonomies(want)


def test_small_counts():
    assert len(saddle.enumerate(square_torus(), 1)) == 4
    assert len(saddle.enumerate(square_torus(), 2.5)) == 16


@pytest.mark.parametrize("R", [1, 3, 6])
def test_l_shape_three_prongs_per_direction(R):
    # all corners of the three squares are the one cone point of angle 6*pi,
    # so each primitive direction carries three distinct connections
    got = saddle.enumerate(l_shape(), R)
    assert len(got) == 3 * len(primitive_vectors(1, 1j, R))


@pytest.mark.parametrize("R", [1, 2.5, 5])
def test_two_marked_points(R):
    # marked points sit on the lattice Z/2 x Z; connections are its primitive vectors
    got = saddle.enumerate(torus_two_marked(), R)
    assert len(got) == 2 * len(primitive_vectors(0.5, 1j, R))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 2), st.floats(-1, 1), st.floats(0.5, 2), st.floats(0.5, 4))
def test_lattice_tori(a, b, c, R):
    x = lattice_torus(a, b + 1j * c)
    got = saddle.holonomies(x, R)
    want = primitive_vectors(a, b + 1j * c, R)
    # skip radii too close to a vector length for a fair comparison
    if any(abs(abs(z) - R) < 1e-9 for z in want):
        return
    assert sorted_holonomies(got) == sorted_holonomies(want)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_orientation_symmetry_and_chains(name):
    x = BUNDLED[name]()
    conns = saddle.enumerate(x, 4)
    keys = {(round(sc.holonomy.real, 9), round(sc.holonomy.imag, 9), sc.start, sc.end) for sc in conns}
    for sc in conns:
        assert (round(-sc.holonomy.real, 9), round(-sc.holonomy.imag, 9), sc.end, sc.start) in keys
        assert sc.length > 0
        assert x.holonomy[list(sc.chain)].sum() == pytest.approx(sc.holonomy, abs=1e-12)
        assert x.vertex_of[sc.chain[0]] == sc.start
        assert x.edge_end(sc.chain[-1]) == sc.end


def test_sorted_and_deterministic():
    x = apply_matrix(l_shape(), geodesic_matrix(0.4) @ horocycle_matrix(0.3))
    a = saddle.enumerate(x, 5)
    b = saddle.enumerate(x, 5)
    assert a == b
    lengths = np.array([sc.length for sc in a])
    assert np.all(np.diff(lengths) > -1e-12)


def test_monotone_in_radius():
    x = apply_matrix(l_shape(), geodesic_matrix(0.2))
    counts = [len(saddle.enumerate(x, R)) for R in (0.5, 1, 2, 4, 8)]
    assert counts == sorted(counts)


def test_systole():
    assert saddle.systole(square_torus()) == pytest.approx(1.0)
    for t in (0.5, 2, 4):
        x = apply_matrix(square_torus(), geodesic_matrix(t))
        assert saddle.systole(x) == pytest.approx(math.exp(-t), rel=1e-12)
    assert saddle.systole(l_shape()) == pytest.approx(1.0)


def test_systole_agrees_with_enumeration():
    x = apply_matrix(l_shape(), geodesic_matrix(1.1) @ horocycle_matrix(0.37))
    conns = saddle.enumerate(x, 3)
    assert saddle.systole(x) == pytest.approx(min(sc.length for sc in conns), rel=1e-12)


def test_budget():
    with pytest.raises(BudgetExceeded):
        saddle.enumerate(square_torus(), 50, budget=100)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 1.5), st.floats(0, 1), st.sampled_from(["l_shape", "torus_two_marked"]))
def test_image_property(t, s, name):
    x = BUNDLED[name]()
    M = geodesic_matrix(t) @ horocycle_matrix(s)
    R = 3.0
    image = saddle.holonomies(apply_matrix(x, M), R)
    counts = {}
    for z in image:
        k = (round(z.real, 7), round(z.imag, 7))
        counts[k] = counts.get(k, 0) + 1
    mapped = {}
    for sc in saddle.enumerate(x, R * math.exp(t) * (1 + s)):
        z = sc.holonomy
        w = complex(M[0, 0] * z.real + M[0, 1] * z.imag, M[1, 0] * z.real + M[1, 1] * z.imag)
        if abs(w) <= R - 1e-7:
            k = (round(w.real, 7), round(w.imag, 7))
            mapped[k] = mapped.get(k, 0) + 1
    for k, m in mapped.items():
        assert counts.get(k, 0) == m


def test_connection_classes_match_chains():
    x = apply_matrix(l_shape(), geodesic_matrix(1.5))
    basis = build_basis(x)
    hols, classes = saddle.connection_classes(x, basis, 4)
    periods = x.holonomy[list(basis.cycles)]
    assert np.allclose(classes @ periods, hols, atol=1e-12)
    assert len(hols) == len(saddle.enumerate(x, 4))


def test_cache_round_trip(tmp_path):
    x = l_shape()
    conns = saddle.enumerate(x, 2.5)
    f = tmp_path / "c.tsv"
    saddle.write_connections(f, x.content_hash(), 2.5, conns)
    h, R, back = saddle.read_connections(f, x)
    assert h == x.content_hash() and R == 2.5
    assert back == conns
    cache = saddle.ConnectionCache(tmp_path / "cache")
    first = cache.get(x, 2.5)
    files = list((tmp_path / "cache").iterdir())
    assert len(files) == 1
    again = saddle.ConnectionCache(tmp_path / "cache").get(x, 2.5)
    assert list(again) == list(first) == conns
