import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatequi.errors import BadParams, NotReciprocalInteger
from flatequi.measures import (box_of, cantor_lambda, empirical_cells, folner_defect, make_measure,
                               partition_weights, phi_integral, phi_sup, phi_sup_bound, phi_value,
                               richness_check, snap_delta, symmetric_difference)

THIRD = {"lam": Fraction(1, 3)}


def test_uniform_ball_mass():
    rho = make_measure("uniform", 2)
    for delta in (0.01, 0.1, 0.3):
        assert rho.ball_mass([0.5, 0.5], delta) == pytest.approx(min(1, (2 * delta) ** 2), rel=1e-12)


def test_cantor_lambda_for_dimension():
    assert cantor_lambda(0.9) == pytest.approx(2 ** (-1 / 0.9), rel=1e-15)
    assert cantor_lambda(0.9) == pytest.approx(0.4629, abs=1e-4)
    rho = make_measure("cantor_product", 2, params={"dimension": 0.9})
    assert rho.factor_dimension() == pytest.approx(0.9, rel=1e-12)


def test_point_mass_ball():
    rho = make_measure("point_mass", 2)
    assert rho.ball_mass([0.0, 0.0], 0.01) == 1.0
    assert rho.ball_mass([0.5, 0.5], 0.01) == 0.0


def test_bad_params():
    with pytest.raises(BadParams):
        make_measure("cantor_product", 1, params={"lam": 0.6})
    with pytest.raises(BadParams):
        make_measure("fractal", 1)
    with pytest.raises(BadParams):
        make_measure("uniform", -1)
    with pytest.raises(BadParams):
        make_measure("atomic_net", 1, params={"spacing": 0.3})


def test_richness_examples():
    rep = richness_check(make_measure("uniform", 2), 0.1, 0.1, 4)
    assert rep.max_mass == pytest.approx(0.04, rel=1e-12)
    assert rep.threshold == pytest.approx(4 * 0.1 ** 1.9, rel=1e-12)
    assert rep.verdict
    rho = make_measure("cantor_product", 1, params=THIRD)
    for m in (2, 3, 4):
        rep = richness_check(rho, 3.0 ** -m, 0.0, 1.0)
        # the cantor cdf is only Holder at endpoints: 1e-16 in x moves mass by ~1e-10
        assert rep.max_mass == pytest.approx(2.0 ** -m, rel=1e-8)
    pm = make_measure("point_mass", 2)
    for delta in (0.5, 0.1, 1e-3):
        assert not richness_check(pm, delta, 1.0, 1.0).verdict


def test_cantor_d2_frozen():
    rho = make_measure("cantor_product", 2, params={"dimension": 0.9})
    rep = richness_check(rho, 1 / 81, 0.2, 4.0)
    assert rep.max_mass == pytest.approx(9.804898726569343e-4, rel=1e-9)
    assert rep.b_min == pytest.approx(2.671259909351999, rel=1e-9)
    assert rep.verdict


def test_partition_examples():
    pw = partition_weights(make_measure("uniform", 1), Fraction(1, 2))
    assert pw.weights == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}
    pw = partition_weights(make_measure("cantor_product", 1, params=THIRD), Fraction(1, 3))
    assert pw.factor == (Fraction(1, 2), Fraction(0), Fraction(1, 2))
    with pytest.raises(NotReciprocalInteger):
        partition_weights(make_measure("uniform", 1), 0.3)


@pytest.mark.parametrize("kind,params", [("uniform", {}), ("cantor_product", {"dimension": 0.9}),
                                         ("atomic_net", {"spacing": 0.25}), ("point_mass", {})])
def test_weights_sum_to_one_exactly(kind, params):
    for d in (1, 2):
        pw = partition_weights(make_measure(kind, d, params=params), Fraction(1, 9))
        assert pw.total() == 1
        assert all(c >= 0 for c in pw.weights.values())
        assert phi_integral(pw) == 1


def test_phi_values():
    pw = partition_weights(make_measure("uniform", 1), Fraction(1, 2))
    assert phi_value(pw, 0.3, [0.05]) == pytest.approx(4.0)
    assert phi_value(pw, Fraction(3, 10), [Fraction(1, 20)]) == 4
    assert phi_value(pw, 0.3, [0.2]) == 0.0      # in [k delta + delta/4, (k+1) delta)
    assert phi_value(pw, 1.5, [0.05]) == 0.0


def test_phi_sup_bounds():
    rho = make_measure("cantor_product", 2, params={"dimension": 0.9})
    pw = partition_weights(rho, Fraction(1, 81))
    # sup phi = 4^d max c_k delta^-d, as an exact identity
    assert phi_sup(pw) == 4 ** 2 * pw.max_weight * 81 ** 2
    assert float(phi_sup(pw)) == pytest.approx(32.0, rel=1e-3)
    assert phi_sup_bound(pw, 4, Fraction(1, 5))
    assert not phi_sup_bound(pw, Fraction(1, 2), Fraction(1, 5))


@pytest.mark.parametrize("frac", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_folner_exact(frac):
    pw = partition_weights(make_measure("uniform", 2), Fraction(1, 8))
    tau = Fraction(1, 20)
    rt = frac * tau
    for k in [(0, 0), (3, 5), (7, 7)]:
        assert folner_defect(pw, k, rt) == 2 * rt * pw.box_volume


def test_boxes_disjoint():
    pw = partition_weights(make_measure("uniform", 2), Fraction(1, 4))
    keys = list(pw.weights)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            A, B = box_of(pw, a), box_of(pw, b)
            assert symmetric_difference(A, B) == 2 * pw.box_volume


def test_empirical_cells_match_weights():
    rho = make_measure("cantor_product", 1, params={"dimension": 0.9}, seed=3)
    pw = partition_weights(rho, Fraction(1, 9))
    n = 10 ** 6
    counts = empirical_cells(rho, Fraction(1, 9), n, np.random.default_rng(5))
    p = np.array([float(c) for c in pw.factor])
    se = np.sqrt(n * p * (1 - p)) + 1e-12
    assert np.all(np.abs(counts - n * p) <= 4 * se)


def test_snap_delta():
    d, note = snap_delta(0.013)
    assert d == Fraction(1, 77) and note
    assert snap_delta(0.25) == (Fraction(1, 4), None)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.sampled_from(["uniform", "atomic_net", "point_mass"]))
def test_sum_one_property(N, kind):
    params = {"spacing": 0.5} if kind == "atomic_net" else {}
    pw = partition_weights(make_measure(kind, 1, params=params), Fraction(1, N))
    assert pw.total() == 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0.001, 0.5))
def test_ball_mass_in_unit_interval(c, r):
    rho = make_measure("cantor_product", 2, params={"lam": 0.3})
    m = rho.ball_mass([c, 1 - c], r)
    assert 0 <= m <= 1


def test_samples_in_support():
    rho = make_measure("cantor_product", 3, params=THIRD)
    pts = rho.sample(2000, np.random.default_rng(0))
    assert pts.shape == (2000, 3)
    # every coordinate avoids the middle third
    assert not np.any((pts > 1 / 3 + 1e-12) & (pts < 2 / 3 - 1e-12))
