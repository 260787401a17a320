import math
import pickle
from fractions import Fraction

import numpy as np
import pytest

import oracles
from flatequi.equidistribution import (INV_ZETA2, combined_stderr, correlation_decay,
                                       extra_average, extra_minus_thickened, folner_ratios,
                                       make_test_function, rate_fit, reference_integral,
                                       second_moment_split, siegel_integral, siegel_integral_2d,
                                       tau, theorem_window, thickened_average, translate_average)
from flatequi.errors import BadParams, InsufficientPoints, MethodMismatch
from flatequi.foliation import period_box
from flatequi.measures import make_measure, partition_weights
from flatequi.surface import (apply_matrix, flow, geodesic_matrix, l_shape, lattice_torus,
                              normalize_area, square_torus)

SIEGEL = {"a": 1.0, "b": 2.0, "smoothing": 0.1}


@pytest.fixture(scope="module")
def siegel():
    return make_test_function("siegel_annulus", SIEGEL)


@pytest.fixture(scope="module")
def torus_box():
    return period_box(square_torus(), 0.4)


@pytest.fixture(scope="module")
def generic_box():
    # u_1 fixes the square lattice, so the extra average would equal the thickened one there
    return period_box(normalize_area(lattice_torus(1, 0.3 + 1.1j)), 0.4)


@pytest.fixture(scope="module")
def lbox():
    return period_box(normalize_area(l_shape()), 0.25)


def test_constant_function():
    f = make_test_function("constant")
    assert f(square_torus()) == 1.0 and f.c1_bound == 1.0


def test_siegel_on_square_torus(siegel):
    # the 16 primitive vectors up to length 2: 4 of length 1 (chi = 0), 4 of length sqrt2 (chi = 1),
    # 8 of length sqrt5 > 2
    vecs = oracles.primitive_vectors(1, 1j, 2.0)
    want = sum(oracles.plateau(abs(v), 1, 2, 0.1) for v in vecs)
    assert siegel(square_torus()) == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(4.0, abs=1e-12)


def test_plateau_matches_oracle(siegel):
    for r in np.linspace(0.9, 2.1, 61):
        assert float(siegel.profile(r)) == pytest.approx(oracles.plateau(r, 1, 2, 0.1), abs=1e-14)


def test_bump_vanishes_below_threshold():
    f = make_test_function("systole_bump", {"center": 0.5, "width": 0.2})
    y = apply_matrix(square_torus(), geodesic_matrix(2.0))   # systole e^-2 < 0.3
    assert f(y) == 0.0
    assert f.support_threshold == pytest.approx(0.3)


def test_bad_params():
    with pytest.raises(BadParams):
        make_test_function("siegel_annulus", {"a": 2, "b": 1})
    with pytest.raises(BadParams):
        make_test_function("siegel_annulus", {"a": 1, "b": 2, "smoothing": 0})
    with pytest.raises(BadParams):
        make_test_function("wave")


def test_test_function_pickles(siegel):
    assert pickle.loads(pickle.dumps(siegel)) == siegel


def test_reference_constant():
    one = make_test_function("constant")
    for method in ("haar", "ergodic"):
        e = reference_integral(one, "torus", method, 100, 1)
        assert e.value == 1.0 and e.stderr == 0.0


def test_siegel_formula(siegel):
    v, err = siegel_integral(siegel)
    v2, _ = siegel_integral_2d(siegel)
    assert v == pytest.approx(v2, rel=1e-8)
    assert v == pytest.approx(INV_ZETA2 * 2 * math.pi * 1.5 * 0.9, rel=0.02)   # ~ area of the annulus
    e = reference_integral(siegel, "torus", "siegel_formula")
    assert e.value == v


def test_haar_vs_siegel(siegel):
    h = reference_integral(siegel, "torus", "haar", 100_000, 3)
    s = reference_integral(siegel, "torus", "siegel_formula")
    assert abs(h.value - s.value) <= 3 * combined_stderr(h, s)


def test_method_mismatch(siegel):
    bump = make_test_function("systole_bump", {"center": 0.5, "width": 0.2})
    with pytest.raises(MethodMismatch):
        reference_integral(bump, "torus", "siegel_formula")
    with pytest.raises(MethodMismatch):
        reference_integral(siegel, "stratum", "haar")
    with pytest.raises(MethodMismatch):
        correlation_decay(siegel, siegel, "stratum", [0.0], 10, 0)


def test_translate_constant(torus_box):
    one = make_test_function("constant")
    e = translate_average(torus_box, make_measure("point_mass", 0), one, 3.0, 1000, 0)
    assert e.value == 1.0 and e.stderr == 0.0


def test_translate_t0_point_mass(lbox):
    f = make_test_function("systole_bump", {"center": 0.5, "width": 0.3})
    rho = make_measure("point_mass", lbox.d)
    e = translate_average(lbox, rho, f, 0.0, 1500, 4)
    grid = (np.arange(2000) + 0.5) / 2000
    direct = np.mean([f(flow(lbox.base, 0.0, s)) for s in grid])
    assert abs(e.value - direct) <= 3 * e.stderr + 1e-3


def test_translate_torus_siegel(siegel, torus_box):
    e = translate_average(torus_box, make_measure("point_mass", 0), siegel, 6.0, 100_000, 8)
    s = reference_integral(siegel, "torus", "siegel_formula")
    assert abs(e.value - s.value) <= 3 * combined_stderr(e, s)


def test_worker_partition_determinism(siegel, torus_box):
    rho = make_measure("point_mass", 0)
    a = translate_average(torus_box, rho, siegel, 2.0, 20_000, 9, workers=1)
    b = translate_average(torus_box, rho, siegel, 2.0, 20_000, 9, workers=2)
    c = translate_average(torus_box, rho, siegel, 2.0, 20_000, 9, workers=1)
    assert a == b == c


def test_tau_and_window():
    assert tau(2, 2) == pytest.approx(math.exp(-3), rel=1e-15)
    assert tau(2, 2) == pytest.approx(0.049787, abs=1e-6)
    lo, hi = theorem_window(Fraction(1, 81))
    assert (lo, hi) == pytest.approx((math.log(81) / 8, math.log(81) / 4))
    assert lo == pytest.approx(0.549, abs=1e-3) and hi == pytest.approx(1.099, abs=1e-3)
    with pytest.raises(BadParams):
        tau(1.0, 1.5)


def test_extra_average_constant(torus_box):
    one = make_test_function("constant")
    pw = partition_weights(make_measure("point_mass", 0), Fraction(1, 10))
    assert extra_average(torus_box, pw, one, 1.0, 2.0, 100, 0).value == 1.0


def test_extra_vs_thickened_shared_draws(siegel, generic_box):
    pw = partition_weights(make_measure("point_mass", 0), Fraction(1, 10))
    A = extra_average(generic_box, pw, siegel, 3.0, 2.0, 20_000, 5)
    T = thickened_average(generic_box, pw, siegel, 3.0, 20_000, 5)
    D = extra_minus_thickened(generic_box, pw, siegel, 3.0, 2.0, 20_000, 5)
    assert abs(D.value - (A.value - T.value)) <= 3 * combined_stderr(A, T, D)
    # the boundary-strip estimator resolves differences of size tau
    assert D.stderr < 0.1 * combined_stderr(A, T)


def test_square_torus_extra_equals_thickened(siegel, torus_box):
    pw = partition_weights(make_measure("point_mass", 0), Fraction(1, 10))
    D = extra_minus_thickened(torus_box, pw, siegel, 2.0, 2.0, 5000, 5)
    assert abs(D.value) < 1e-12


def test_folner_ratio_bounded(siegel, generic_box):
    pw = partition_weights(make_measure("point_mass", 0), Fraction(1, 10))
    rows = folner_ratios(generic_box, pw, siegel, [0.5, 1.0, 2.0, 3.0, 4.0, 5.0], N=20_000,
                         seed=6, c_f=16.0)
    ratios = [r for _, _, r in rows]
    assert max(ratios) <= 1.0
    assert ratios[-1] <= max(ratios[:-1])


def test_second_moment_split(siegel, generic_box):
    pw = partition_weights(make_measure("point_mass", 0), Fraction(1, 10))
    sm = second_moment_split(generic_box, pw, siegel, 2.0, 2.0, 20_000, 7)
    assert sm.near.value + sm.far.value == pytest.approx(sm.full.value, rel=1e-12)
    assert sm.near_fraction == pytest.approx(2 * sm.q - sm.q ** 2)
    assert sm.near_fraction <= 2 * math.exp(-2.0 / 4)
    assert sm.A.value ** 2 <= sm.full.value + 3 * (2 * abs(sm.A.value) * sm.A.stderr + sm.full.stderr)


def test_correlation_t0_is_variance(siegel):
    est = correlation_decay(siegel, siegel, "torus", [0.0], 50_000, 11)
    from flatequi.lattice import gauss_reduce, haar_lattices
    from flatequi.equidistribution import _chunks
    vals = []
    for n, ss in _chunks(50_000, 11, 4096 * 4):
        v1, v2 = gauss_reduce(*haar_lattices(n, np.random.default_rng(ss)))
        vals.append(siegel.on_lattices(v1, v2)[0])
    vals = np.concatenate(vals)
    assert est[0].value == pytest.approx(vals.var(), rel=1e-9)
    assert est[0].t == 0.0 and est[0].seed == 11


def test_correlation_series_length_and_decay(siegel):
    ts = [0.0, 8.0]
    est = correlation_decay(siegel, siegel, "torus", ts, 1_000_000, 12)
    assert [e.t for e in est] == ts
    assert all(e.seed == 12 for e in est)
    assert abs(est[1].value) < 3 * est[1].stderr


def test_rate_fit_exact():
    ts = np.linspace(0, 4, 9)
    fit = rate_fit([(t, math.exp(-0.5 * t)) for t in ts])
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_rate_fit_noisy_interval():
    rng = np.random.default_rng(13)
    ts = np.linspace(0, 4, 20)
    D = np.exp(-0.5 * ts) * (1 + 0.05 * rng.normal(size=20))
    fit = rate_fit(list(zip(ts, D)))
    from scipy import stats
    q = stats.t.ppf(0.975, fit.n_points - 2)
    assert abs(fit.slope + 0.5) <= q * fit.slope_stderr


def test_rate_fit_window_and_floor():
    lo, hi = theorem_window(Fraction(1, 81))
    pts = [(t, math.exp(-t), 0.0) for t in np.linspace(0, 2, 41)]
    fit = rate_fit(pts, (lo, hi))
    assert fit.window == (lo, hi)
    assert 0.0 <= fit.r_squared <= 1.0
    noisy = [(t, 0.01, 0.1) for t in (1, 2, 3, 4)]
    with pytest.raises(InsufficientPoints):
        rate_fit(noisy)
    with pytest.raises(InsufficientPoints):
        rate_fit([(0.0, 1.0), (1.0, 0.5)])
