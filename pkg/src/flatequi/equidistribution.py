"""
Test functions, reference integrals and the Monte Carlo estimators.

Every estimator splits its ``N`` samples into fixed-size chunks, each with its
own stream spawned from ``SeedSequence(seed)``.  Chunks return
``(sum, sum of squares, count, capped)`` and are combined in chunk order, so
results do not depend on the number of worker processes.

One-point tori (lattices) take a vectorized route: the surface is replaced by
a reduced lattice basis and saddle connections by primitive vectors.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from .errors import (BadParams, DegenerateDeformation, InsufficientPoints, MethodMismatch)
from .homology import build_basis
from .lattice import (flow_batch, gauss_reduce, haar_lattices, is_lattice_surface, radial_sum,
                      torus_basis)
from .saddle import holonomies, systole
from .surface import deform, flow, normalize_area

log = logging.getLogger(__name__)

INV_ZETA2 = 6 / math.pi ** 2
CHUNK = 4096
SIEGEL_CAP = 0.05
MAX_RETRIES = 10
KINDS = ("constant", "siegel_annulus", "systole_bump")


# -- smooth building blocks ----------------------------------------------------

def _psi(x):
    """Smooth step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 1e-300, 1 - 1e-16)
    with np.errstate(over="ignore", divide="ignore"):
        f = np.exp(-1 / xc)
        g = np.exp(-1 / (1 - xc))
        out = f / (f + g)
    out = np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, out))
    return out


def plateau(r, a, b, smoothing):
    """1 on ``[a + smoothing, b - smoothing]``, 0 outside ``[a, b]``, smooth in between."""
    r = np.asarray(r, dtype=float)
    return _psi((r - a) / smoothing) * _psi((b - r) / smoothing)


def bump(u):
    """``exp(1 - 1/(1 - u^2))`` on ``|u| < 1``; maximum 1 at the origin."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1
    uu = np.where(inside, u, 0.0)
    return np.where(inside, np.exp(1 - 1 / (1 - uu ** 2)), 0.0)


def _bump_slope():
    # sup |B'| with B'(u) = -2u B(u) / (1 - u^2)^2
    g = lambda u: -(2 * u * math.exp(1 - 1 / (1 - u * u)) / (1 - u * u) ** 2)
    res = optimize.minimize_scalar(g, bounds=(0.0, 0.99), method="bounded", options={"xatol": 1e-12})
    return -res.fun


BUMP_SLOPE = _bump_slope()


# -- test functions --------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A concrete observable on surfaces.

    ``c1_bound`` is an analytic upper bound for the C^1 norm with respect to
    the systole (``None`` when the function is not bounded that way), and the
    function vanishes whenever the systole is below ``support_threshold``.
    """

    __test__ = False  # not a pytest class

    kind: str
    params: tuple = ()
    c1_bound: float | None = 1.0
    support_threshold: float = 0.0

    def param(self, name):
        return dict(self.params)[name]

    def profile(self, r):
        a, b, sm = self.param("a"), self.param("b"), self.param("smoothing")
        return plateau(r, a, b, sm)

    def of_systole(self, sys):
        c, w = self.param("center"), self.param("width")
        return bump((np.asarray(sys, dtype=float) - c) / w)

    def evaluate(self, x):
        """``(value, capped)`` at a surface; ``capped`` flags a systole below the cap."""
        if self.kind == "constant":
            return 1.0, False
        sys = systole(x)
        if self.kind == "systole_bump":
            return float(self.of_systole(sys)), False
        if sys < self.support_threshold:
            return 0.0, True
        hol = holonomies(x, self.param("b"))
        return float(self.profile(np.abs(hol)).sum()), False

    def __call__(self, x):
        return self.evaluate(x)[0]

    def on_lattices(self, v1, v2):
        """Values on a batch of reduced lattice bases, and the capped mask."""
        n = np.size(v1)
        if self.kind == "constant":
            return np.ones(n), np.zeros(n, dtype=bool)
        sys = np.abs(v1)
        if self.kind == "systole_bump":
            return self.of_systole(sys), np.zeros(n, dtype=bool)
        # exact for every lattice (thin ones cost nothing); the cap is only reported
        vals = radial_sum(v1, v2, self.profile, self.param("b"))
        return vals, sys < self.support_threshold


def make_test_function(kind, params=None):
    params = dict(params or {})
    if kind == "constant":
        return TestFunction("constant", (), 1.0, 0.0)
    if kind == "siegel_annulus":
        try:
            a, b = float(params["a"]), float(params["b"])
            sm = float(params.get("smoothing", 0.1))
        except KeyError as exc:
            raise BadParams(f"siegel_annulus needs {exc.args[0]}") from None
        if not 0 < a < b:
            raise BadParams("need 0 < a < b")
        if not sm > 0:
            raise BadParams("smoothing must be positive")
        if 2 * sm > b - a:
            raise BadParams("smoothing too large for the annulus")
        cap = float(params.get("cap", SIEGEL_CAP))
        items = (("a", a), ("b", b), ("smoothing", sm))
        return TestFunction("siegel_annulus", items, None, cap)
    if kind == "systole_bump":
        try:
            c, w = float(params["center"]), float(params["width"])
        except KeyError as exc:
            raise BadParams(f"systole_bump needs {exc.args[0]}") from None
        if not 0 < w <= c:
            raise BadParams("need 0 < width <= center")
        return TestFunction("systole_bump", (("center", c), ("width", w)),
                            1.0 + BUMP_SLOPE / w, c - w)
    raise BadParams(f"unknown test function {kind!r}")


# -- results --------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    N: int
    seed: int
    t: float | None = None
    method: str = ""
    capped: int = 0


def combined_stderr(*ests):
    return math.sqrt(sum(e.stderr ** 2 for e in ests))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    slope_stderr: float = float("nan")
    n_points: int = 0


def theorem_window(delta):
    """``(|log delta|/8, |log delta|/4)``."""
    L = abs(math.log(float(delta)))
    return L / 8, L / 4


def tau(t, l=2.0):
    """Length of the extra horocycle window, ``e^((1/l - 2) t)``."""
    if l < 2:
        raise BadParams("l must be at least 2")
    return math.exp((1 / l - 2) * t)


# -- Monte Carlo engine -----------------------------------------------------------

def _chunks(N, seed, chunk=CHUNK):
    n_chunks = max(1, -(-N // chunk))
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [chunk] * (n_chunks - 1) + [N - chunk * (n_chunks - 1)]
    return list(zip(sizes, seqs))


def _moments(vals, capped=0):
    vals = np.asarray(vals, dtype=float)
    return float(vals.sum()), float((vals * vals).sum()), int(vals.size), int(capped)


def _run(fn, args, N, seed, workers=1, chunk=CHUNK):
    """Sum the chunk moments of ``fn(n, seedseq, *args)`` in chunk order."""
    plan = _chunks(N, seed, chunk)
    if workers > 1 and len(plan) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_call, [(fn, n, ss, args) for n, ss in plan]))
    else:
        parts = [fn(n, ss, *args) for n, ss in plan]
    tot = np.zeros(2)
    cnt = capped = 0
    for s, s2, c, k in parts:
        tot += (s, s2)
        cnt += c
        capped += k
    return tot[0], tot[1], cnt, capped


def _call(job):
    fn, n, ss, args = job
    return fn(n, ss, *args)


def _estimate(sums, seed, t=None, method=""):
    s, s2, n, capped = sums
    mean = s / n
    var = max(s2 - s * s / n, 0.0) / (n - 1) if n > 1 else 0.0
    if capped:
        log.info("%d of %d samples had systole below the cap", capped, n)
    return Estimate(float(mean), math.sqrt(var / n), int(n), int(seed), t, method, int(capped))


def _exact_one(N, seed, t=None, method=""):
    return Estimate(1.0, 0.0, int(N), int(seed), t, method)


# -- reference integrals ----------------------------------------------------------

def siegel_integral(f):
    """``(1/zeta(2)) * int_{R^2} profile(|v|) dv`` and the quadrature error bound."""
    a, b = f.param("a"), f.param("b")
    val, err = integrate.quad(lambda r: float(f.profile(r)) * r, a, b, epsabs=1e-13, epsrel=1e-12,
                              limit=200)
    return INV_ZETA2 * 2 * math.pi * val, INV_ZETA2 * 2 * math.pi * err


def siegel_integral_2d(f):
    """The same integral by 2-D quadrature over the disc of radius ``b`` (a cross-check)."""
    b = f.param("b")
    g = lambda y, x: float(f.profile(math.hypot(x, y)))
    val, err = integrate.dblquad(g, -b, b, lambda x: -math.sqrt(max(b * b - x * x, 0.0)),
                                 lambda x: math.sqrt(max(b * b - x * x, 0.0)),
                                 epsabs=1e-10, epsrel=1e-10)
    return INV_ZETA2 * val, INV_ZETA2 * err


def _haar_chunk(n, ss, f):
    rng = np.random.default_rng(ss)
    v1, v2 = gauss_reduce(*haar_lattices(n, rng))
    vals, capped = f.on_lattices(v1, v2)
    return _moments(vals, capped.sum())


def generic_start(x, seed, scale=0.03):
    """A pseudo-random small deformation of ``x`` (real and imaginary parts), at unit area."""
    rng = np.random.default_rng(seed)
    basis = build_basis(x)
    e2b = basis.edge_to_basis.astype(float)
    z = rng.normal(size=basis.rank) + 1j * rng.normal(size=basis.rank)
    delta = e2b @ z
    delta *= scale / np.abs(delta).max()
    return normalize_area(deform(x, delta))


def ergodic_series(f, x0, N, burn_in=20, step=1.0):
    """``f`` along ``a_step``-orbit samples ``a_(k step) x0``, ``k = burn_in, ..., burn_in + N - 1``."""
    y = x0
    vals = np.empty(N)
    capped = 0
    for _ in range(burn_in):
        y = flow(y, step)
    for k in range(N):
        v, c = f.evaluate(y)
        vals[k] = v
        capped += c
        y = flow(y, step)
    return vals, capped


def batch_means(vals, n_batches=None):
    """Mean and batch-means standard error of a correlated series."""
    vals = np.asarray(vals, dtype=float)
    n = vals.size
    nb = n_batches or max(10, int(math.sqrt(n)))
    m = n // nb
    means = vals[: nb * m].reshape(nb, m).mean(axis=1)
    return float(vals.mean()), float(means.std(ddof=1) / math.sqrt(nb))


def reference_integral(f, space, method, N=10_000, seed=0, x0=None, burn_in=20, workers=1):
    """Reference value of ``int f dmu`` on the torus space or on a stratum.

    ``haar`` and ``siegel_formula`` need ``space="torus"``; ``ergodic`` averages
    along a unit-step geodesic orbit of ``x0`` (by default a pseudo-random
    deformation of the L-shaped surface, or of the square torus).
    """
    if space not in ("torus", "stratum"):
        raise BadParams(f"unknown space {space!r}")
    if method == "siegel_formula":
        if f.kind != "siegel_annulus" or space != "torus":
            raise MethodMismatch("siegel_formula needs a siegel_annulus function on the torus")
        val, err = siegel_integral(f)
        return Estimate(val, err, 0, int(seed), None, method)
    if method == "haar":
        if space != "torus":
            raise MethodMismatch("Haar sampling is only available on the torus")
        if f.kind == "constant":
            return _exact_one(N, seed, method=method)
        return _estimate(_run(_haar_chunk, (f,), N, seed, workers), seed, method=method)
    if method == "ergodic":
        if f.kind == "constant":
            return _exact_one(N, seed, method=method)
        if x0 is None:
            from .surface import l_shape, square_torus
            base = square_torus() if space == "torus" else l_shape()
            x0 = generic_start(normalize_area(base), seed)
        vals, capped = ergodic_series(f, x0, N, burn_in)
        mean, se = batch_means(vals)
        return Estimate(mean, se, int(N), int(seed), None, method, int(capped))
    raise BadParams(f"unknown method {method!r}")


# -- translates of the leaf measure --------------------------------------------

def _lattice_chunk(n, ss, f, v1, v2, t, tau_len):
    rng = np.random.default_rng(ss)
    s = rng.uniform(0.0, 1.0, size=n)
    if tau_len:
        s = s + rng.uniform(0.0, tau_len, size=n)
    a, b = gauss_reduce(*flow_batch(np.array([v1, v2])[:, None] * np.ones(n), t, s))
    vals, capped = f.on_lattices(a, b)
    return _moments(vals, capped.sum())


def _leaf_sample(box, w_chart, s, t, f, rng, sampler):
    """``f(a_t u_s y)`` for the leaf point ``y`` at ``w_chart``; resample on degeneration."""
    from .foliation import leaf_point
    for attempt in range(MAX_RETRIES + 1):
        try:
            y = leaf_point(box, 0.0, w_chart)
            return f.evaluate(flow(y, t, s))
        except DegenerateDeformation as exc:
            log.warning("degenerate sample w=%s (%s); resampling", w_chart.tolist(), exc)
            if attempt == MAX_RETRIES:
                raise
            w_chart, s = sampler(rng)
    raise AssertionError("unreachable")


def _translate_chunk(n, ss, box, rho, f, t):
    rng = np.random.default_rng(ss)
    scale = box.chart_scale(rho.r)
    W = rho.sample(n, rng) * scale
    S = rng.uniform(0.0, 1.0, size=n)
    sampler = lambda g: (rho.sample(1, g)[0] * scale, float(g.uniform()))
    vals = np.empty(n)
    capped = 0
    for j in range(n):
        vals[j], c = _leaf_sample(box, W[j], S[j], t, f, rng, sampler)
        capped += c
    return _moments(vals, capped)


def translate_average(box, rho, f, t, N, seed, workers=1):
    """``int int f(a_t u_s y) ds drho(y)`` by Monte Carlo.

    ``rho`` lives on ``[0, r]^d`` and is carried into the box by the chart
    scale.  Degenerate samples are logged and redrawn up to ``MAX_RETRIES``
    times.
    """
    if t < 0:
        raise BadParams("t must be nonnegative")
    if rho.d != box.d:
        raise BadParams(f"measure dimension {rho.d} differs from the box dimension {box.d}")
    if f.kind == "constant":
        return _exact_one(N, seed, t, "translate")
    if box.d == 0 and is_lattice_surface(box.base):
        v1, v2 = torus_basis(box.base)
        sums = _run(_lattice_chunk, (f, v1, v2, t, 0.0), N, seed, workers)
    else:
        sums = _run(_translate_chunk, (box, rho, f, t), N, seed, workers, chunk=256)
    return _estimate(sums, seed, t, "translate")


# -- the thickened observable and the extra average --------------------------------

def _thick_draws(pw, n, rng, scale):
    """``(w, s)`` with ``k ~ c_k``, ``w`` uniform in ``B_k`` (chart units), ``s ~ U[0, 1]``."""
    keys, p = pw.mixture()
    k = keys[rng.choice(len(p), size=n, p=p)]
    cell = float(pw.r * pw.delta)
    w = (k + rng.uniform(0.0, 0.25, size=(n, pw.d))) * cell * scale
    s = rng.uniform(0.0, 1.0, size=n)
    return w, s


def _thick_chunk(n, ss, box, pw, f, t, tau_len, mode):
    rng = np.random.default_rng(ss)
    scale = box.chart_scale(float(pw.r))
    w, s = _thick_draws(pw, n, rng, scale)
    r1 = rng.uniform(0.0, tau_len, size=n)
    r2 = rng.uniform(0.0, tau_len, size=n)

    lattice = box.d == 0 and is_lattice_surface(box.base)
    if lattice:
        v1, v2 = torus_basis(box.base)
        V = np.array([v1, v2])[:, None] * np.ones(n)

        def F(shift):
            a, b = gauss_reduce(*flow_batch(V, t, s + shift))
            return f.on_lattices(a, b)[0]
    else:
        def redraw(g):
            ww, ss_ = _thick_draws(pw, 1, g, scale)
            return ww[0], float(ss_[0])

        def F(shift):
            out = np.empty(n)
            for j in range(n):
                out[j] = _leaf_sample(box, w[j], s[j] + shift[j], t, f, rng, redraw)[0]
            return out

    if mode == "extra":
        vals = F(r1)
    elif mode == "thick":
        vals = F(np.zeros(n))
    elif mode == "diff":
        # shifting s by r only moves mass across the ends of [0, 1]:
        # A - thick = E[r (f at s = 1 + u r) - r (f at s = u r)], u ~ U[0, 1]
        u = rng.uniform(0.0, 1.0, size=n)
        vals = r1 * (F(1.0 + u * r1 - s) - F(u * r1 - s))
    else:
        raise BadParams(mode)
    return _moments(vals)


def _thick_run(box, pw, f, t, l, N, seed, mode, workers):
    if pw.d != box.d:
        raise BadParams(f"partition dimension {pw.d} differs from the box dimension {box.d}")
    tl = tau(t, l)
    chunk = CHUNK if box.d == 0 and is_lattice_surface(box.base) else 256
    return _estimate(_run(_thick_chunk, (box, pw, f, t, tl, mode), N, seed, workers, chunk),
                     seed, t, mode)


def extra_average(box, pw, f, t, l=2.0, N=10_000, seed=0, workers=1):
    """``(1/tau) int int phi(y) f(a_t u_r y) dr dmu(y)``, ``r`` over ``[0, tau]``.

    ``y`` is drawn from the ``phi``-weighted box mixture; in chart coordinates
    ``u_r`` only shifts ``s``, so ``a_t u_r y = a_t u_(s + r) y_w``.
    """
    if f.kind == "constant":
        return _exact_one(N, seed, t, "extra")
    return _thick_run(box, pw, f, t, l, N, seed, "extra", workers)


def thickened_average(box, pw, f, t, N=10_000, seed=0, workers=1):
    """``int phi(y) f(a_t y) dmu(y)``; same draws as ``extra_average`` for the same seed."""
    if f.kind == "constant":
        return _exact_one(N, seed, t, "thick")
    return _thick_run(box, pw, f, t, 2.0, N, seed, "thick", workers)


def extra_minus_thickened(box, pw, f, t, l=2.0, N=10_000, seed=0, workers=1):
    """Estimate of ``A - int phi f(a_t .)`` through the boundary strips of the boxes.

    Uses the same ``(k, w, r)`` draws as ``extra_average``.  Each sample is
    ``r`` times a difference of two values of ``f``, so the error is
    ``O(tau)`` rather than the ``O(1)`` of subtracting two averages.
    """
    if f.kind == "constant":
        return Estimate(0.0, 0.0, int(N), int(seed), t, "diff")
    return _thick_run(box, pw, f, t, l, N, seed, "diff", workers)


def folner_ratios(box, pw, f, t_grid, l=2.0, N=10_000, seed=0, c_f=None):
    """``|A - thickened| / (C(f) tau)`` along ``t_grid``, with the paired estimates."""
    c_f = c_f if c_f is not None else (f.c1_bound or 1.0)
    rows = []
    for t in t_grid:
        d = extra_minus_thickened(box, pw, f, t, l, N, seed)
        rows.append((float(t), d, abs(d.value) / (c_f * tau(t, l))))
    return rows


@dataclass(frozen=True)
class SecondMoment:
    """Inner-square bookkeeping for the extra average.

    ``full`` estimates ``int (tau^-1 int f(a_t u_r y) dr)^2 phi dmu`` through
    two independent ``r``; ``near`` and ``far`` split it along
    ``|r1 - r2| < tau q``.
    """

    A: Estimate
    full: Estimate
    near: Estimate
    far: Estimate
    near_fraction: float
    q: float


def _split_chunk(n, ss, box, pw, f, t, tau_len, q):
    rng = np.random.default_rng(ss)
    scale = box.chart_scale(float(pw.r))
    w, s = _thick_draws(pw, n, rng, scale)
    r1 = rng.uniform(0.0, tau_len, size=n)
    r2 = rng.uniform(0.0, tau_len, size=n)
    if box.d == 0 and is_lattice_surface(box.base):
        v1, v2 = torus_basis(box.base)
        V = np.array([v1, v2])[:, None] * np.ones(n)
        F = lambda r: f.on_lattices(*gauss_reduce(*flow_batch(V, t, s + r)))[0]
        f1, f2 = F(r1), F(r2)
    else:
        f1, f2 = np.empty(n), np.empty(n)
        for j in range(n):
            f1[j] = f(flow(_leaf(box, w[j]), t, s[j] + r1[j]))
            f2[j] = f(flow(_leaf(box, w[j]), t, s[j] + r2[j]))
    near = np.abs(r1 - r2) < tau_len * q
    prod = f1 * f2
    return (_moments(f1), _moments(prod), _moments(prod * near), _moments(prod * ~near))


def _leaf(box, w):
    from .foliation import leaf_point
    return leaf_point(box, 0.0, w)


def second_moment_split(box, pw, f, t, l=2.0, N=10_000, seed=0):
    """Cauchy-Schwarz and diagonal-split diagnostics for the extra average."""
    tl = tau(t, l)
    q = math.exp(-t / (2 * l))
    chunk = CHUNK if box.d == 0 and is_lattice_surface(box.base) else 256
    parts = [_split_chunk(n, ss, box, pw, f, t, tl, q) for n, ss in _chunks(N, seed, chunk)]
    ests = []
    for i, name in enumerate(("extra", "full", "near", "far")):
        acc = np.zeros(4)
        for p in parts:
            acc += p[i]
        sums = (acc[0], acc[1], int(acc[2]), int(acc[3]))
        ests.append(_estimate(sums, seed, t, name))
    return SecondMoment(*ests, near_fraction=2 * q - q * q, q=q)


# -- correlations and rates -------------------------------------------------------

def correlation_decay(phi_f, psi_f, space, t_grid, N, seed, chunk=CHUNK * 4):
    """Haar estimates of ``int phi(a_t x) psi(x) - int phi int psi`` for each ``t``.

    The same random lattices are used for every ``t``.  The standard error
    is the delta-method error of the sample covariance.
    """
    if space != "torus":
        raise MethodMismatch("correlations need Haar sampling, available on the torus only")
    t_grid = [float(t) for t in t_grid]
    K = len(t_grid)
    # raw sums of phi, z = phi psi, psi and their cross moments, for the delta method
    m = np.zeros((K, 9))
    n_tot = 0
    for n, ss in _chunks(N, seed, chunk):
        rng = np.random.default_rng(ss)
        v1, v2 = gauss_reduce(*haar_lattices(n, rng))
        psi = psi_f.on_lattices(v1, v2)[0]
        for i, t in enumerate(t_grid):
            a, b = gauss_reduce(*flow_batch(np.array([v1, v2]), t, 0.0))
            phi = phi_f.on_lattices(a, b)[0]
            z = phi * psi
            m[i] += (phi.sum(), z.sum(), (phi * phi).sum(), (psi * psi).sum(), (z * z).sum(),
                     (z * phi).sum(), (z * psi).sum(), (phi * psi).sum(), psi.sum())
        n_tot += n
    out = []
    for i, t in enumerate(t_grid):
        S_phi, S_z, S_pp, S_ss, S_zz, S_zp, S_zs, S_ps, S_s = m[i]
        N_ = n_tot
        mp, mz, ms = S_phi / N_, S_z / N_, S_s / N_
        cov = mz - mp * ms
        # gradient of g(mz, mp, ms) = mz - mp ms is (1, -ms, -mp)
        var_z = S_zz / N_ - mz ** 2
        var_p = S_pp / N_ - mp ** 2
        var_s = S_ss / N_ - ms ** 2
        c_zp = S_zp / N_ - mz * mp
        c_zs = S_zs / N_ - mz * ms
        c_ps = S_ps / N_ - mp * ms
        g = np.array([1.0, -ms, -mp])
        C = np.array([[var_z, c_zp, c_zs], [c_zp, var_p, c_ps], [c_zs, c_ps, var_s]])
        var = max(float(g @ C @ g), 0.0) * N_ / max(N_ - 1, 1)
        out.append(Estimate(float(cov), math.sqrt(var / N_), int(N_), int(seed), t, "correlation"))
    return out


def rate_fit(series, window=None, floor=None):
    """Least squares of ``log D`` against ``t`` over ``window``.

    ``series`` holds ``(t, D)`` pairs, ``(t, D, stderr)`` triples or Estimates.
    Points at or below the noise floor (the point's own stderr, or ``floor``)
    are dropped.
    """
    pts = []
    for item in series:
        if isinstance(item, Estimate):
            t, D, se = item.t, item.value, item.stderr
        elif len(item) == 3:
            t, D, se = item
        else:
            (t, D), se = item, 0.0
        pts.append((float(t), abs(float(D)), float(se)))
    if window is None:
        window = (min(p[0] for p in pts), max(p[0] for p in pts)) if pts else (0.0, 0.0)
    lo, hi = float(window[0]), float(window[1])
    keep = [(t, D) for t, D, se in pts
            if lo - 1e-12 <= t <= hi + 1e-12 and D > max(se, floor or 0.0) and D > 0]
    if len(keep) < 3:
        raise InsufficientPoints(f"{len(keep)} usable points in [{lo}, {hi}]; need 3")
    t = np.array([p[0] for p in keep])
    y = np.log([p[1] for p in keep])
    fit = stats.linregress(t, y)
    r2 = float(min(max(fit.rvalue ** 2, 0.0), 1.0))
    return RateFit(float(fit.slope), float(fit.intercept), r2, (lo, hi), float(fit.stderr), len(keep))
