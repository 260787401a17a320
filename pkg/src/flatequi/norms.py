"""
AGY norm, max norm, the injectivity radius proxy and C^1 norm estimates.

The AGY norm of a cocycle ``c`` at ``x`` is the supremum of
``|c(gamma)| / |hol(gamma)|`` over saddle connections.  Here the supremum is
truncated to connections of length at most ``R_trunc``; the radius travels
with the context so every value can be read with it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import EmptyConnectionSet, StepOutsideChart
from .homology import Cocycle, build_basis
from .saddle import connection_classes, systole
from .surface import apply_matrix, deform, geodesic_matrix, horocycle_matrix

DEFAULT_C0 = 0.5
DEFAULT_ETA = 0.1
DEFAULT_B_EXPONENT = 0.5


def default_truncation(sys):
    return max(10.0 * sys, 10.0)


@dataclass(frozen=True, eq=False)
class NormContext:
    """Everything needed to evaluate norms at one surface.

    ``hols`` and ``classes`` are the holonomies and integer basis classes of
    all saddle connections up to ``R_trunc``.
    """

    surface: object
    basis: object
    R_trunc: float
    c0: float = DEFAULT_C0
    eta: float = DEFAULT_ETA
    b_exponent: float = DEFAULT_B_EXPONENT
    systole: float = field(default=None)
    hols: np.ndarray = field(default=None, repr=False)
    classes: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return self.basis.rank

    @property
    def dual_norms(self):
        """AGY norms of the dual basis cocycles ``c_i``."""
        return _column_norms(self)


def make_context(x, R_trunc=None, c0=DEFAULT_C0, eta=DEFAULT_ETA, b_exponent=DEFAULT_B_EXPONENT,
                 basis=None):
    if not 0 < c0 <= 1:
        raise ValueError("c0 must lie in (0, 1]")
    if not 0 < b_exponent < 1:
        raise ValueError("b_exponent must lie in (0, 1)")
    basis = basis if basis is not None else build_basis(x)
    sys = systole(x)
    R = default_truncation(sys) if R_trunc is None else float(R_trunc)
    if R < sys:
        hols = np.zeros(0, dtype=complex)
        classes = np.zeros((0, basis.rank), dtype=np.int64)
    else:
        hols, classes = connection_classes(x, basis, R)
    return NormContext(x, basis, R, c0, eta, b_exponent, sys, hols, classes)


def _basis_values(c):
    if isinstance(c, Cocycle):
        return np.asarray(c.basis_values)
    return np.asarray(c)


def _ratios(ctx, bv):
    if ctx.hols.size == 0:
        raise EmptyConnectionSet(f"no saddle connection shorter than R_trunc = {ctx.R_trunc}")
    return np.abs(ctx.classes @ bv) / np.abs(ctx.hols)


def agy_norm(ctx, c):
    """Truncated AGY norm; ``c`` is a Cocycle or its basis values."""
    bv = _basis_values(c)
    return float(_ratios(ctx, bv).max())


def agy_norms(ctx, cs):
    """AGY norms of many cocycles at once, given as rows of basis values."""
    B = np.atleast_2d(np.asarray(cs))
    if ctx.hols.size == 0:
        raise EmptyConnectionSet(f"no saddle connection shorter than R_trunc = {ctx.R_trunc}")
    vals = np.abs(ctx.classes @ B.T) / np.abs(ctx.hols)[:, None]
    return vals.max(axis=0)


def _column_norms(ctx):
    if ctx.hols.size == 0:
        raise EmptyConnectionSet(f"no saddle connection shorter than R_trunc = {ctx.R_trunc}")
    return (np.abs(ctx.classes) / np.abs(ctx.hols)[:, None]).max(axis=0)


def max_norm(ctx, c):
    """``max_i |lambda_i| * ||c_i||`` in the basis dual to the homology basis."""
    lam = _basis_values(c)
    return float(np.max(np.abs(lam) * _column_norms(ctx)))


@dataclass(frozen=True)
class DistortionReport:
    min_ratio: float
    max_ratio: float
    lower: float
    upper: float
    sv_lower: float
    sv_upper: float
    count: int
    violations: int


def flow_distortion_check(ctx, c, t, s):
    """Ratios ``|hol(gamma)| / |M hol(gamma)|`` for ``M = a_t u_s`` over the context's connections.

    A connection contributes only when ``|c(gamma)| > 0``; the ratio of the
    norm quotients then reduces to the holonomy ratio.  The stated envelope
    is ``[e^(-2-2t), e^(2+2t)]``, and the singular values of ``M`` give the
    sharper one.
    """
    if t < 0 or not 0 <= s <= 1:
        raise ValueError("need t >= 0 and s in [0, 1]")
    M = geodesic_matrix(t) @ horocycle_matrix(s)
    bv = _basis_values(c)
    keep = np.abs(ctx.classes @ bv) > 0 if ctx.hols.size else np.zeros(0, dtype=bool)
    h = ctx.hols[keep]
    if h.size == 0:
        raise EmptyConnectionSet("no connection with nonzero cocycle value")
    img = (M[0, 0] * h.real + M[0, 1] * h.imag) + 1j * (M[1, 0] * h.real + M[1, 1] * h.imag)
    ratio = np.abs(h) / np.abs(img)
    sv = np.linalg.svd(M, compute_uv=False)
    lower, upper = math.exp(-2 - 2 * t), math.exp(2 + 2 * t)
    bad = int(np.sum((ratio < lower) | (ratio > upper)))
    return DistortionReport(float(ratio.min()), float(ratio.max()), lower, upper,
                            float(1 / sv[0]), float(1 / sv[-1]), int(h.size), bad)


def injectivity_proxy(ctx):
    """``(r_hat, in_M_eta)`` with ``r_hat = c0 * min(1, systole)``."""
    r = ctx.c0 * min(1.0, ctx.systole)
    return r, bool(r >= ctx.eta)


def eta_schedule(t, b_exponent=DEFAULT_B_EXPONENT):
    return math.exp(-b_exponent * t)


def frame_directions(ctx):
    """Real and imaginary directions ``c_i / ||c_i||`` and ``i c_i / ||c_i||`` as edge values."""
    e2b = ctx.basis.edge_to_basis.astype(float)
    norms = _column_norms(ctx)
    out = []
    for i in range(ctx.n):
        v = e2b[:, i] / norms[i]
        out.append(v.astype(complex))
        out.append(1j * v)
    return out


def c1_norm_estimate(f, samples, step_factor=1e-4, c0=DEFAULT_C0):
    """Lower estimate of the C^1 norm of ``f`` from finite differences.

    For each sample: ``|f(x)|`` plus the largest central difference along the
    AGY-unit frame directions, with step ``step_factor * r_hat(x)``.  The
    result is the maximum over samples.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    best = 0.0
    for x in samples:
        ctx = make_context(x, c0=c0)
        r_hat, _ = injectivity_proxy(ctx)
        h = step_factor * r_hat
        if h > r_hat:
            raise StepOutsideChart(f"step {h} exceeds the chart radius {r_hat}")
        fx = abs(f(x))
        grad = 0.0
        for v in frame_directions(ctx):
            up = f(deform(x, h * v))
            down = f(deform(x, -h * v))
            grad = max(grad, abs(up - down) / (2 * h))
        best = max(best, fx + grad)
    return best


@dataclass(frozen=True)
class ComparabilityFit:
    slope: float
    intercept: float
    r_squared: float
    log_inv_eta: np.ndarray
    log_ratio: np.ndarray


def comparability_exponent(x, t_grid, n_cocycles=50, seed=0, c0=DEFAULT_C0):
    """Fit ``log(max_norm / agy_norm)`` against ``log(1/r_hat)`` along ``a_t x``.

    The basis ``c_i`` is the one built at ``x`` and kept along the orbit.  The
    worst ratio over random cocycles is taken at each ``t``; the slope is a
    measured stand-in for the exponent in the lower comparison bound.
    """
    rng = np.random.default_rng(seed)
    basis = build_basis(x)
    xs, ys = [], []
    for t in t_grid:
        y = apply_matrix(x, geodesic_matrix(t))
        ctx = make_context(y, c0=c0, basis=basis)
        r_hat, _ = injectivity_proxy(ctx)
        C = rng.normal(size=(n_cocycles, ctx.n))
        agy = agy_norms(ctx, C)
        mx = np.max(np.abs(C) * _column_norms(ctx), axis=1)
        xs.append(math.log(1 / r_hat))
        ys.append(float(np.max(np.log(mx / agy))))
    xs, ys = np.array(xs), np.array(ys)
    if np.ptp(xs) == 0:
        return ComparabilityFit(0.0, float(ys.mean()), 0.0, xs, ys)
    fit = stats.linregress(xs, ys)
    return ComparabilityFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2), xs, ys)
