"""
Product measures on the cube ``[0, r]^d`` of non-horocyclic leaf coordinates,
richness checks, and the delta-cube partition with its thickening function.

Every measure here is a product of identical one-dimensional factors, so the
mass of a max-norm ball (a coordinate box) is the product of interval masses.
Interval masses come from closed-form distribution functions; partition
weights are computed in rational arithmetic so that they sum to one exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product

import numpy as np

from .errors import BadParams, NotReciprocalInteger

log = logging.getLogger(__name__)

KINDS = ("uniform", "cantor_product", "atomic_net", "point_mass")
CANTOR_DEPTH = 60
CANTOR_DEPTH_EXACT = 80


def cantor_lambda(dimension):
    """Contraction giving a two-branch self-similar measure of the given dimension."""
    if not 0 < dimension <= 1:
        raise BadParams("factor dimension must lie in (0, 1]")
    return 2.0 ** (-1.0 / dimension)


def cantor_dimension(lam):
    return math.log(2) / math.log(1 / float(lam))


def _cantor_cdf(x, lam, depth=CANTOR_DEPTH):
    """Vectorized distribution function of the Cantor measure on ``[0, 1]``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    weight = np.ones_like(x)
    y = x.copy()
    live = (y > 0) & (y < 1)
    out[y >= 1] = 1.0
    gap_lo, gap_hi = lam, 1 - lam
    for _ in range(depth):
        if not live.any():
            break
        left = live & (y < gap_lo)
        mid = live & (y >= gap_lo) & (y <= gap_hi)
        right = live & (y > gap_hi)
        out[mid] += 0.5 * weight[mid]
        out[right] += 0.5 * weight[right]
        y = np.where(left, y / lam, np.where(right, (y - gap_hi) / lam, y))
        weight = np.where(left | right, 0.5 * weight, weight)
        live = (left | right) & (y > 0) & (y < 1)
        done_hi = (left | right) & (y >= 1)
        out[done_hi] += weight[done_hi]
    return out


def _cantor_cdf_exact(x, lam, depth=CANTOR_DEPTH_EXACT):
    """Same recursion in rationals; truncated below ``2^-depth`` (deterministically)."""
    acc = Fraction(0)
    w = Fraction(1)
    hi = 1 - lam
    for _ in range(depth):
        if x <= 0:
            return acc
        if x >= 1:
            return acc + w
        if x < lam:
            x = x / lam
        elif x <= hi:
            return acc + w / 2
        else:
            acc += w / 2
            x = (x - hi) / lam
        w /= 2
    return acc


@dataclass(frozen=True, eq=False)
class RichMeasure:
    """A product probability measure on ``[0, r]^d``.

    params:
      cantor_product: ``lam`` (contraction, at most 1/2) or ``dimension``
      atomic_net: ``spacing`` (atoms at the centres of a grid of that spacing)
      point_mass: ``atom`` (coordinate of the atom in every factor, default 0)
    """

    kind: str
    d: int
    r: float = 1.0
    params: dict = field(default_factory=dict)
    seed: int = 0

    # -- one-dimensional factor -------------------------------------------
    @cached_property
    def lam(self):
        lam = self.params.get("lam")
        if lam is None:
            lam = cantor_lambda(float(self.params["dimension"]))
        return lam

    @cached_property
    def _atoms(self):
        if self.kind == "point_mass":
            return np.array([float(self.params.get("atom", 0.0))])
        h = float(self.params["spacing"])
        m = int(round(self.r / h))
        return (np.arange(m) + 0.5) * h

    def factor_dimension(self):
        if self.kind == "uniform":
            return 1.0
        if self.kind == "cantor_product":
            return cantor_dimension(self.lam)
        return 0.0

    def cdf(self, x):
        """Mass of ``[0, x]`` in one factor (right-continuous)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.clip(x / self.r, 0.0, 1.0)
        if self.kind == "cantor_product":
            return _cantor_cdf(x / self.r, float(self.lam))
        atoms = self._atoms
        return np.searchsorted(atoms, x, side="right") / atoms.size

    def cdf_left(self, x):
        """Mass of ``[0, x)`` in one factor."""
        x = np.asarray(x, dtype=float)
        if self.kind in ("uniform", "cantor_product"):
            return self.cdf(x)
        atoms = self._atoms
        return np.searchsorted(atoms, x, side="left") / atoms.size

    def interval_mass(self, a, b):
        """Mass of the closed interval ``[a, b]`` in one factor."""
        return np.maximum(self.cdf(b) - self.cdf_left(a), 0.0)

    def ball_mass(self, center, radius):
        """Mass of the closed max-norm ball."""
        c = np.asarray(center, dtype=float).reshape(self.d)
        return float(np.prod(self.interval_mass(c - radius, c + radius))) if self.d else 1.0

    # exact rational version used for partition weights
    def cdf_exact(self, x):
        """Mass of ``[0, x)`` as a Fraction (``x`` a Fraction)."""
        r = Fraction(self.r)
        if self.kind == "uniform":
            return min(max(x / r, Fraction(0)), Fraction(1))
        if self.kind == "cantor_product":
            return _cantor_cdf_exact(x / r, Fraction(self.lam))
        atoms = [Fraction(a) for a in self._atoms.tolist()]
        return Fraction(sum(1 for a in atoms if a < x), len(atoms))

    # -- sampling ---------------------------------------------------------
    def sample(self, n, rng=None):
        """``n`` points as an ``(n, d)`` array."""
        rng = np.random.default_rng(self.seed) if rng is None else rng
        shape = (n, self.d)
        if self.kind == "uniform":
            return rng.uniform(0.0, self.r, size=shape)
        if self.kind == "cantor_product":
            # address digits: 53 random bits reach below double precision for lam <= 1/2
            lam = float(self.lam)
            u = rng.integers(0, 2 ** 53, size=shape, dtype=np.int64)
            x = np.zeros(shape)
            for i in range(53):
                x += ((u >> i) & 1) * ((1 - lam) * lam ** i)
            return self.r * x
        atoms = self._atoms
        return atoms[rng.integers(0, atoms.size, size=shape)]


def make_measure(kind, d, r=1.0, params=None, seed=0):
    params = dict(params or {})
    if kind not in KINDS:
        raise BadParams(f"unknown measure kind {kind!r}")
    if d < 0 or int(d) != d:
        raise BadParams("d must be a nonnegative integer")
    if not r > 0:
        raise BadParams("r must be positive")
    if kind == "cantor_product":
        if "lam" in params:
            lam = params["lam"]
            lam = Fraction(lam) if isinstance(lam, str) else lam
            if not 0 < lam <= Fraction(1, 2):
                raise BadParams("cantor contraction must lie in (0, 1/2]")
            params["lam"] = lam
        elif "dimension" in params:
            lam = cantor_lambda(float(params["dimension"]))
            if lam > 0.5:
                raise BadParams("factor dimension above 1")
        else:
            raise BadParams("cantor_product needs lam or dimension")
    if kind == "atomic_net":
        h = params.get("spacing")
        if h is None or not 0 < float(h) <= r:
            raise BadParams("atomic_net needs 0 < spacing <= r")
        if abs(r / float(h) - round(r / float(h))) > 1e-9:
            raise BadParams("spacing must divide r")
    if kind == "point_mass":
        a = float(params.get("atom", 0.0))
        if not 0 <= a <= r:
            raise BadParams("atom must lie in [0, r]")
    return RichMeasure(kind, int(d), float(r), params, int(seed))


@dataclass(frozen=True)
class RichnessReport:
    max_mass: float
    verdict: bool
    threshold: float
    b_min: float


def richness_check(rho, delta, eps, b):
    """Largest ball mass over a ``delta/4``-net of centres, against ``b delta^(d - eps)``.

    The net covers the support cube.  For product measures the maximum over a
    product net is the product of the one-dimensional maxima.
    """
    if not 0 < delta < 1:
        raise BadParams("need 0 < delta < 1")
    if rho.d == 0:
        max_mass = 1.0
    else:
        step = delta / 4
        m = int(math.ceil(rho.r / step))
        centers = np.arange(m + 1) * step
        per_dim = rho.interval_mass(centers - delta, centers + delta).max()
        max_mass = float(per_dim ** rho.d)
    scale = delta ** (rho.d - eps)
    thr = b * scale
    return RichnessReport(max_mass, bool(max_mass < thr), thr, max_mass / scale)


# -- partition of the cube -------------------------------------------------

def snap_delta(delta):
    """Snap ``delta`` to ``1/N`` with ``N = ceil(1/delta)``; returns ``(Fraction, note or None)``.

    ``1/N`` is the largest reciprocal integer not above ``delta``, so the
    snapped scale is never coarser than the requested one.
    """
    if isinstance(delta, Fraction):
        if delta.numerator == 1:
            return delta, None
        delta = float(delta)
    if not 0 < delta < 1:
        raise BadParams("need 0 < delta < 1")
    inv = 1 / delta
    N = int(round(inv))
    if abs(inv - N) <= 1e-9 * inv:
        return Fraction(1, N), None
    N = int(math.ceil(inv))
    note = f"delta={delta!r} snapped to 1/{N}"
    log.info(note)
    return Fraction(1, N), note


def _as_reciprocal(delta):
    if isinstance(delta, Fraction):
        if delta.numerator != 1:
            raise NotReciprocalInteger(f"delta = {delta} is not 1/N")
        return delta
    inv = 1 / float(delta)
    N = int(round(inv))
    if N < 1 or abs(inv - N) > 1e-9 * inv:
        raise NotReciprocalInteger(f"delta = {delta} is not 1/N")
    return Fraction(1, N)


@dataclass(frozen=True, eq=False)
class PartitionWeights:
    """Weights ``c_k = rho(I_k)`` of the half-open cubes ``I_k = r * prod [k_j delta, (k_j+1) delta)``.

    ``factor[k]`` is the exact one-dimensional mass; ``c_k`` is the product.
    ``B_k`` is ``[0, 1]`` in ``s`` times ``prod (k_j delta, k_j delta + delta/4)`` (scaled by ``r``).
    """

    delta: Fraction
    d: int
    r: Fraction
    factor: tuple

    @property
    def N(self):
        return self.delta.denominator

    @property
    def box_volume(self):
        return (self.r * self.delta / 4) ** self.d

    def weight(self, k):
        out = Fraction(1)
        for kj in k:
            out *= self.factor[kj]
        return out

    @cached_property
    def weights(self):
        """Nonzero weights as ``{k: c_k}``."""
        support = [i for i, m in enumerate(self.factor) if m]
        return {k: self.weight(k) for k in product(support, repeat=self.d)}

    def total(self):
        return sum(self.weights.values(), Fraction(0))

    @cached_property
    def max_weight(self):
        return max(self.factor) ** self.d

    def mixture(self):
        """Support indices and float probabilities, for sampling ``k ~ c_k``."""
        keys = list(self.weights)
        p = np.array([float(self.weights[k]) for k in keys])
        return np.array(keys, dtype=np.int64).reshape(len(keys), self.d), p / p.sum()


def partition_weights(rho, delta):
    dl = _as_reciprocal(delta)
    r = Fraction(rho.r)
    N = dl.denominator
    if rho.d == 0:
        # a single cell of weight one; the factor masses never enter
        return PartitionWeights(dl, 0, r, (Fraction(1),))
    cuts = [rho.cdf_exact(r * dl * j) for j in range(N)] + [Fraction(1)]
    factor = tuple(cuts[j + 1] - cuts[j] for j in range(N))
    if any(m < 0 for m in factor):
        raise BadParams("negative cell mass")
    return PartitionWeights(dl, rho.d, r, factor)


def phi_value(pw, s, w):
    """Thickening function: ``c_k / vol(B_k)`` on ``B_k``, zero elsewhere."""
    if not 0 <= s <= 1:
        return 0.0
    w = [Fraction(v) if isinstance(v, Fraction) else v for v in np.atleast_1d(w).tolist()]
    cell = pw.r * pw.delta
    k = []
    for v in w:
        kj = math.floor(v / cell)
        if not 0 <= kj < pw.N:
            return 0.0
        off = v - kj * cell
        if not 0 < off < cell / 4:
            return 0.0
        k.append(kj)
    val = pw.weight(k) / pw.box_volume
    exact = any(isinstance(v, Fraction) for v in w) or isinstance(s, Fraction)
    return val if exact else float(val)


def phi_sup(pw):
    """``max_k c_k / vol(B_k)`` (exact)."""
    return pw.max_weight / pw.box_volume


def phi_sup_bound(pw, b, eps):
    """Exact check of ``sup phi <= 4^d b delta^(-eps)`` for rational ``b`` and ``eps = p/q``.

    Both sides are raised to the power ``q`` so only rationals are compared.
    """
    b, eps = Fraction(b), Fraction(eps)
    if b <= 0 or eps < 0:
        raise BadParams("need b > 0 and eps >= 0")
    lhs = phi_sup(pw) / (Fraction(4) ** pw.d * b)
    return lhs ** eps.denominator <= (1 / pw.delta) ** eps.numerator


def phi_integral(pw):
    """``int phi`` over the chart: each ``B_k`` has volume ``vol(B_k)`` (s-length one)."""
    return sum((c / pw.box_volume) * pw.box_volume for c in pw.weights.values())


def box_of(pw, k):
    """``B_k`` as a list of closed-interval bounds: ``s`` first, then the ``w_j``."""
    cell = pw.r * pw.delta
    return [(Fraction(0), Fraction(1))] + [(kj * cell, kj * cell + cell / 4) for kj in k]


def _volume(box):
    out = Fraction(1)
    for a, b in box:
        if b <= a:
            return Fraction(0)
        out *= b - a
    return out


def symmetric_difference(box_a, box_b):
    """Lebesgue measure of ``A xor B`` for two coordinate boxes (exact)."""
    inter = [(max(a0, b0), min(a1, b1)) for (a0, a1), (b0, b1) in zip(box_a, box_b)]
    return _volume(box_a) + _volume(box_b) - 2 * _volume(inter)


def folner_defect(pw, k, rho_tilde):
    """Measure of ``u_rho(B_k) xor B_k`` where ``u_rho`` shifts ``s`` by ``rho_tilde``."""
    rt = Fraction(rho_tilde)
    box = box_of(pw, k)
    moved = [(box[0][0] + rt, box[0][1] + rt)] + box[1:]
    return symmetric_difference(moved, box)


def empirical_cells(rho, delta, n, rng=None):
    """Counts of samples per cube ``I_k`` (flattened row-major)."""
    dl = _as_reciprocal(delta)
    N = dl.denominator
    pts = rho.sample(n, rng)
    idx = np.clip(np.floor(pts / (rho.r / N)).astype(np.int64), 0, N - 1)
    flat = np.ravel_multi_index(idx.T, (N,) * rho.d) if rho.d else np.zeros(n, dtype=np.int64)
    return np.bincount(flat, minlength=N ** rho.d)
