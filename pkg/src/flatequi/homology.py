"""
Relative homology, period coordinates and the tautological frame.

Every triangulation vertex lies in the marked set, so relative 1-chains are
just edge chains and ``H_1(M, Sigma; Z)`` is the edge lattice modulo triangle
boundaries.  Edges not crossed by a spanning tree of the dual graph form a
basis.  A relative cocycle is a value per half-edge that sums to zero around
every triangle; it is determined by its values on the basis edges.

The symplectic pairing of absolute parts is computed from the piecewise
constant one-forms interpolating two cocycles on each flat triangle:
``<p(c), p(c')> = 1/2 * sum_T (c(e0) c'(e1) - c(e1) c'(e0))``.  Relative
classes with zero absolute part pair to zero, and ``<Re w, Im w>`` is the area.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, UnknownEdge

NULLSPACE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class HomologyBasis:
    """A basis of relative homology by single half-edges.

    ``edge_to_basis[h]`` holds the integer coordinates of the class of
    half-edge ``h``.  ``intersection_matrix[i, j]`` is the pairing of the
    absolute parts of the dual cocycles ``c_i`` and ``c_j``.
    """

    cycles: tuple
    edge_to_basis: np.ndarray
    intersection_matrix: np.ndarray
    surface_key: str

    @property
    def rank(self):
        return len(self.cycles)

    def class_of(self, chain):
        """Integer basis coordinates of a chain of half-edges."""
        try:
            return self.edge_to_basis[list(chain)].sum(axis=0)
        except IndexError as err:
            raise UnknownEdge(str(err)) from None


@dataclass(frozen=True, eq=False)
class Cocycle:
    """Relative cohomology class given by one value per half-edge."""

    values: np.ndarray
    basis_values: np.ndarray

    @property
    def real(self):
        return Cocycle(self.values.real.copy(), self.basis_values.real.copy())

    @property
    def imag(self):
        return Cocycle(self.values.imag.copy(), self.basis_values.imag.copy())

    def __add__(self, other):
        return Cocycle(self.values + other.values, self.basis_values + other.basis_values)

    def __sub__(self, other):
        return Cocycle(self.values - other.values, self.basis_values - other.basis_values)

    def __mul__(self, scalar):
        return Cocycle(self.values * scalar, self.basis_values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


@dataclass(frozen=True, eq=False)
class TautFrame:
    """Real and imaginary parts of the period cocycle and a basis of ``H^(0)``."""

    a: Cocycle
    b: Cocycle
    h0: tuple

    @property
    def d(self):
        return len(self.h0)


def build_basis(x):
    """Relative homology basis from a breadth-first spanning tree of the dual graph."""
    comb = x._comb
    tri, face_of = comb.triangles, comb.face_of
    F = tri.shape[0]
    H = x.n_half_edges

    # maximum spanning tree of the dual graph by edge length, so the basis
    # is made of short edges
    length = np.abs(x.holonomy)
    parent_edge = np.full(F, -1, dtype=np.int64)  # half-edge of f crossed to reach f
    order = []
    seen = np.zeros(F, dtype=bool)
    tree_edge = np.zeros(H // 2, dtype=bool)
    heap = [(0.0, -1, 0)]
    while heap:
        _, h, f = heapq.heappop(heap)
        if seen[f]:
            continue
        seen[f] = True
        order.append(f)
        if h >= 0:
            parent_edge[f] = h
            tree_edge[h >> 1] = True
        for g in tri[f]:
            nb = face_of[g ^ 1]
            if not seen[nb]:
                heapq.heappush(heap, (-round(float(length[g]), 12), int(g ^ 1), int(nb)))

    cycles = tuple(2 * e for e in range(H // 2) if not tree_edge[e])
    n = len(cycles)
    expected = 2 * x.genus + x.marked_count - 1
    if n != expected:
        raise DegenerateFrame(f"basis has {n} elements, expected {expected}")

    e2b = np.zeros((H, n), dtype=np.int64)
    known = np.zeros(H, dtype=bool)
    for i, h in enumerate(cycles):
        e2b[h, i] = 1
        e2b[h ^ 1, i] = -1
        known[h] = known[h ^ 1] = True
    for f in reversed(order[1:]):
        h = parent_edge[f]
        others = [g for g in tri[f] if g != h]
        if not (known[others[0]] and known[others[1]]):
            raise DegenerateFrame("dual tree peeling failed")
        e2b[h] = -(e2b[others[0]] + e2b[others[1]])
        e2b[h ^ 1] = -e2b[h]
        known[h] = known[h ^ 1] = True
    if np.any(e2b[tri].sum(axis=1)):
        raise DegenerateFrame("basis coordinates violate the cocycle condition")

    omega = _pairing_matrix(tri, e2b)
    e2b.setflags(write=False)
    omega.setflags(write=False)
    return HomologyBasis(cycles, e2b, omega, comb.key)


def _pairing_matrix(tri, e2b):
    c0 = e2b[tri[:, 0]]
    c1 = e2b[tri[:, 1]]
    twice = c0.T @ c1 - c1.T @ c0
    if np.any(twice % 2):
        raise DegenerateFrame("pairing is not integral")
    return twice // 2


def pairing(x, c1, c2):
    """Symplectic pairing of the absolute parts of two cocycles on ``x``."""
    tri = x.triangles
    v, w = c1.values, c2.values
    val = 0.5 * np.sum(v[tri[:, 0]] * w[tri[:, 1]] - v[tri[:, 1]] * w[tri[:, 0]])
    return complex(val) if np.iscomplexobj(val) else float(val)


def cocycle_from_basis_values(basis, basis_values):
    bv = np.asarray(basis_values)
    return Cocycle(basis.edge_to_basis @ bv, bv.copy())


def cocycle_from_edge_values(x, basis, values):
    """Wrap per-half-edge values, checking the cocycle condition."""
    vals = np.asarray(values)
    scale = max(1.0, float(np.abs(vals).max())) if vals.size else 1.0
    if np.abs(vals[x.triangles].sum(axis=1)).max() > 1e-9 * scale:
        raise ValueError("values do not sum to zero around every triangle")
    if np.abs(vals[0::2] + vals[1::2]).max() > 1e-9 * scale:
        raise ValueError("paired half-edges must carry negated values")
    return Cocycle(vals.copy(), vals[list(basis.cycles)].copy())


def dual_cocycle(basis, i):
    """The integer cocycle ``c_i`` with ``c_i(gamma_j) = delta_ij``."""
    bv = np.zeros(basis.rank)
    bv[i] = 1.0
    return cocycle_from_basis_values(basis, bv)


def period_vector(x, basis):
    """Integrals of the one-form over the basis cycles."""
    return np.array([evaluate_chain(x.holonomy, c) for c in _chains(basis)])


def _chains(basis):
    return [(h,) for h in basis.cycles]


def evaluate_chain(values, chain):
    chain = list(chain)
    if not chain:
        return 0.0
    try:
        return values[chain].sum()
    except IndexError:
        raise UnknownEdge(f"chain {chain} uses an edge that does not exist") from None


def evaluate_cocycle(c, chain):
    """Signed sum of the cocycle along a chain of half-edges."""
    return evaluate_chain(c.values, chain)


def period_cocycle(x, basis):
    """The cocycle ``a + i b`` given by the edge holonomies."""
    return Cocycle(x.holonomy.copy(), x.holonomy[list(basis.cycles)].copy())


def nullspace(rows, rtol=NULLSPACE_RTOL):
    """Orthonormal basis (as rows) of the null space of ``rows``."""
    rows = np.atleast_2d(rows)
    _, s, vh = np.linalg.svd(rows)
    if s.size == 0 or s[0] == 0:
        return vh
    rank = int(np.sum(s > rtol * s[0]))
    return vh[rank:]


def tautological_frame(x, basis):
    """Re and Im of the period cocycle and a basis of their symplectic complement."""
    omega = period_cocycle(x, basis)
    a, b = omega.real, omega.imag
    Q = basis.intersection_matrix.astype(float)
    rows = np.vstack([Q @ a.basis_values, Q @ b.basis_values])
    s = np.linalg.svd(rows, compute_uv=False)
    if s[-1] <= NULLSPACE_RTOL * s[0]:
        raise DegenerateFrame("Re and Im of the periods pair degenerately")
    h0 = tuple(cocycle_from_basis_values(basis, v) for v in nullspace(rows))
    return TautFrame(a, b, h0)
