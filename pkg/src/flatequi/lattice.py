"""
Vectorized helpers for unimodular lattices in the plane (flat tori with one
marked point).  A batch of lattices is a pair of complex arrays ``(v1, v2)``
of basis vectors with ``Im(conj(v1) v2) > 0``.
"""
from __future__ import annotations

import math

import numpy as np

from .homology import build_basis, period_vector

SQRT3_2 = math.sqrt(3) / 2


def is_lattice_surface(x):
    """True for a torus with a single marked point."""
    return x.genus == 1 and x.marked_count == 1


def torus_basis(x):
    """Positively oriented period basis of a one-point torus."""
    v1, v2 = period_vector(x, build_basis(x))
    if (np.conj(v1) * v2).imag < 0:
        v1, v2 = v2, v1
    return complex(v1), complex(v2)


def act(M, z):
    """Apply a 2x2 real matrix to an array of plane vectors stored as complex numbers."""
    M = np.asarray(M, dtype=float)
    x, y = z.real, z.imag
    return (M[0, 0] * x + M[0, 1] * y) + 1j * (M[1, 0] * x + M[1, 1] * y)


def flow_batch(v, t, s):
    """``a_t u_s`` applied to vectors ``v``, with ``s`` an array (one per vector)."""
    x = v.real + s * v.imag
    y = v.imag
    return math.exp(t) * x + 1j * math.exp(-t) * y


def gauss_reduce(v1, v2, max_iter=200):
    """Lagrange-Gauss reduction of a batch: ``|v1| <= |v2|`` and ``|<v1, v2>| <= |v1|^2 / 2``.

    Orientation is preserved.
    """
    v1 = np.atleast_1d(np.array(v1, dtype=complex, copy=True))
    v2 = np.atleast_1d(np.array(v2, dtype=complex, copy=True))
    for _ in range(max_iter):
        swap = np.abs(v2) < np.abs(v1)
        if swap.any():
            # (v1, v2) -> (v2, -v1) keeps the orientation
            a = v1[swap].copy()
            v1[swap] = v2[swap]
            v2[swap] = -a
        m = np.rint((np.conj(v1) * v2).real / np.abs(v1) ** 2)
        active = m != 0
        if not active.any() and not swap.any():
            break
        v2 = v2 - m * v1
    else:
        raise RuntimeError("Gauss reduction did not converge")
    return v1, v2


def haar_lattices(n, rng):
    """``n`` unimodular lattices distributed by the Haar probability measure.

    The shape ``z`` is drawn from the hyperbolic area measure on the standard
    fundamental domain by rejection (``Im z`` has density ``~ y^-2``), and the
    lattice ``(1, z) / sqrt(Im z)`` is turned by a uniform angle.
    """
    out_z = np.empty(0, dtype=complex)
    while out_z.size < n:
        m = int((n - out_z.size) * 1.2) + 16
        x = rng.uniform(-0.5, 0.5, size=m)
        u = 1.0 - rng.uniform(size=m)   # (0, 1]
        y = SQRT3_2 / u
        z = x + 1j * y
        out_z = np.concatenate([out_z, z[np.abs(z) >= 1]])
    z = out_z[:n]
    theta = rng.uniform(0, 2 * math.pi, size=n)
    rot = np.exp(1j * theta) / np.sqrt(z.imag)
    return rot, rot * z


def primitive_coefficients(P, Q):
    """Primitive pairs ``(p, q)`` with ``|p| <= P``, ``|q| <= Q``, as two int arrays."""
    p, q = np.meshgrid(np.arange(-P, P + 1), np.arange(-Q, Q + 1), indexing="ij")
    p, q = p.ravel(), q.ravel()
    keep = np.gcd(p, q) == 1
    return p[keep], q[keep]


def radial_sum(v1, v2, profile, R, chunk=20000):
    """``sum_v profile(|v|)`` over primitive lattice vectors with ``|v| <= R``.

    Bases must be reduced.  For a reduced basis the angle between ``v1`` and
    ``v2`` is at least 60 degrees, so ``|p v1 + q v2| >= (sqrt3/2) max(|p||v1|, |q||v2|)``
    bounds the coefficients.  Lattices are bucketed by their bound on ``p``.
    When ``|v1| R`` is below the covolume every other primitive vector is
    longer than ``R``, so only ``+-v1`` contribute; thin lattices cost nothing.
    """
    n = v1.size
    out = np.zeros(n)
    l1 = np.abs(v1)
    l2 = np.abs(v2)
    covol = np.abs((np.conj(v1) * v2).imag)
    thin = l1 * R < covol
    if thin.any():
        out[thin] = 2 * np.where(l1[thin] <= R, profile(np.minimum(l1[thin], R)), 0.0)
    fat = np.flatnonzero(~thin)
    P = np.ceil(R / (SQRT3_2 * l1[fat])).astype(np.int64)
    Q = np.ceil(R / (SQRT3_2 * l2[fat])).astype(np.int64)
    for Pb in np.unique(P):
        sel = P == Pb
        idx_b = fat[sel]
        Qb = int(Q[sel].max())
        p, q = primitive_coefficients(int(Pb), Qb)
        for start in range(0, idx_b.size, chunk):
            idx = idx_b[start:start + chunk]
            vec = p[None, :] * v1[idx, None] + q[None, :] * v2[idx, None]
            r = np.abs(vec)
            vals = np.where(r <= R, profile(np.minimum(r, R)), 0.0)
            out[idx] = vals.sum(axis=1)
    return out
