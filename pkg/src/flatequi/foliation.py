"""
Charts on the unstable leaf, period boxes and the nondivergence search.

Near ``x`` the unstable leaf is ``Phi(x) + s b + w`` with ``w`` in ``H^(0)(x)``:
only real parts of periods move.  A point of the leaf is realized by adding
the real edge values of the deformation cocycle to the edge holonomies of the
base surface; the frame of the base is used throughout the box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutsideBox, RadiusTooLarge, SearchExhausted
from .homology import tautological_frame
from .norms import DEFAULT_C0, agy_norm, agy_norms, injectivity_proxy, make_context
from .saddle import systole
from .surface import deform, flow

# the unit cube of measure coordinates is mapped strictly inside the box
CHART_MARGIN = 0.999


@dataclass(frozen=True, eq=False)
class PeriodBox:
    """Period box of AGY radius ``r`` centred at ``base``.

    ``directions`` are the ``H^(0)`` frame vectors rescaled to AGY norm one,
    as rows of basis values; ``edge_directions`` holds their edge values.
    """

    base: object
    frame: object
    r: float
    basis: object
    ctx: object
    directions: np.ndarray
    edge_directions: np.ndarray
    b_values: np.ndarray
    b_edges: np.ndarray

    @property
    def d(self):
        return self.frame.d

    def chart_scale(self, cube=1.0):
        """Factor taking measure coordinates in ``[0, cube]^d`` into the box."""
        return CHART_MARGIN * self.r / (max(self.d, 1) * cube)

    def deformation(self, s, w):
        """Basis values of ``s b + sum_j w_j dir_j``."""
        w = np.asarray(w, dtype=float).reshape(self.d)
        return s * self.b_values + w @ self.directions

    def norm(self, s, w):
        return agy_norm(self.ctx, self.deformation(s, w))


def period_box(x, r, c0=DEFAULT_C0, ctx=None, basis=None):
    """The period box of radius ``r`` at ``x``; ``r`` may not exceed the proxy radius."""
    if ctx is None:
        ctx = make_context(x, c0=c0, basis=basis)
    r_hat, _ = injectivity_proxy(ctx)
    if not 0 < r <= r_hat:
        raise RadiusTooLarge(f"r = {r} exceeds the injectivity proxy {r_hat}")
    basis = ctx.basis
    frame = tautological_frame(x, basis)
    if frame.d:
        raw = np.array([w.basis_values for w in frame.h0])
        norms = agy_norms(ctx, raw)
        dirs = raw / norms[:, None]
    else:
        dirs = np.zeros((0, basis.rank))
    e2b = basis.edge_to_basis.astype(float)
    b_values = np.asarray(frame.b.basis_values, dtype=float)
    for arr in (dirs, b_values):
        arr.setflags(write=False)
    return PeriodBox(x, frame, float(r), basis, ctx, dirs, dirs @ e2b.T,
                     b_values, e2b @ b_values)


def leaf_point(box, s, w, check=True):
    """Surface at chart coordinates ``(s, w)`` of the unstable leaf through the base."""
    w = np.asarray(w, dtype=float).reshape(box.d)
    if check:
        nrm = box.norm(s, w)
        if not nrm < box.r:
            raise OutsideBox(f"deformation has AGY norm {nrm} >= r = {box.r}")
    delta = s * box.b_edges + w @ box.edge_directions
    if not np.any(delta):
        return box.base
    return deform(box.base, delta.astype(complex))


def push(x, t, s):
    """``a_t u_s x``, flipped to Delaunay along the way."""
    return flow(x, t, s)


def nondivergence_search(x, t0, threshold, T_max, s_step=1 / 64, t_step=1 / 8):
    """First ``(s, t)`` on the grid with ``systole(a_t u_s x) >= threshold``.

    ``t`` runs over ``[t0, T_max]`` in steps of ``t_step`` and, for each
    ``t``, ``s`` over ``[0, 1/2]`` in steps of ``s_step``.
    """
    nt = int(math.floor((T_max - t0) / t_step + 1e-9))
    ns = int(round(0.5 / s_step))
    for i in range(nt + 1):
        t = t0 + i * t_step
        for j in range(ns + 1):
            s = j * s_step
            if systole(push(x, t, s)) >= threshold:
                return s, t
    raise SearchExhausted(f"no grid point reached systole {threshold} for t <= {T_max}")
