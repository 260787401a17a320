"""
Saddle connections by developing triangles into the plane.

From every corner of every triangle the open sector between its two edges is
explored: triangles are unfolded across the edge facing the corner, the
visible window shrinks at every newly developed vertex, and a branch is
dropped once the visible part of the crossed edge lies farther than ``R``
from the corner.  Each developed vertex strictly inside the window is a
saddle connection.  A half-edge is reported from the corner at its origin,
so every connection appears once per orientation.
"""
from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded
from .surface import SOFT_FLIPS, TriangulatedSurface, delaunay_arrays, reclose

DEFAULT_BUDGET = 2_000_000
HOLONOMY_TOL = 1e-9
CACHE_ENV = "FLATEQUI_CACHE_DIR"


@dataclass(frozen=True)
class SaddleConnection:
    """A saddle connection: a chain of half-edges homotopic to it, and its holonomy."""

    chain: tuple
    holonomy: complex
    start: int
    end: int

    @property
    def length(self):
        return abs(self.holonomy)

    @property
    def angle(self):
        return math.atan2(self.holonomy.imag, self.holonomy.real) % (2 * math.pi)


def _window_distance(P, Q, L, Rr):
    """Distance from the origin to the part of segment PQ inside the cone (L, Rr)."""
    D = Q - P
    lo, hi = 0.0, 1.0
    for a, b in (((L.conjugate() * P).imag, (L.conjugate() * D).imag),
                 ((P.conjugate() * Rr).imag, (D.conjugate() * Rr).imag)):
        # constraint a + mu * b >= 0
        if b > 0:
            lo = max(lo, -a / b)
        elif b < 0:
            hi = min(hi, -a / b)
        elif a < 0:
            return math.inf
    if lo > hi:
        if lo - hi > 1e-9:
            return math.inf
        hi = lo
    U = P + lo * D
    V = P + hi * D
    W = V - U
    ww = (W.conjugate() * W).real
    mu = 0.0 if ww == 0 else min(1.0, max(0.0, -(W.conjugate() * U).real / ww))
    return abs(U + mu * W)


def _develop(tri_next, hol, vertex_of, R, with_chains=True, budget=DEFAULT_BUDGET, eps=1e-12):
    """Raw saddle connections of length <= R as ``(chain|None, hol, start, end, corner)``.

    ``corner`` is the half-edge whose origin corner the connection leaves
    through; it tells apart connections with equal holonomy and endpoints.
    """
    out = []
    popped = 0
    H = len(hol)
    for h0 in range(H):
        A = hol[h0]
        v0 = vertex_of[h0]
        e1 = tri_next[h0]
        e2 = tri_next[e1]
        if abs(A) <= R:
            out.append(((h0, None) if with_chains else None, A, v0, vertex_of[e1], h0))
        B = -hol[e2]
        cA = (h0, None) if with_chains else None
        cB = (e2 ^ 1, None) if with_chains else None
        stack = [(e1, A, B, A, B, cA, cB)]
        while stack:
            e, P, Q, L, Rr, cP, cQ = stack.pop()
            if _window_distance(P, Q, L, Rr) > R:
                continue
            popped += 1
            if popped > budget:
                raise BudgetExceeded(f"developed more than {budget} triangles")
            t = e ^ 1
            t1 = tri_next[t]
            t2 = tri_next[t1]
            C = P + hol[t1]
            cC = (t1, cP) if with_chains else None
            absC = abs(C)
            inside_l = (L.conjugate() * C).imag > eps * abs(L) * absC
            inside_r = (C.conjugate() * Rr).imag > eps * abs(Rr) * absC
            if inside_l and inside_r:
                if absC <= R:
                    out.append((cC, C, v0, vertex_of[t2], h0))
                stack.append((t1, P, C, L, C, cP, cC))
                stack.append((t2, C, Q, C, Rr, cC, cQ))
            elif not inside_l:
                stack.append((t2, C, Q, L, Rr, cC, cQ))
            else:
                stack.append((t1, P, C, L, Rr, cP, cC))
    return out


def _unlink(node):
    chain = []
    while node is not None:
        chain.append(node[0])
        node = node[1]
    chain.reverse()
    return tuple(chain)


def _dedup(raw, tol=HOLONOMY_TOL):
    # each connection leaves through exactly one corner, so only repeats from
    # the same corner can be duplicates
    raw = sorted(raw, key=lambda r: (r[4], abs(r[1]), r[1].real, r[1].imag))
    kept = []
    for r in raw:
        if kept:
            p = kept[-1]
            if p[4] == r[4] and abs(p[1] - r[1]) <= tol * max(1.0, abs(r[1])):
                continue
        kept.append(r)
    return kept


def _sort_key(sc):
    return (round(sc.length, 12), round(sc.angle, 12), sc.start, sc.end, sc.chain)


def _soft_delaunay(x):
    tri, hol, _, flips = delaunay_arrays(x, max_flips=SOFT_FLIPS, strict=False)
    return x if flips == 0 else TriangulatedSurface(np.array(tri), reclose(tri, hol))


def _arrays(x):
    return x._comb.next.tolist(), x.holonomy.tolist(), x._comb.vertex_of.tolist()


def enumerate_connections(x, R, budget=DEFAULT_BUDGET):
    """All saddle connections of ``x`` with holonomy length at most ``R``.

    The search runs on a Delaunay triangulation of ``x``.  Chains refer to
    the half-edges of ``x``: when flips were needed, the chain of every new
    edge is carried along as an integer combination of the old edges.
    """
    if R <= 0:
        raise ValueError("radius must be positive")
    E = x.n_edges
    ident = np.zeros((x.n_half_edges, E), dtype=np.int64)
    ident[0::2] = np.eye(E, dtype=np.int64)
    ident[1::2] = -np.eye(E, dtype=np.int64)
    tri, hol, (comb,), flips = delaunay_arrays(x, payloads=(ident,), max_flips=SOFT_FLIPS, strict=False)
    y = x if flips == 0 else TriangulatedSurface(np.array(tri), reclose(tri, hol))
    nxt, hl, vert = _arrays(y)
    raw = _dedup(_develop(nxt, hl, vert, R, True, budget))
    out = []
    for c, h, s, e, _ in raw:
        chain = _unlink(c)
        if flips:
            chain = _expand(comb[list(chain)].sum(axis=0))
        out.append(SaddleConnection(chain, h, s, e))
    out.sort(key=_sort_key)
    return out


def _expand(counts):
    chain = []
    for e in np.flatnonzero(counts).tolist():
        k = int(counts[e])
        chain.extend([2 * e if k > 0 else 2 * e + 1] * abs(k))
    return tuple(chain)


def holonomies(x, R, budget=DEFAULT_BUDGET, delaunay=True):
    """Holonomy vectors of all saddle connections of length at most ``R``."""
    y = _soft_delaunay(x) if delaunay else x
    nxt, hol, vert = _arrays(y)
    raw = _dedup(_develop(nxt, hol, vert, R, False, budget))
    return np.array([r[1] for r in raw], dtype=np.complex128)


def connection_classes(x, basis, R, budget=DEFAULT_BUDGET):
    """Holonomies and integer basis classes of all connections up to length ``R``.

    The surface is flipped to Delaunay first with the basis coordinates of
    every half-edge carried along, so classes refer to the basis of ``x``.
    """
    tri, hol, (e2b,), _ = delaunay_arrays(x, payloads=(basis.edge_to_basis,),
                                          max_flips=SOFT_FLIPS, strict=False)
    y = TriangulatedSurface(np.array(tri), reclose(tri, hol))
    nxt, hl, vert = _arrays(y)
    raw = _dedup(_develop(nxt, hl, vert, R, True, budget))
    hols = np.array([r[1] for r in raw], dtype=np.complex128)
    classes = np.array([e2b[list(_unlink(r[0]))].sum(axis=0) for r in raw],
                       dtype=np.int64).reshape(len(raw), basis.rank)
    order = np.lexsort((np.round(np.angle(hols) % (2 * np.pi), 12), np.round(np.abs(hols), 12)))
    return hols[order], classes[order]


def systole(x, budget=DEFAULT_BUDGET):
    """Length of the shortest saddle connection."""
    y = _soft_delaunay(x)
    nxt, hl, vert = _arrays(y)
    # every edge is a saddle connection, so the shortest edge bounds the systole
    R = float(np.abs(y.holonomy).min())
    while True:
        raw = _develop(nxt, hl, vert, R * (1 + 1e-12), False, budget)
        if raw:
            return min(abs(r[1]) for r in raw)
        R *= 2


# the operation name used in the docs; shadows the builtin only as an attribute
enumerate = enumerate_connections


# -- cache ------------------------------------------------------------------

def _fmt_chain(chain):
    return " ".join(("+" if h % 2 == 0 else "-") + str(h >> 1) for h in chain)


def _parse_chain(text):
    out = []
    for tok in text.split():
        e = int(tok[1:])
        out.append(2 * e if tok[0] == "+" else 2 * e + 1)
    return tuple(out)


def write_connections(path, surface_hash, R, connections):
    """Write one record per connection: signed edge chain, Re, Im."""
    path = Path(path)
    lines = [f"# surface {surface_hash}", f"# radius {R!r}", f"# count {len(connections)}"]
    for sc in connections:
        lines.append(f"{_fmt_chain(sc.chain)}\t{sc.holonomy.real!r}\t{sc.holonomy.imag!r}")
    path.write_text("\n".join(lines) + "\n")


def read_connections(path, x=None):
    """Read a cache file; with ``x`` given, endpoints are recovered from the chains."""
    header = {}
    out = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(" ")
            header[key] = val
            continue
        chain_txt, re_txt, im_txt = line.split("\t")
        chain = _parse_chain(chain_txt)
        hol = complex(float(re_txt), float(im_txt))
        if x is not None:
            start = int(x.vertex_of[chain[0]])
            end = x.edge_end(chain[-1])
        else:
            start = end = -1
        out.append(SaddleConnection(chain, hol, start, end))
    if "surface" not in header or "radius" not in header:
        raise ValueError(f"{path}: missing header")
    return header["surface"], float(header["radius"]), out


class ConnectionCache:
    """Append-only cache of enumerations keyed by (surface hash, radius).

    Readers never block each other; writes are serialized by a lock.  When a
    directory is configured (argument or ``FLATEQUI_CACHE_DIR``) each entry is
    also written to disk once and never overwritten.
    """

    def __init__(self, directory=None):
        directory = directory or os.environ.get(CACHE_ENV)
        self.directory = Path(directory) if directory else None
        self._mem = {}
        self._lock = threading.Lock()

    def _file(self, key):
        h, R = key
        return self.directory / f"sc_{h}_{R!r}.tsv"

    def get(self, x, R, budget=DEFAULT_BUDGET):
        key = (x.content_hash(), float(R))
        hit = self._mem.get(key)
        if hit is not None:
            return hit
        if self.directory is not None and self._file(key).exists():
            _, _, conns = read_connections(self._file(key), x)
            conns = tuple(conns)
        else:
            conns = tuple(enumerate_connections(x, R, budget))
        with self._lock:
            if key not in self._mem:
                self._mem[key] = conns
                if self.directory is not None:
                    self.directory.mkdir(parents=True, exist_ok=True)
                    f = self._file(key)
                    if not f.exists():
                        write_connections(f, key[0], key[1], conns)
            return self._mem[key]


default_cache = ConnectionCache()
