"""
Translation surfaces built from glued Euclidean triangles.

A surface is stored as a list of triangles, each a counter-clockwise triple
of half-edge ids, together with the flat displacement (holonomy) of every
half-edge as a complex number.  Half-edges ``2e`` and ``2e + 1`` are the two
sides of edge ``e``, so the gluing involution is ``h ^ 1`` and paired
half-edges carry negated holonomies.

Every vertex of the triangulation is a point of the marked set: zeros of the
one-form and any additional marked regular points.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AngleDefect,
    DegenerateDeformation,
    FlipLimitExceeded,
    GluingMismatch,
    InvalidSurface,
    NonSimplePolygon,
    SingularMatrix,
)

TWO_PI = 2.0 * math.pi

# scale-aware guards; all overridable per call
DEGENERACY_TOL = 1e-10
CLOSURE_TOL = 1e-9
GLUING_TOL = 1e-9
ANGLE_TOL = 1e-6
DELAUNAY_TOL = 1e-12
MAX_FLIPS = 200_000


def geodesic_matrix(t):
    """The diagonal matrix ``diag(e^t, e^-t)``."""
    return np.array([[math.exp(t), 0.0], [0.0, math.exp(-t)]])


def horocycle_matrix(s):
    """The unipotent matrix ``[[1, s], [0, 1]]``."""
    return np.array([[1.0, s], [0.0, 1.0]])


def rotation_matrix(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _cross(u, v):
    return (u.conjugate() * v).imag


@dataclass(frozen=True)
class PolygonSpec:
    """Polygons in the plane plus side gluings.

    Sides are numbered globally: side ``i`` of polygon 0 is ``i``, the sides of
    polygon 1 follow, and so on.  Side ``j`` of a polygon runs from vertex
    ``j`` to vertex ``j + 1``.  Each gluing pairs two sides that must be
    parallel translates with opposite orientation.
    """

    polygons: tuple
    gluings: tuple

    def __post_init__(self):
        polys = tuple(tuple(complex(z) for z in p) for p in self.polygons)
        glue = tuple((int(a), int(b)) for a, b in self.gluings)
        object.__setattr__(self, "polygons", polys)
        object.__setattr__(self, "gluings", glue)

    @property
    def side_count(self):
        return sum(len(p) for p in self.polygons)

    def sides(self):
        """Yield ``(polygon index, vertex index, start, end)`` per global side."""
        for p, poly in enumerate(self.polygons):
            m = len(poly)
            for j in range(m):
                yield p, j, poly[j], poly[(j + 1) % m]


class _Combinatorics:
    """Data that depends only on the gluing pattern, shared across holonomies."""

    def __init__(self, triangles):
        tri = np.asarray(triangles, dtype=np.int64)
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise InvalidSurface("triangles must be an (F, 3) array")
        F = tri.shape[0]
        H = 3 * F
        flat = tri.ravel()
        if sorted(flat.tolist()) != list(range(H)):
            raise InvalidSurface("every half-edge must appear in exactly one triangle")
        face_of = np.empty(H, dtype=np.int64)
        slot_of = np.empty(H, dtype=np.int64)
        face_of[flat] = np.repeat(np.arange(F), 3)
        slot_of[flat] = np.tile(np.arange(3), F)
        nxt = tri[face_of, (slot_of + 1) % 3]
        prv = tri[face_of, (slot_of + 2) % 3]

        # vertices are orbits of h -> pair(prev(h)) on outgoing half-edges
        vertex_of = np.full(H, -1, dtype=np.int64)
        orbits = []
        for h0 in range(H):
            if vertex_of[h0] >= 0:
                continue
            orbit = []
            h = h0
            while vertex_of[h] < 0:
                vertex_of[h] = len(orbits)
                orbit.append(h)
                h = prv[h] ^ 1
            if h != h0:
                raise InvalidSurface("vertex rotation is not a permutation")
            orbits.append(tuple(orbit))

        # connectivity through the dual graph
        seen = np.zeros(F, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            f = stack.pop()
            for h in tri[f]:
                g = face_of[h ^ 1]
                if not seen[g]:
                    seen[g] = True
                    stack.append(g)
        if not seen.all():
            raise InvalidSurface("surface is not connected")

        V, E = len(orbits), H // 2
        chi = V - E + F
        if chi % 2 or chi > 2:
            raise InvalidSurface(f"impossible Euler characteristic {chi}")

        self.triangles = tri
        self.face_of = face_of
        self.slot_of = slot_of
        self.next = nxt
        self.prev = prv
        self.vertex_of = vertex_of
        self.vertex_orbits = tuple(orbits)
        self.genus = (2 - chi) // 2
        self.euler_characteristic = chi
        self.key = hashlib.sha256(tri.tobytes()).hexdigest()
        self.triangles.setflags(write=False)
        for arr in (face_of, slot_of, nxt, prv, vertex_of):
            arr.setflags(write=False)


@dataclass(frozen=True, eq=False)
class TriangulatedSurface:
    """A translation surface as counter-clockwise triangles of half-edges.

    ``holonomy[h]`` is the planar displacement along half-edge ``h``.  The
    constructor validates the surface: triangle closure, negated holonomy on
    glued half-edges, positive orientation, and cone angles that are positive
    multiples of ``2*pi``.
    """

    triangles: np.ndarray
    holonomy: np.ndarray
    _comb: _Combinatorics = field(default=None, repr=False)

    def __post_init__(self):
        comb = self._comb
        if comb is None:
            comb = _Combinatorics(self.triangles)
        hol = np.array(self.holonomy, dtype=np.complex128)
        if hol.shape != (comb.triangles.size,):
            raise InvalidSurface("need one holonomy per half-edge")
        hol[1::2] = -hol[0::2]
        hol.setflags(write=False)
        object.__setattr__(self, "_comb", comb)
        object.__setattr__(self, "triangles", comb.triangles)
        object.__setattr__(self, "holonomy", hol)
        self._check_geometry()

    # -- validation -------------------------------------------------------
    def _check_geometry(self, closure_tol=CLOSURE_TOL, degeneracy_tol=DEGENERACY_TOL):
        tri, hol = self.triangles, self.holonomy
        e = hol[tri]
        scale = max(1.0, float(np.abs(hol).max()))
        if np.abs(e.sum(axis=1)).max() > closure_tol * scale:
            raise InvalidSurface("triangle holonomies do not close up")
        cross = _cross(e[:, 0], e[:, 1])
        mean_sq = (np.abs(e) ** 2).mean(axis=1)
        if np.any(cross <= degeneracy_tol * mean_sq):
            raise InvalidSurface("degenerate or negatively oriented triangle")

    def _corner_angles(self):
        u = self.holonomy
        v = -self.holonomy[self._comb.prev]
        return np.angle(v * u.conjugate())

    # -- basic quantities -------------------------------------------------
    @property
    def pairing(self):
        return np.arange(self.holonomy.size) ^ 1

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def n_half_edges(self):
        return self.holonomy.size

    @property
    def n_edges(self):
        return self.holonomy.size // 2

    @property
    def n_vertices(self):
        return len(self._comb.vertex_orbits)

    @property
    def genus(self):
        return self._comb.genus

    @property
    def marked_count(self):
        return self.n_vertices

    @property
    def cone_angles(self):
        """Total angle at every vertex, summed from triangle corners."""
        ang = self._corner_angles()
        return np.array([ang[list(orb)].sum() for orb in self._comb.vertex_orbits])

    @property
    def cone_points(self):
        """``[(vertex id, order)]`` with angle ``2*pi*(order + 1)``."""
        out = []
        for v, total in enumerate(self.cone_angles):
            k = total / TWO_PI
            kr = round(k)
            if kr < 1 or abs(k - kr) > ANGLE_TOL:
                raise AngleDefect(f"cone angle {total} at vertex {v} is not a positive multiple of 2pi")
            out.append((v, kr - 1))
        return out

    @property
    def stratum(self):
        return tuple(sorted((a for _, a in self.cone_points), reverse=True))

    @property
    def vertex_of(self):
        """Vertex id at the origin of each half-edge."""
        return self._comb.vertex_of

    def edge_end(self, h):
        return int(self._comb.vertex_of[h ^ 1])

    def content_hash(self):
        digest = hashlib.sha256()
        digest.update(self.triangles.tobytes())
        digest.update(self.holonomy.tobytes())
        return digest.hexdigest()[:16]

    def with_holonomy(self, hol):
        """Same triangles, new half-edge holonomies (validated)."""
        return TriangulatedSurface(self.triangles, hol, self._comb)

    def validate(self):
        """Full check, including cone angles and Gauss-Bonnet."""
        self._check_geometry()
        cp = self.cone_points
        if sum(a for _, a in cp) != 2 * self.genus - 2:
            raise AngleDefect("cone orders violate Gauss-Bonnet")
        if area(self) <= 0:
            raise InvalidSurface("non-positive area")
        return self

    def __repr__(self):
        return (f"TriangulatedSurface(genus={self.genus}, marked={self.marked_count}, "
                f"stratum={self.stratum}, triangles={self.n_triangles})")


# -- constructors -----------------------------------------------------------

def _segments_intersect(p1, p2, q1, q2, tol):
    d1 = _cross(p2 - p1, q1 - p1)
    d2 = _cross(p2 - p1, q2 - p1)
    d3 = _cross(q2 - q1, p1 - q1)
    d4 = _cross(q2 - q1, p2 - q1)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and \
       ((d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)):
        return True

    def on_seg(a, b, c):
        return abs(_cross(b - a, c - a)) <= tol and \
            min(a.real, b.real) - tol <= c.real <= max(a.real, b.real) + tol and \
            min(a.imag, b.imag) - tol <= c.imag <= max(a.imag, b.imag) + tol

    return on_seg(p1, p2, q1) or on_seg(p1, p2, q2) or on_seg(q1, q2, p1) or on_seg(q1, q2, p2)


def _check_simple(poly):
    m = len(poly)
    if m < 3:
        raise NonSimplePolygon("a polygon needs at least three vertices")
    scale = max(abs(z - poly[0]) for z in poly)
    tol = 1e-12 * scale * scale
    signed = sum(_cross(poly[j], poly[(j + 1) % m]) for j in range(m)) / 2
    if signed <= tol:
        raise NonSimplePolygon("polygon is not positively oriented")
    for i in range(m):
        for j in range(i + 1, m):
            if j == i + 1 or (i == 0 and j == m - 1):
                continue
            if _segments_intersect(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m], tol):
                raise NonSimplePolygon(f"sides {i} and {j} intersect")


def _point_in_closed_triangle(p, a, b, c, tol):
    return (_cross(b - a, p - a) >= -tol and _cross(c - b, p - b) >= -tol
            and _cross(a - c, p - c) >= -tol)


def ear_clip(poly):
    """Triangulate a simple counter-clockwise polygon without new vertices.

    Returns vertex index triples.  Among the valid ears the one with the
    largest minimum angle is cut first, which keeps slivers out of the result.
    """
    _check_simple(poly)
    idx = list(range(len(poly)))
    scale = max(abs(z - poly[0]) for z in poly)
    tol = 1e-12 * scale * scale
    out = []
    while len(idx) > 3:
        best, best_q = None, -1.0
        m = len(idx)
        for k in range(m):
            i, j, l = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = poly[i], poly[j], poly[l]
            if _cross(b - a, c - b) <= tol:
                continue
            if any(_point_in_closed_triangle(poly[q], a, b, c, tol)
                   for q in idx if q not in (i, j, l)):
                continue
            q = min(_triangle_angles(a, b, c))
            if q > best_q + 1e-12:
                best, best_q = k, q
        if best is None:
            raise NonSimplePolygon("no ear found; polygon is degenerate")
        m = len(idx)
        out.append((idx[best - 1], idx[best], idx[(best + 1) % m]))
        del idx[best]
    a, b, c = (poly[i] for i in idx)
    if _cross(b - a, c - b) <= tol:
        raise NonSimplePolygon("degenerate final triangle")
    out.append(tuple(idx))
    return out


def _triangle_angles(a, b, c):
    def ang(p, q, r):
        return abs(np.angle((r - p) / (q - p)))
    return ang(a, b, c), ang(b, c, a), ang(c, a, b)


def from_polygon_spec(spec, gluing_tol=GLUING_TOL):
    """Triangulate and glue the polygons of ``spec`` into a surface."""
    if not spec.polygons:
        raise InvalidSurface("empty polygon spec")
    for poly in spec.polygons:
        _check_simple(poly)
    sides = list(spec.sides())
    n_sides = len(sides)
    partner = {}
    for a, b in spec.gluings:
        for s in (a, b):
            if not 0 <= s < n_sides:
                raise GluingMismatch(f"side {s} does not exist")
            if s in partner:
                raise GluingMismatch(f"side {s} glued twice")
        if a == b:
            raise GluingMismatch(f"side {a} glued to itself")
        partner[a], partner[b] = b, a
    if len(partner) != n_sides:
        missing = sorted(set(range(n_sides)) - set(partner))
        raise GluingMismatch(f"unglued sides {missing}")

    side_vec = [end - start for _, _, start, end in sides]
    scale = max(abs(v) for v in side_vec)
    for a, b in spec.gluings:
        if abs(side_vec[a] + side_vec[b]) > gluing_tol * scale:
            raise GluingMismatch(f"sides {a} and {b} are not opposite translates")

    # half-edge ids: glued side pairs first, then interior diagonals
    he_of_side = {}
    hol = []
    for e, (a, b) in enumerate(spec.gluings):
        v = 0.5 * (side_vec[a] - side_vec[b])
        he_of_side[a], he_of_side[b] = 2 * e, 2 * e + 1
        hol.extend([v, -v])
    offset = 0
    triangles = []
    for p, poly in enumerate(spec.polygons):
        m = len(poly)
        diag = {}
        for tri in ear_clip(poly):
            row = []
            for u, w in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                if w == (u + 1) % m:
                    row.append(he_of_side[offset + u])
                elif u == (w + 1) % m:
                    raise InvalidSurface("ear clipping produced a reversed side")
                else:
                    key = (min(u, w), max(u, w))
                    if key not in diag:
                        diag[key] = len(hol)
                        vec = poly[key[1]] - poly[key[0]]
                        hol.extend([vec, -vec])
                    h = diag[key]
                    row.append(h if u < w else h + 1)
            triangles.append(row)
        offset += m
    surf = TriangulatedSurface(np.array(triangles), np.array(hol))
    return surf.validate()


def square_torus():
    """The unit square with opposite sides glued; one marked point."""
    spec = PolygonSpec([[0, 1, 1 + 1j, 1j]], [(0, 2), (1, 3)])
    return from_polygon_spec(spec)


def lattice_torus(v1, v2):
    """Torus ``C / (Z v1 + Z v2)`` with one marked point; ``Im(conj(v1) v2) > 0``."""
    v1, v2 = complex(v1), complex(v2)
    spec = PolygonSpec([[0, v1, v1 + v2, v2]], [(0, 2), (1, 3)])
    return from_polygon_spec(spec)


def l_shape():
    """Three unit squares in an L, opposite sides glued: genus 2, stratum H(2)."""
    poly = [0, 1, 2, 2 + 1j, 1 + 1j, 1 + 2j, 2j, 1j]
    spec = PolygonSpec([poly], [(0, 5), (1, 3), (2, 7), (4, 6)])
    return from_polygon_spec(spec)


def torus_two_marked(split=0.5):
    """Square torus with a second marked point at ``(split, 0)``."""
    s = float(split)
    left = [0, s, s + 1j, 1j]
    right = [s, 1, 1 + 1j, s + 1j]
    spec = PolygonSpec([left, right], [(0, 2), (4, 6), (1, 7), (3, 5)])
    return from_polygon_spec(spec)


BUNDLED = {
    "square_torus": square_torus,
    "l_shape": l_shape,
    "torus_two_marked": torus_two_marked,
}


# -- geometry ---------------------------------------------------------------

def area(x):
    """Sum of triangle areas."""
    e = x.holonomy[x.triangles]
    return float(0.5 * _cross(e[:, 0], e[:, 1]).sum())


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    return M


def _act(M, z):
    x, y = z.real, z.imag
    return (M[0, 0] * x + M[0, 1] * y) + 1j * (M[1, 0] * x + M[1, 1] * y)


def apply_matrix(x, M):
    """Act on every edge holonomy by the orientation-preserving matrix ``M``."""
    M = _as_matrix(M)
    det = float(np.linalg.det(M))
    if abs(det) <= 1e-14 * max(1.0, float(np.abs(M).max()) ** 2):
        raise SingularMatrix(f"det = {det}")
    if det < 0:
        raise SingularMatrix("orientation-reversing matrices do not act on translation surfaces")
    return x.with_holonomy(_act(M, x.holonomy))


def normalize_area(x, target=1.0):
    """Rescale to the given area."""
    return x.with_holonomy(x.holonomy * math.sqrt(target / area(x)))


def deform(x, delta, max_steps=64):
    """Add the cocycle ``delta`` (complex value per half-edge) to the holonomies.

    The straight path from ``x`` to ``x + delta`` is followed in steps; when a
    step would collapse a triangle it is halved, and between steps the
    triangulation is flipped back to Delaunay with ``delta`` carried along.
    """
    delta = np.asarray(delta, dtype=np.complex128)
    try:
        return x.with_holonomy(x.holonomy + delta)
    except InvalidSurface:
        pass
    tri = [list(r) for r in x.triangles.tolist()]
    hol = x.holonomy.tolist()
    rest = delta.tolist()
    face_of = x._comb.face_of.tolist()
    slot_of = x._comb.slot_of.tolist()
    steps = 0
    while True:
        step = 1.0
        while True:
            trial = [h + step * d for h, d in zip(hol, rest)]
            if _triangles_ok(tri, trial):
                break
            step /= 2
            steps += 1
            if steps > max_steps:
                raise DegenerateDeformation("deformation collapses a triangle")
        hol = trial
        rest = [(1 - step) * d for d in rest]
        if step == 1.0:
            break
        _flip_loop(tri, hol, face_of, slot_of, [rest], MAX_FLIPS, DELAUNAY_TOL)
    return TriangulatedSurface(np.array(tri), np.array(hol))


def _triangles_ok(tri, hol):
    for a, b, c in tri:
        u, v, w = hol[a], hol[b], hol[c]
        cr = (u.conjugate() * v).imag
        if cr <= DEGENERACY_TOL * (abs(u) ** 2 + abs(v) ** 2 + abs(w) ** 2) / 3:
            return False
    return True


# -- Delaunay flips ---------------------------------------------------------

def _flip_loop(tri, hol, face_of, slot_of, payloads, max_flips, tol, strict=True):
    """Flip non-Delaunay edges in place until none remain.

    ``payloads`` are per-half-edge linear data (lists or 2-D arrays indexed by
    half-edge) transported by the same rule as the holonomy.  Returns the flip
    count.  With ``strict=False`` the loop stops quietly at ``max_flips``; the
    triangulation is then valid but not necessarily Delaunay.
    """
    H = len(hol)
    stack = list(range(0, H, 2))
    queued = [True] * (H // 2)
    flips = 0
    while stack:
        h = stack.pop()
        queued[h >> 1] = False
        k = h ^ 1
        f1, f2 = face_of[h], face_of[k]
        if f1 == f2:
            continue
        s1, s2 = slot_of[h], slot_of[k]
        t1, t2 = tri[f1], tri[f2]
        h1, h2 = t1[(s1 + 1) % 3], t1[(s1 + 2) % 3]
        k1, k2 = t2[(s2 + 1) % 3], t2[(s2 + 2) % 3]
        # angle at C (apex over h) and at D (apex over k)
        u, v = hol[h2], -hol[h1]
        z = u.conjugate() * v
        cot_c = z.real / z.imag
        u, v = hol[k2], -hol[k1]
        z = u.conjugate() * v
        cot_d = z.real / abs(z.imag)
        # relative test: cocircular quads (rectangles) must not flip back and forth
        if cot_c + cot_d >= -tol * (1.0 + abs(cot_c) + abs(cot_d)):
            continue
        if flips >= max_flips:
            if strict:
                raise FlipLimitExceeded(f"more than {max_flips} flips")
            break
        flips += 1
        # the two triangles form a cylinder when a pair of opposite quad sides
        # is glued; repeated flips only twist it, so twist by the best multiple
        # of the core at once
        if h1 == k1 ^ 1 or h2 == k2 ^ 1:
            side, core = (h1, h2) if h1 == k1 ^ 1 else (h2, h1)
            c = hol[core]
            m = -round((hol[h].conjugate() * c).real / (c.real * c.real + c.imag * c.imag))
            if m:
                hol[h] += m * c
                hol[k] = -hol[h]
                hol[side] -= m * c
                hol[side ^ 1] = -hol[side]
                for p in payloads:
                    p[h] = p[h] + m * p[core]
                    p[k] = -p[h]
                    p[side] = p[side] - m * p[core]
                    p[side ^ 1] = -p[side]
                for he in (h, h1, h2, k1, k2):
                    if not queued[he >> 1]:
                        queued[he >> 1] = True
                        stack.append(he & ~1)
                continue
        new = -(hol[h2] + hol[k1])
        hol[h], hol[k] = new, -new
        for p in payloads:
            val = -(p[h2] + p[k1])
            p[h] = val
            p[k] = -val
        tri[f1] = [h, h2, k1]
        tri[f2] = [k, k2, h1]
        for he, f, s in ((h, f1, 0), (h2, f1, 1), (k1, f1, 2), (k, f2, 0), (k2, f2, 1), (h1, f2, 2)):
            face_of[he], slot_of[he] = f, s
        for he in (h1, h2, k1, k2):
            if not queued[he >> 1]:
                queued[he >> 1] = True
                stack.append(he & ~1)
    return flips


def delaunay_arrays(x, payloads=(), max_flips=MAX_FLIPS, tol=DELAUNAY_TOL, strict=True):
    """Delaunay flip on copies of the arrays of ``x``.

    Returns ``(triangles, holonomy, payloads, flips)``; half-edge ids of
    unflipped edges keep their meaning.
    """
    tri = [list(r) for r in x.triangles.tolist()]
    hol = x.holonomy.tolist()
    face_of = x._comb.face_of.tolist()
    slot_of = x._comb.slot_of.tolist()
    pay = [np.array(p, copy=True) for p in payloads]
    flips = _flip_loop(tri, hol, face_of, slot_of, pay, max_flips, tol, strict)
    return tri, hol, pay, flips


def reclose(tri, hol):
    """Nearest edge holonomies (least squares) that close every triangle.

    Flips build new edges from sums of old ones, so closure errors add up;
    under ``a_t`` they are stretched with the surface and would eventually
    break validation.
    """
    tri = np.asarray(tri)
    hol = np.asarray(hol, dtype=np.complex128)
    E = hol.size // 2
    C = np.zeros((tri.shape[0], E))
    sign = np.where(tri % 2 == 0, 1.0, -1.0)
    for j in range(3):
        np.add.at(C, (np.arange(tri.shape[0]), tri[:, j] >> 1), sign[:, j])
    z = hol[0::2]
    z = z - np.linalg.pinv(C) @ (C @ z)
    out = np.empty_like(hol)
    out[0::2], out[1::2] = z, -z
    return out


def delaunay_retriangulate(x, max_flips=MAX_FLIPS, tol=DELAUNAY_TOL, strict=True):
    """Isometric surface whose triangulation is Delaunay (up to ``tol``)."""
    tri, hol, _, flips = delaunay_arrays(x, max_flips=max_flips, tol=tol, strict=strict)
    if flips == 0:
        return x
    return TriangulatedSurface(np.array(tri), reclose(tri, hol))


def is_delaunay(x, tol=1e-9):
    hol = x.holonomy
    comb = x._comb
    for h in range(0, hol.size, 2):
        k = h ^ 1
        if comb.face_of[h] == comb.face_of[k]:
            continue
        z = hol[comb.prev[h]].conjugate() * -hol[comb.next[h]]
        w = hol[comb.prev[k]].conjugate() * -hol[comb.next[k]]
        a, b = z.real / z.imag, w.real / w.imag
        if a + b < -tol * (1.0 + abs(a) + abs(b)):
            return False
    return True



# deep in the cusp a Delaunay triangulation can be a huge number of flips
# away (every flip is one Dehn-twist step); past this many flips callers that
# only need some good triangulation keep the current one
SOFT_FLIPS = 1_000
# geodesic flow is applied in steps of at most this length, flipping after
# each, so the triangulation tracks the flow instead of catching up at the end
FLOW_STEP = 0.25


def flow(x, t, s=0.0):
    """``a_t u_s x``, flipped towards Delaunay along the way."""
    y = delaunay_retriangulate(x, max_flips=SOFT_FLIPS, strict=False)
    if s:
        y = delaunay_retriangulate(apply_matrix(y, horocycle_matrix(s)),
                                   max_flips=SOFT_FLIPS, strict=False)
    n = max(1, math.ceil(abs(t) / FLOW_STEP))
    g = geodesic_matrix(t / n)
    for _ in range(n if t else 0):
        y = delaunay_retriangulate(apply_matrix(y, g), max_flips=SOFT_FLIPS, strict=False)
    return y
