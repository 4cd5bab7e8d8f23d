"""Planar and spatial primitives for bounded-uncertainty triangulation.

Conventions
-----------
The viewing line (or plane) is horizontal and lies above the ground. A wedge
is described by its apex and the angle ``theta`` of its bisector measured
clockwise from the +x axis, so the bisector direction is
``(cos(theta), -sin(theta))`` and points below the viewing line for
``0 < theta < pi``. The two boundary rays sit at ``theta - alpha`` and
``theta + alpha``.

For a camera pair ``(s_p, s_q)`` with ``s_p`` on the left, the closed forms
below use *elevation* angles measured from the viewing line on each camera's
own side: ``theta_p`` equals the wedge angle of the left camera and
``theta_q = pi - (wedge angle of the right camera)``. Under this convention
the optimal configuration is ``theta_p = theta_q = pi / 4``.

Quadrilateral labelling for a pair: ``v1`` is where the two inner boundaries
meet (the vertex nearest the viewing line, equal to the target at the
optimum), ``v3`` is where the two outer boundaries meet, ``v2`` lies on the
left camera's outer boundary and ``v4`` on the right camera's outer boundary.
``diag1 = |v1 v3|`` is the vertical diagonal and ``diag2 = |v2 v4|``.
"""

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

from ._validation import as_point
from .exceptions import (
    DegenerateConfiguration,
    EmptyIntersection,
    UnboundedIntersection,
)

#: Relative tolerance for collinearity and duplicate-vertex checks.
REL_TOL = 1e-12
#: Half-size of the clipping box, in units of the configuration scale.
_BOX_HALF = 0.5e6


def ray_direction(angle):
    """Unit direction at ``angle`` measured clockwise from +x."""
    return np.array([math.cos(angle), -math.sin(angle)])


@dataclass(frozen=True)
class HalfPlane2:
    """Closed half-plane ``{p : (p - boundary_point) . inward_normal >= 0}``."""

    boundary_point: np.ndarray
    inward_normal: np.ndarray

    def __post_init__(self):
        b = as_point(self.boundary_point, 2, "boundary_point")
        n = as_point(self.inward_normal, 2, "inward_normal")
        if abs(np.hypot(*n) - 1.0) > 1e-12:
            raise ValueError("inward_normal must have unit length")
        object.__setattr__(self, "boundary_point", b)
        object.__setattr__(self, "inward_normal", n)

    def signed_distance(self, points):
        points = np.asarray(points, dtype=float)
        return (points - self.boundary_point) @ self.inward_normal

    def contains(self, point, tol=0.0):
        return bool(self.signed_distance(point) >= -tol)


@dataclass(frozen=True)
class Wedge2:
    """Planar uncertainty region of one camera: apex, bisector angle, half-angle."""

    apex: np.ndarray
    theta: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "apex", as_point(self.apex, 2, "apex"))
        theta, alpha = float(self.theta), float(self.alpha)
        if not (0.0 < alpha < math.pi / 4):
            raise ValueError(f"alpha must lie in (0, pi/4), got {alpha!r}")
        if not (alpha < theta and theta + alpha < math.pi):
            raise ValueError(
                "both boundary rays must point strictly below the viewing line "
                f"(theta={theta!r}, alpha={alpha!r})"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "alpha", alpha)

    @property
    def bisector(self):
        return ray_direction(self.theta)

    def contains(self, point, tol=0.0):
        return all(hp.contains(point, tol) for hp in wedge_halfplanes(self))


@dataclass(frozen=True)
class Cone3:
    """Right circular cone with apex, unit axis and half-angle ``alpha``."""

    apex: np.ndarray
    axis: np.ndarray
    alpha: float

    def __post_init__(self):
        apex = as_point(self.apex, 3, "apex")
        axis = as_point(self.axis, 3, "axis")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("axis must have unit length")
        if not (0.0 < self.alpha < math.pi / 4):
            raise ValueError(f"alpha must lie in (0, pi/4), got {self.alpha!r}")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "alpha", float(self.alpha))

    def angle_to(self, point):
        v = np.asarray(point, dtype=float) - self.apex
        n = np.linalg.norm(v)
        if n == 0.0:
            return 0.0
        return math.acos(min(1.0, max(-1.0, float(v @ self.axis) / n)))

    def contains(self, point, tol=1e-12):
        return self.angle_to(point) <= self.alpha + tol


@dataclass(frozen=True)
class ConvexPolygon2:
    """Convex polygon with counter-clockwise vertices, shape ``(n, 2)``."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self):
        x, y = self.vertices.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def edges(self):
        v = self.vertices
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    def contains(self, point, tol=0.0):
        p = np.asarray(point, dtype=float)
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        e = nxt - v
        lengths = np.hypot(e[:, 0], e[:, 1])
        keep = lengths > 0
        cross = e[keep, 0] * (p[1] - v[keep, 1]) - e[keep, 1] * (p[0] - v[keep, 0])
        return bool(np.all(cross / lengths[keep] >= -tol))

    def boundary_samples(self, n, rng=None):
        """``n`` random points on the boundary, uniform in arc length."""
        rng = np.random.default_rng(rng)
        v = self.vertices
        lengths = self.edges()
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        s = rng.uniform(0.0, cum[-1], size=n)
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(v) - 1)
        frac = (s - cum[idx]) / np.where(lengths[idx] > 0, lengths[idx], 1.0)
        nxt = np.roll(v, -1, axis=0)
        return v[idx] + frac[:, None] * (nxt[idx] - v[idx])


def wedge_halfplanes(w):
    """Return ``(inner, outer)`` half-planes whose intersection is the wedge.

    Boundaries run through the apex at angles ``theta - alpha`` and
    ``theta + alpha``. The inner one is the boundary closer to the viewing
    line; for a vertical bisector the ``theta - alpha`` boundary is inner.
    """
    lo, hi = w.theta - w.alpha, w.theta + w.alpha
    # normal of the low boundary points toward increasing angle, and vice versa
    lower = HalfPlane2(w.apex, np.array([-math.sin(lo), -math.cos(lo)]))
    upper = HalfPlane2(w.apex, np.array([math.sin(hi), math.cos(hi)]))
    if min(lo, math.pi - lo) <= min(hi, math.pi - hi):
        return lower, upper
    return upper, lower


def _clip(poly, hp):
    """Sutherland-Hodgman step: clip a CCW vertex list against one half-plane."""
    if len(poly) == 0:
        return poly
    d = hp.signed_distance(poly)
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        pi_, pj = poly[i], poly[j]
        di, dj = d[i], d[j]
        if di >= 0:
            out.append(pi_)
        if (di >= 0) != (dj >= 0):
            s = di / (di - dj)
            out.append(pi_ + s * (pj - pi_))
    return np.array(out).reshape(-1, 2)


def _dedupe(poly, tol):
    if len(poly) == 0:
        return poly
    keep = []
    for p in poly:
        if not keep or np.hypot(*(p - keep[-1])) > tol:
            keep.append(p)
    if len(keep) > 1 and np.hypot(*(keep[0] - keep[-1])) <= tol:
        keep.pop()
    return np.array(keep).reshape(-1, 2)


def intersect_halfplanes(halfplanes, center, scale):
    """Intersect half-planes by clipping a large square around ``center``.

    Raises UnboundedIntersection if the result touches the clipping square
    and EmptyIntersection if nothing survives.
    """
    c = as_point(center, 2, "center")
    half = _BOX_HALF * scale
    poly = c + half * np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    for hp in halfplanes:
        poly = _clip(poly, hp)
    poly = _dedupe(poly, REL_TOL * scale)
    if len(poly) == 0:
        raise EmptyIntersection("half-planes have empty intersection")
    if np.max(np.abs(poly - c)) > 0.5 * half:
        raise UnboundedIntersection("half-plane intersection is unbounded")
    return ConvexPolygon2(_polish(poly, halfplanes))


def _polish(poly, halfplanes):
    """Recompute each vertex as the exact meet of its two nearest boundary lines.

    Clipping a huge box costs digits (box size times machine epsilon); solving
    the 2x2 system for the lines a vertex lies on restores full precision.
    """
    if len(halfplanes) < 2:
        return poly
    N = np.array([hp.inward_normal for hp in halfplanes])
    b = np.array([hp.boundary_point @ hp.inward_normal for hp in halfplanes])
    out = poly.copy()
    for k, p in enumerate(poly):
        order = np.argsort(np.abs(N @ p - b), kind="stable")
        i = order[0]
        for j in order[1:]:
            A = N[[i, j]]
            if abs(np.linalg.det(A)) > 1e-9:
                q = np.linalg.solve(A, b[[i, j]])
                if np.hypot(*(q - p)) <= 1e-6 * max(1.0, np.hypot(*p)):
                    out[k] = q
                break
    return out


def intersect_wedges(w1, w2):
    """Intersection of two wedges as a counter-clockwise convex polygon."""
    a1, a2 = w1.apex, w2.apex
    scale = max(np.hypot(*(a1 - a2)), np.hypot(*a1), np.hypot(*a2)) or 1.0
    hps = (*wedge_halfplanes(w1), *wedge_halfplanes(w2))
    return intersect_halfplanes(hps, 0.5 * (a1 + a2), scale)


def polygon_diameter(poly):
    """Largest distance between two vertices of a convex polygon."""
    v = poly.vertices if isinstance(poly, ConvexPolygon2) else np.asarray(poly, float)
    if len(v) < 2:
        return 0.0
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def label_quadrilateral(poly, w_left, w_right, tol=1e-9):
    """Name the vertices of a pair polygon ``(v1, v2, v3, v4)``.

    Each vertex is matched to the two boundary lines it lies on.
    """
    in_l, out_l = wedge_halfplanes(w_left)
    in_r, out_r = wedge_halfplanes(w_right)
    v = poly.vertices
    scale = max(polygon_diameter(poly), 1e-300)

    def find(hp_a, hp_b):
        err = np.abs(hp_a.signed_distance(v)) + np.abs(hp_b.signed_distance(v))
        k = int(np.argmin(err))
        if err[k] > tol * max(scale, 1.0):
            raise DegenerateConfiguration("polygon is not a pair quadrilateral")
        return v[k]

    return find(in_l, in_r), find(out_l, in_r), find(out_l, out_r), find(in_l, out_r)


def _check_pair_angles(theta_p, theta_q, alpha):
    s = theta_p + theta_q
    if not (s - 2 * alpha > 0 and s + 2 * alpha < math.pi):
        raise DegenerateConfiguration(
            "need 0 < theta_p + theta_q - 2 alpha and theta_p + theta_q + 2 alpha < pi"
        )
    if not (theta_p - alpha > 0 and theta_q - alpha > 0):
        raise DegenerateConfiguration("need theta_p, theta_q > alpha")


def edge_lengths(t, theta_p, theta_q, alpha):
    """Closed-form edge lengths ``(r1, r2, r3, r4)`` of a pair quadrilateral.

    ``r1 = |v1 v2|``, ``r2 = |v2 v3|``, ``r3 = |v3 v4|``, ``r4 = |v4 v1|`` for
    cameras a baseline ``t`` apart with elevation angles ``theta_p``,
    ``theta_q`` (law of sines on the triangles formed with each apex).
    """
    if not t > 0:
        raise ValueError("baseline t must be positive")
    _check_pair_angles(theta_p, theta_q, alpha)
    s = theta_p + theta_q
    den_lo = math.sin(s - 2 * alpha) * math.sin(s)
    den_hi = math.sin(s) * math.sin(s + 2 * alpha)
    if min(abs(den_lo), abs(den_hi)) <= 1e-12:
        raise DegenerateConfiguration("wedges are nearly parallel")
    k = t * math.sin(2 * alpha)
    r1 = k * math.sin(theta_q - alpha) / den_lo
    r2 = k * math.sin(theta_p + alpha) / den_hi
    r3 = k * math.sin(theta_q + alpha) / den_hi
    r4 = k * math.sin(theta_p - alpha) / den_lo
    return r1, r2, r3, r4


def diag_lengths(r, theta_p, theta_q, alpha):
    """Diagonals ``(diag1, diag2)`` from edge lengths by the law of cosines."""
    r1, r2, _, r4 = r
    s = theta_p + theta_q
    d1 = r1 * r1 + r2 * r2 - 2 * r1 * r2 * math.cos(s)
    d2 = r1 * r1 + r4 * r4 - 2 * r1 * r4 * math.cos(math.pi - s + 2 * alpha)
    return math.sqrt(max(d1, 0.0)), math.sqrt(max(d2, 0.0))


def cone_slice_length(theta, alpha, h):
    """Length of a vertical line cut by a wedge whose inner boundary hits its foot.

    The camera sits at height ``h`` with elevation angle ``theta``.
    """
    den = math.sin(2 * theta) - math.sin(2 * alpha)
    if den <= 1e-12:
        raise DegenerateConfiguration(
            "sin(2 theta) <= sin(2 alpha): the wedge does not close on the vertical line"
        )
    return 2.0 * h * math.sin(2 * alpha) / den


def quad_vertices(t, phi_p, phi_q, alpha):
    """Vectorised pair quadrilateral in a local frame.

    Cameras sit at ``(0, 0)`` and ``(t, 0)`` with wedge angles ``phi_p``,
    ``phi_q`` (clockwise from +x); inputs broadcast together. Returns
    ``(vertices, valid)`` where ``vertices`` has shape ``(..., 4, 2)`` in the
    order v1..v4 and ``valid`` is False wherever the intersection is
    unbounded or a boundary ray fails to point below the viewing line.
    """
    t = np.asarray(t, float)
    phi_p = np.asarray(phi_p, float)
    phi_q = np.asarray(phi_q, float)
    # trig on the un-broadcast inputs; products below do the broadcasting
    a_in, a_out = phi_p - alpha, phi_p + alpha
    # the right camera's inner boundary is the one nearer the line: phi_q + alpha
    b_in, b_out = phi_q + alpha, phi_q - alpha
    trig_a = {k: (np.sin(v), np.cos(v)) for k, v in (("in", a_in), ("out", a_out))}
    trig_b = {k: (np.sin(v), np.cos(v)) for k, v in (("in", b_in), ("out", b_out))}
    order = (("in", "in"), ("out", "in"), ("out", "out"), ("in", "out"))
    shape = np.broadcast_shapes(t.shape, phi_p.shape, phi_q.shape)
    verts = np.empty(shape + (4, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        for k, (ka, kb) in enumerate(order):
            sa, ca = trig_a[ka]
            sb, cb = trig_b[kb]
            lam = t * sb / (sb * ca - cb * sa)
            verts[..., k, 0] = lam * ca
            verts[..., k, 1] = -lam * sa
    valid = (phi_q - phi_p > 2 * alpha) & (a_in > 0) & (b_in < math.pi)
    valid = np.broadcast_to(valid, shape) & np.isfinite(verts).all(axis=(-1, -2))
    return verts, valid


def quad_diameter(t, phi_p, phi_q, alpha):
    """Vectorised diameter of the pair quadrilateral; ``inf`` where invalid."""
    verts, valid = quad_vertices(t, phi_p, phi_q, alpha)
    best = np.zeros(verts.shape[:-2])
    for i, j in combinations(range(4), 2):
        d = verts[..., i, :] - verts[..., j, :]
        np.maximum(best, np.hypot(d[..., 0], d[..., 1]), out=best)
    return np.where(valid, best, np.inf)
