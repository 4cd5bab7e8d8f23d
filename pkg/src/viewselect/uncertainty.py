"""Worst-case uncertainty of camera pairs under the bounded-angle error model.

A camera at ``s`` observing ``g`` may report any ray within ``alpha`` of the
true one, so its admissible wedges are those whose bisector lies within
``alpha`` of the direction ``s -> g``. The worst-case uncertainty of a pair is
the largest diameter of the intersection of two admissible wedges, found here
by an orientation sweep with one level of local refinement.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import as_point, check_alpha, check_positive
from .exceptions import CollinearConfiguration, DegenerateConfiguration, UnboundedIntersection
from .geometry import (
    REL_TOL,
    ConvexPolygon2,
    Wedge2,
    cone_slice_length,
    intersect_wedges,
    polygon_diameter,
    quad_diameter,
)

DEFAULT_SWEEP_N = 256
_REFINE = 10


@dataclass(frozen=True)
class PairConfig:
    s_p: np.ndarray
    s_q: np.ndarray
    g: np.ndarray
    alpha: float

    def __post_init__(self):
        s_p = as_point(self.s_p, 2, "s_p")
        s_q = as_point(self.s_q, 2, "s_q")
        g = as_point(self.g, 2, "g")
        object.__setattr__(self, "s_p", s_p)
        object.__setattr__(self, "s_q", s_q)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        local_frame(s_p, s_q, g)  # raises on coincident or collinear input


@dataclass(frozen=True)
class WorstCase2D:
    eps: float
    argmax_thetas: tuple
    polygon: ConvexPolygon2


@dataclass(frozen=True)
class LocalFrame:
    """Pair frame: ``s_p`` at the origin, ``s_q`` at ``(t, 0)``, target at ``(gx, -depth)``."""

    origin: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    t: float
    gx: float
    depth: float

    def to_world(self, xy):
        xy = np.asarray(xy, dtype=float)
        return self.origin + xy[..., :1] * self.ex + xy[..., 1:2] * self.ey

    @property
    def betas(self):
        """Wedge angles of the rays from each camera to the target."""
        return math.atan2(self.depth, self.gx), math.atan2(self.depth, self.gx - self.t)


def local_frame(s_p, s_q, g):
    """Frame of the plane through two cameras and a target (2D or 3D input)."""
    s_p, s_q, g = (np.asarray(v, dtype=float) for v in (s_p, s_q, g))
    base = s_q - s_p
    t = float(np.linalg.norm(base))
    if t == 0.0:
        raise CollinearConfiguration("cameras coincide")
    ex = base / t
    rel = g - s_p
    gx = float(rel @ ex)
    w = rel - gx * ex
    depth = float(np.linalg.norm(w))
    if depth <= REL_TOL * max(t, np.linalg.norm(rel)):
        raise CollinearConfiguration("target is collinear with the cameras")
    return LocalFrame(s_p, ex, -w / depth, t, gx, depth)


def admissible_orientations(s, g, alpha):
    """Closed interval of wedge angles at ``s`` whose wedge contains ``g``."""
    s, g = as_point(s, 2, "s"), as_point(g, 2, "g")
    if np.array_equal(s, g):
        raise ValueError("camera and target coincide")
    beta = math.atan2(s[1] - g[1], g[0] - s[0])
    return beta - alpha, beta + alpha


def sweep_worst(t, gx, depth, alpha, n=DEFAULT_SWEEP_N, refine=True):
    """Batched orientation sweep over many pairs given in local coordinates.

    ``t``, ``gx`` and ``depth`` are broadcast to shape ``(P,)``. Returns
    ``(eps, phi_p, phi_q)``: per-pair maximum diameter (``inf`` if some
    admissible pair of wedges is unbounded) and the maximising wedge angles.
    """
    t, gx, depth = (np.atleast_1d(np.asarray(v, float)) for v in (t, gx, depth))
    t, gx, depth = np.broadcast_arrays(t, gx, depth)
    beta_p = np.arctan2(depth, gx)
    beta_q = np.arctan2(depth, gx - t)
    u = np.linspace(-alpha, alpha, n)
    phi_p = beta_p[:, None] + u
    phi_q = beta_q[:, None] + u
    D = quad_diameter(t[:, None, None], phi_p[:, :, None], phi_q[:, None, :], alpha)
    flat = D.reshape(len(t), -1)
    k = np.argmax(flat, axis=1)
    i, j = np.divmod(k, n)
    rows = np.arange(len(t))
    eps = flat[rows, k]
    best_p = phi_p[rows, i]
    best_q = phi_q[rows, j]
    if refine and n > 1:
        step = 2 * alpha / (n - 1)
        w = np.linspace(-step, step, 2 * _REFINE + 1)
        up = np.clip(u[i][:, None] + w, -alpha, alpha)
        uq = np.clip(u[j][:, None] + w, -alpha, alpha)
        rp = beta_p[:, None] + up
        rq = beta_q[:, None] + uq
        D2 = quad_diameter(t[:, None, None], rp[:, :, None], rq[:, None, :], alpha)
        flat2 = D2.reshape(len(t), -1)
        k2 = np.argmax(flat2, axis=1)
        i2, j2 = np.divmod(k2, w.size)
        better = flat2[rows, k2] > eps
        eps = np.where(better, flat2[rows, k2], eps)
        best_p = np.where(better, rp[rows, i2], best_p)
        best_q = np.where(better, rq[rows, j2], best_q)
    return eps, best_p, best_q


def _worst_case_in_frame(frame, alpha, sweep_n):
    if sweep_n < 32:
        raise ValueError("sweep_n must be at least 32")
    eps, phi_p, phi_q = sweep_worst(frame.t, frame.gx, frame.depth, alpha, sweep_n)
    if not np.isfinite(eps[0]):
        raise UnboundedIntersection(
            "some admissible wedges meet in an unbounded region; the pair cannot "
            "bound this target"
        )
    phi_p, phi_q = float(phi_p[0]), float(phi_q[0])
    poly = intersect_wedges(
        Wedge2((0.0, 0.0), phi_p, alpha), Wedge2((frame.t, 0.0), phi_q, alpha)
    )
    return poly, phi_p, phi_q


def worst_case_pair(cfg, sweep_n=DEFAULT_SWEEP_N):
    """Worst-case uncertainty of a camera pair for one target (planar).

    Angles in ``argmax_thetas`` are elevations measured from the line through
    the cameras, each on its own camera's side, so the optimal configuration
    reports ``(pi/4, pi/4)``. The polygon is returned in world coordinates.
    """
    frame = local_frame(cfg.s_p, cfg.s_q, cfg.g)
    poly, phi_p, phi_q = _worst_case_in_frame(frame, cfg.alpha, sweep_n)
    world = frame.to_world(poly.vertices)
    world_poly = ConvexPolygon2(world)
    if world_poly.area < 0:
        world_poly = ConvexPolygon2(world[::-1])
    return WorstCase2D(
        eps=polygon_diameter(world_poly),
        argmax_thetas=(phi_p, math.pi - phi_q),
        polygon=world_poly,
    )


def worst_case_pair_3d(s_p, s_q, g, alpha, sweep_n=DEFAULT_SWEEP_N):
    """Worst-case diameter for two cameras in space.

    The cone problem reduces to the wedge problem in the plane through both
    cameras and the target (a perpendicular cross-section bounds the spatial
    intersection).
    """
    alpha = check_alpha(alpha)
    frame = local_frame(as_point(s_p, 3, "s_p"), as_point(s_q, 3, "s_q"), as_point(g, 3, "g"))
    poly, _, _ = _worst_case_in_frame(frame, alpha, sweep_n)
    return polygon_diameter(poly)


def optimal_baseline(h, alpha):
    """Baseline of the optimal pair: ``2 h / tan(pi/4 - alpha)``."""
    return 2.0 * h / math.tan(math.pi / 4 - alpha)


def optimal_diag1(h, alpha):
    """Vertical diagonal at the optimal configuration, a lower bound on eps_inf."""
    s = math.sin(2 * alpha)
    return 2.0 * h * s / (1.0 - s)


def ratio_bound(alpha):
    """Approximation factor ``sqrt((1 + 2 alpha) / (1 - 4 alpha))`` of the optimal pair."""
    return math.sqrt((1 + 2 * alpha) / (1 - 4 * alpha))


def eps2_upper_bound(h, alpha):
    h, alpha = check_positive(h, "h"), check_alpha(alpha)
    return ratio_bound(alpha) * optimal_diag1(h, alpha)


def optimal_pair_config(h, alpha, g=(0.0, 0.0)):
    g = as_point(g, 2, "g")
    half = optimal_baseline(h, alpha) / 2
    return PairConfig(g + (-half, h), g + (half, h), g, alpha)


def eps_inf_bracket(h, alpha, sweep_n=DEFAULT_SWEEP_N):
    """``(lo, hi)``: optimal-pair diag1 and the optimal pair's swept worst case."""
    h, alpha = check_positive(h, "h"), check_alpha(alpha)
    lo = optimal_diag1(h, alpha)
    hi = worst_case_pair(optimal_pair_config(h, alpha), sweep_n).eps
    return lo, hi


def third_camera_segment(s_k_x, h, alpha):
    """Vertical segment over the target cut by a third camera's wedge.

    The camera sits at ``(s_k_x, h)`` above a target at the origin and is
    rotated so its inner boundary passes through the target. Overhead
    cameras (``sin 2 theta_k <= sin 2 alpha``) raise DegenerateConfiguration.
    """
    h, alpha = check_positive(h, "h"), check_alpha(alpha)
    beta = math.atan2(h, abs(float(s_k_x)))
    theta_k = beta + alpha
    if math.sin(2 * theta_k) <= math.sin(2 * alpha):
        raise DegenerateConfiguration(
            f"camera at x={s_k_x!r} is too close to overhead to bound the vertical line"
        )
    return cone_slice_length(theta_k, alpha, h)
