"""Monte Carlo check of the bounded-uncertainty model.

Cameras look at a ground target from the viewing plane. Each trial draws
uniform noise on the pixel measurement, the believed camera position and the
believed camera orientation, back-projects the measured rays through the
believed poses and triangulates. Trials run in fixed-size blocks whose random
streams are derived from ``(seed, block_index)``, so results do not depend on
how blocks are scheduled.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial.transform import Rotation

from ._validation import check_alpha, check_positive
from .exceptions import NearParallelRays, SingularSystem
from .uncertainty import eps2_upper_bound, optimal_baseline, optimal_pair_config, worst_case_pair

BLOCK = 4096
_PARALLEL_ANGLE = 1e-6


@dataclass(frozen=True)
class CameraModel:
    resolution: tuple = (1920, 1080)
    fov: tuple = (math.radians(120.0), math.radians(70.0))

    def __post_init__(self):
        if min(self.resolution) <= 0 or min(self.fov) <= 0:
            raise ValueError("resolution and field of view must be positive")

    @property
    def radians_per_pixel(self):
        return self.fov[0] / self.resolution[0], self.fov[1] / self.resolution[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Symmetric uniform noise bounds.

    ``n_p_max`` in pixels per image axis, ``n_s_max`` as a fraction of ``h``
    per world axis, ``n_theta_max`` in degrees per Euler angle.
    """

    n_p_max: float = 0.0
    n_s_max: float = 0.0
    n_theta_max: float = 0.0

    def __post_init__(self):
        if min(self.n_p_max, self.n_s_max, self.n_theta_max) < 0:
            raise ValueError("noise bounds must be non-negative")


@dataclass(frozen=True)
class SimGeometry:
    """Target at the origin, cameras at height ``h`` on the x axis.

    ``alpha`` places the optimal pair and sets the predicted worst case; it
    is never derived from the pixel noise.
    """

    h: float = 10.0
    alpha: float = 0.1
    camera: CameraModel = CameraModel()

    def __post_init__(self):
        check_positive(self.h, "h")
        check_alpha(self.alpha)

    def pair_positions(self):
        half = optimal_baseline(self.h, self.alpha) / 2
        return np.array([[-half, 0.0, self.h], [half, 0.0, self.h]])

    def all_positions(self, n_cameras):
        """Optimal pair followed by ``n_cameras - 2`` cameras spread over the
        horizontal span from which the target is inside the field of view."""
        if n_cameras < 3:
            raise ValueError("n_cameras must be at least 3")
        span = self.h * math.tan(self.camera.fov[0] / 2)
        k = n_cameras - 2
        xs = -span + (np.arange(k) + 0.5) * (2 * span / k)
        extra = np.column_stack([xs, np.zeros(k), np.full(k, self.h)])
        return np.vstack([self.pair_positions(), extra])


@dataclass
class SimSummary:
    trials: int
    errors: np.ndarray = field(repr=False)
    predicted_worst: float
    exceed_fraction: float
    seed: int
    sweep_worst: float


@dataclass
class RatioSummary:
    trials: int
    ratios: np.ndarray = field(repr=False)
    errors_pair: np.ndarray = field(repr=False)
    errors_all: np.ndarray = field(repr=False)
    excluded: int
    max_ratio: float
    min_ratio: float
    seed: int
    n_cameras: int


def pixel_to_alpha(n_p, cam=None):
    """Angular error of ``n_p`` pixels along the horizontal image axis."""
    if n_p < 0:
        raise ValueError("n_p must be non-negative")
    cam = cam or CameraModel()
    return n_p * cam.radians_per_pixel[0]


def pixels_for_alpha(alpha, cam=None):
    """Per-axis pixel bound whose worst (corner) angular error equals ``alpha``."""
    cam = cam or CameraModel()
    return alpha / math.hypot(*cam.radians_per_pixel)


def _midpoints(o1, d1, o2, d2):
    """Midpoints of the shortest segments between rays (rows broadcast)."""
    d1 = d1 / np.linalg.norm(d1, axis=-1, keepdims=True)
    d2 = d2 / np.linalg.norm(d2, axis=-1, keepdims=True)
    w = o1 - o2
    b = np.sum(d1 * d2, axis=-1)
    p = np.sum(d1 * w, axis=-1)
    q = np.sum(d2 * w, axis=-1)
    den = 1.0 - b * b
    s = (b * q - p) / den
    u = (q - b * p) / den
    return 0.5 * (o1 + s[..., None] * d1 + o2 + u[..., None] * d2)


def triangulate_pair(ray_a, ray_b):
    """Midpoint of the common perpendicular of two rays ``(origin, direction)``."""
    o1, d1 = (np.asarray(v, float) for v in ray_a)
    o2, d2 = (np.asarray(v, float) for v in ray_b)
    c = abs(d1 @ d2) / (np.linalg.norm(d1) * np.linalg.norm(d2))
    if math.acos(min(1.0, c)) < _PARALLEL_ANGLE:
        raise NearParallelRays("rays are parallel to within 1e-6 rad")
    return _midpoints(o1, d1, o2, d2)


def _least_squares_points(O, D):
    """Least-squares ray intersection; ``O`` and ``D`` have shape ``(..., k, 3)``."""
    D = D / np.linalg.norm(D, axis=-1, keepdims=True)
    proj = np.eye(3) - D[..., :, None] * D[..., None, :]
    A = proj.sum(axis=-3)
    b = np.einsum("...kij,...kj->...i", proj, O)
    return np.linalg.solve(A, b[..., None])[..., 0], A


def triangulate_all(rays):
    """Point minimising the summed squared distance to all rays."""
    rays = list(rays)
    if len(rays) < 2:
        raise ValueError("need at least two rays")
    O = np.array([r[0] for r in rays], dtype=float)
    D = np.array([r[1] for r in rays], dtype=float)
    Dn = D / np.linalg.norm(D, axis=1, keepdims=True)
    A = np.einsum("kij->ij", np.eye(3) - Dn[:, :, None] * Dn[:, None, :])
    w = np.linalg.eigvalsh(A)
    if w[0] <= 1e-12 * w[-1]:
        raise SingularSystem("rays are all parallel")
    return _least_squares_points(O, D)[0]


def _camera_frames(positions, target):
    """World-from-camera rotations with the optical axis on the target."""
    z = target - positions
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    x = np.cross(z, [0.0, 1.0, 0.0])
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=-1)


def _noisy_rays(positions, frames, noise, camera, h, n, rng):
    """Believed origins and measured world directions, shape ``(n, C, 3)``."""
    C = len(positions)
    kx, ky = camera.radians_per_pixel
    pix = rng.uniform(-noise.n_p_max, noise.n_p_max, size=(n, C, 2))
    ang_u, ang_v = pix[..., 0] * kx, pix[..., 1] * ky
    r = np.hypot(ang_u, ang_v)
    sinc = np.where(r > 0, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
    m_cam = np.stack([sinc * ang_u, sinc * ang_v, np.cos(r)], axis=-1)
    shift = rng.uniform(-noise.n_s_max * h, noise.n_s_max * h, size=(n, C, 3))
    tilt = rng.uniform(-noise.n_theta_max, noise.n_theta_max, size=(n * C, 3))
    if noise.n_theta_max > 0:
        m_cam = Rotation.from_euler("zyx", tilt, degrees=True).apply(m_cam.reshape(-1, 3))
        m_cam = m_cam.reshape(n, C, 3)
    dirs = np.einsum("cij,ncj->nci", frames, m_cam)
    return positions[None] + shift, dirs


def _blocks(trials):
    for b, start in enumerate(range(0, trials, BLOCK)):
        yield b, min(BLOCK, trials - start)


def run_simulation(geometry, noise, trials, seed):
    """Triangulation error of the optimal pair over ``trials`` noisy trials."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    positions = geometry.pair_positions()
    target = np.zeros(3)
    frames = _camera_frames(positions, target)
    errors = np.empty(trials)
    pos = 0
    for b, n in _blocks(trials):
        rng = np.random.default_rng([seed, b])
        O, D = _noisy_rays(positions, frames, noise, geometry.camera, geometry.h, n, rng)
        est = _midpoints(O[:, 0], D[:, 0], O[:, 1], D[:, 1])
        errors[pos:pos + n] = np.linalg.norm(est - target, axis=1)
        pos += n
    predicted = eps2_upper_bound(geometry.h, geometry.alpha)
    sweep = worst_case_pair(optimal_pair_config(geometry.h, geometry.alpha)).eps
    return SimSummary(
        trials=trials,
        errors=errors,
        predicted_worst=predicted,
        exceed_fraction=float(np.mean(errors > predicted)),
        seed=seed,
        sweep_worst=sweep,
    )


def ratio_two_vs_all(geometry, noise, trials, n_cameras, seed):
    """Pair error over all-camera least-squares error, per trial.

    Trials whose all-camera error is below ``1e-12 h`` are excluded and
    counted in ``excluded``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    positions = geometry.all_positions(n_cameras)
    target = np.zeros(3)
    frames = _camera_frames(positions, target)
    e2 = np.empty(trials)
    eall = np.empty(trials)
    pos = 0
    for b, n in _blocks(trials):
        rng = np.random.default_rng([seed, b])
        O, D = _noisy_rays(positions, frames, noise, geometry.camera, geometry.h, n, rng)
        pair = _midpoints(O[:, 0], D[:, 0], O[:, 1], D[:, 1])
        every, _ = _least_squares_points(O, D)
        e2[pos:pos + n] = np.linalg.norm(pair - target, axis=1)
        eall[pos:pos + n] = np.linalg.norm(every - target, axis=1)
        pos += n
    keep = eall >= 1e-12 * geometry.h
    ratios = np.full(trials, np.nan)
    ratios[keep] = e2[keep] / eall[keep]
    valid = ratios[keep]
    return RatioSummary(
        trials=trials,
        ratios=ratios,
        errors_pair=e2,
        errors_all=eall,
        excluded=int((~keep).sum()),
        max_ratio=float(valid.max()) if valid.size else float("nan"),
        min_ratio=float(valid.min()) if valid.size else float("nan"),
        seed=seed,
        n_cameras=n_cameras,
    )
