"""Camera grids on the viewing plane and their worst-case guarantees.

A square grid of spacing ``delta_d = h`` is laid on the viewing plane at
height ``h`` over a ground plane at height 0. For a ground target the grid
uncertainty is the best worst-case uncertainty over pairs of grid cameras.
The helpers here evaluate it, find the worst target inside a grid cell and
check the resulting ratio to the optimal-pair lower bound, optionally with
the cameras perturbed horizontally and vertically.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
import math
import os

import numpy as np

from ._validation import as_point, check_alpha, check_fraction, check_positive
from .exceptions import BoundViolation
from .uncertainty import (
    DEFAULT_SWEEP_N,
    optimal_baseline,
    optimal_diag1,
    sweep_worst,
)

#: Ratio constants certified for alpha <= 0.1 in the plane and in space.
RATIO_2D = 1.72
RATIO_3D = 2.47
CERTIFIED_ALPHA_MAX = 0.1
#: Sweep resolution used when certifying many targets.
CERTIFY_SWEEP_N = 64
THREADS_ENV = "VIEWSELECT_THREADS"


@dataclass(frozen=True)
class OptimalPair:
    s_p: np.ndarray
    s_q: np.ndarray
    theta: float
    t: float


@dataclass(frozen=True)
class CameraGrid:
    """Regular lattice of cameras at ``height`` above the ground.

    ``origin`` holds the horizontal coordinates of camera ``0`` (one value in
    the plane, two in space) and ``counts`` the number of cameras per axis.
    Cameras are indexed row-major with x varying fastest.
    """

    origin: tuple
    spacing: float
    counts: tuple
    height: float

    def __post_init__(self):
        origin = tuple(float(v) for v in np.atleast_1d(self.origin))
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if len(origin) != len(counts) or len(counts) not in (1, 2):
            raise ValueError("origin and counts must both have 1 or 2 entries")
        if min(counts) < 1:
            raise ValueError("grid needs at least one camera per axis")
        check_positive(self.spacing, "spacing")
        check_positive(self.height, "height")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "counts", counts)

    @property
    def ndim(self):
        """World dimension: 2 for a line of cameras, 3 for a plane."""
        return len(self.counts) + 1

    def __len__(self):
        return int(np.prod(self.counts))

    def positions(self):
        axes = [o + self.spacing * np.arange(c) for o, c in zip(self.origin, self.counts)]
        if len(axes) == 1:
            xy = axes[0][:, None]
        else:
            yy, xx = np.meshgrid(axes[1], axes[0], indexing="ij")
            xy = np.column_stack([xx.ravel(), yy.ravel()])
        return np.column_stack([xy, np.full(len(xy), self.height)])

    def node(self, index):
        """Horizontal coordinates of the camera with per-axis ``index``."""
        index = np.atleast_1d(index)
        return np.array(self.origin) + self.spacing * index

    def ground_point(self, index):
        return np.append(self.node(index), 0.0)

    def center_index(self):
        return tuple(c // 2 for c in self.counts)

    def is_symmetric_about(self, index):
        """True if the lattice is mirror symmetric through node ``index`` on every axis."""
        index = np.atleast_1d(index)
        same = all(2 * i == c - 1 for i, c in zip(index, self.counts))
        if len(self.counts) == 2:
            same = same and self.counts[0] == self.counts[1]
        return same


@dataclass(frozen=True)
class TargetRegion:
    center: np.ndarray
    half_extent: float

    def samples(self, n):
        offsets = np.linspace(-self.half_extent, self.half_extent, n)
        dim = len(self.center) - 1
        grids = np.meshgrid(*([offsets] * dim), indexing="ij")
        horiz = np.stack([g.ravel() for g in grids], axis=1)
        pts = np.tile(self.center, (len(horiz), 1))
        pts[:, :dim] += horiz
        return pts


@dataclass(frozen=True)
class Perturbation:
    """Camera displacement bounds as fractions of ``h``."""

    lambda_v: float = 0.0
    lambda_h: float = 0.0

    def __post_init__(self):
        check_fraction(self.lambda_v, "lambda_v")
        check_fraction(self.lambda_h, "lambda_h")

    @property
    def is_zero(self):
        return self.lambda_v == 0.0 and self.lambda_h == 0.0


@dataclass
class CellResult:
    """Worst target found in one grid cell."""

    eps: float
    target: np.ndarray
    pair: tuple
    ratio: float
    center_eps: float
    offsets: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)


@dataclass
class CertificationReport:
    dims: int
    perturbation: Perturbation
    constant: float
    bound: float
    rows: list

    @property
    def max_ratio(self):
        return max((r["ratio"] for r in self.rows), default=float("nan"))

    @property
    def passed(self):
        return all(r["ratio"] <= r["bound"] for r in self.rows)


def optimal_pair(g, h, alpha):
    """Two cameras at ``g +/- (t/2)`` on the x axis, lifted to height ``h``."""
    h, alpha = check_positive(h, "h"), check_alpha(alpha)
    g = as_point(g, name="g")
    if g.size not in (2, 3):
        raise ValueError("g must be a 2D or 3D point")
    t = optimal_baseline(h, alpha)
    offset = np.zeros_like(g)
    offset[0] = t / 2
    lift = np.zeros_like(g)
    lift[-1] = h
    return OptimalPair(g - offset + lift, g + offset + lift, math.pi / 4, t)


def build_grid(extent_x, extent_y=None, h=1.0, origin=None):
    """Grid of spacing ``h`` covering the extent (``extent_y=None`` for the plane case)."""
    h = check_positive(h, "h")
    extents = [extent_x] if extent_y is None else [extent_x, extent_y]
    counts = tuple(int(math.floor(check_positive(e, "extent") / h + 1e-9)) + 1 for e in extents)
    if origin is None:
        origin = (0.0,) * len(counts)
    return CameraGrid(origin, h, counts, h)


def angle_sum(m, h, alpha):
    """Sum of the pair's elevation angles when the target slides by ``m``.

    Includes the ``2 alpha`` from rotating both inner boundaries onto the
    moved target.
    """
    h, alpha = check_positive(h, "h"), check_alpha(alpha)
    if abs(m) > h / 2 + 1e-12 * h:
        raise ValueError("|m| must not exceed half the grid spacing")
    c = h / math.tan(math.pi / 4 - alpha)
    # each elevation is (pi/4 - alpha) plus a correction from the tangent
    # subtraction identity, so f(0) is pi/2 with no rounding
    up = math.atan(h * m / (c * (c - m) + h * h))
    down = math.atan(h * m / (c * (c + m) + h * h))
    return math.pi / 2 + (up - down)


def perturbation_factor(p):
    return (1.0 + p.lambda_v) / (1.0 - p.lambda_h)


def _frames(P, Q, G):
    """Vectorised local pair frames: ``(t, gx, depth)`` per row."""
    base = Q - P
    t = np.linalg.norm(base, axis=1)
    ex = base / t[:, None]
    rel = G - P
    gx = np.einsum("ij,ij->i", rel, ex)
    depth = np.linalg.norm(rel - gx[:, None] * ex, axis=1)
    return t, gx, depth


def _coarse_n(sweep_n):
    """Small screening resolution whose nodes are a subset of the sweep's nodes."""
    m = sweep_n - 1
    for d in range(5, min(m, 32) + 1):
        if m % d == 0:
            return d + 1
    return sweep_n


def _with_ground(g, ndim):
    g = as_point(g, name="g")
    if g.size == ndim - 1:
        g = np.append(g, 0.0)
    if g.size != ndim:
        raise ValueError(f"target must have {ndim - 1} or {ndim} coordinates")
    return g


def candidate_pairs(grid, g, exhaustive=False):
    """Index pairs ``(i, j)``, ``i < j``, worth evaluating for target ``g``.

    Unless ``exhaustive``, keeps pairs with baseline in ``[h, 4h]`` whose
    midpoint lies within ``2h`` of the target's vertical projection.
    """
    cams = grid.positions()
    g = _with_ground(g, grid.ndim)
    i, j = np.triu_indices(len(cams), k=1)
    if exhaustive:
        return i, j
    h = grid.height
    tol = 1e-9 * h
    base = np.linalg.norm(cams[j] - cams[i], axis=1)
    mid = 0.5 * (cams[i] + cams[j])[:, :-1]
    dmid = np.linalg.norm(mid - g[:-1], axis=1)
    keep = (base >= h - tol) & (base <= 4 * h + tol) & (dmid <= 2 * h + tol)
    return i[keep], j[keep]


def grid_uncertainty(g, grid, alpha, sweep_n=DEFAULT_SWEEP_N, exhaustive=False):
    """Best worst-case uncertainty over grid camera pairs for target ``g``.

    Returns ``(eps, (i, j))``. Pairs are screened with a coarse sweep whose
    nodes are a subset of the full sweep's, so the coarse value never
    exceeds the full one and screening cannot discard the true minimiser.
    Ties within ``1e-12 h`` go to the lexicographically smallest pair.
    """
    alpha = check_alpha(alpha)
    g = _with_ground(g, grid.ndim)
    cams = grid.positions()
    i, j = candidate_pairs(grid, g, exhaustive)
    if len(i) == 0:
        return math.inf, None
    t, gx, depth = _frames(cams[i], cams[j], np.broadcast_to(g, (len(i), grid.ndim)))
    coarse, _, _ = sweep_worst(t, gx, depth, alpha, _coarse_n(sweep_n), refine=False)
    order = np.lexsort((j, i, coarse))
    tol = 1e-12 * grid.height
    best, best_pair = math.inf, None
    chunk = 4
    for start in range(0, len(order), chunk):
        idx = order[start:start + chunk]
        idx = idx[coarse[idx] <= best + tol]
        if len(idx) == 0:
            break
        full, _, _ = sweep_worst(t[idx], gx[idx], depth[idx], alpha, sweep_n)
        for k, e in zip(idx, full):
            pair = (int(i[k]), int(j[k]))
            if e < best - tol or (abs(e - best) <= tol and (best_pair is None or pair < best_pair)):
                best, best_pair = float(e), pair
    return best, best_pair


def _corners(pert, h, ndim):
    hs = sorted({-pert.lambda_h * h, pert.lambda_h * h})
    vs = sorted({-pert.lambda_v * h, pert.lambda_v * h})
    return np.array([(*hv, v) for hv in product(hs, repeat=ndim - 1) for v in vs])


def perturbed_pair_eps(s_p, s_q, g, alpha, pert, h, sweep_n=DEFAULT_SWEEP_N):
    """Worst-case uncertainty after moving each camera to its worst box corner.

    Each camera's corner is chosen with the other held at its nominal place;
    the returned value is the largest of the nominal, single-camera and
    combined worst cases.
    """
    s_p, s_q, g = (np.asarray(v, float) for v in (s_p, s_q, g))
    corners = _corners(pert, h, len(g))
    k = len(corners)
    P = np.vstack([s_p + corners, np.tile(s_p, (k, 1))])
    Q = np.vstack([np.tile(s_q, (k, 1)), s_q + corners])
    t, gx, depth = _frames(P, Q, np.broadcast_to(g, P.shape))
    eps, _, _ = sweep_worst(t, gx, depth, alpha, sweep_n)
    wp, wq = int(np.argmax(eps[:k])), int(np.argmax(eps[k:]))
    t, gx, depth = _frames((s_p + corners[wp])[None], (s_q + corners[wq])[None], g[None])
    both, _, _ = sweep_worst(t, gx, depth, alpha, sweep_n)
    return float(max(both[0], eps.max()))


def _fold_index(k, n):
    c = (n - 1) / 2
    return int(round(c + abs(k - c)))


def worst_in_cell(g_index, grid, alpha, samples=33, sweep_n=DEFAULT_SWEEP_N,
                  perturbation=None, exhaustive=False, fold_symmetry=True):
    """Largest grid uncertainty over targets sampled in the cell around a node.

    ``g_index`` is the per-axis index of the grid node whose ground point is
    the cell centre. Samples are ``samples`` evenly spaced offsets per axis,
    endpoints included. When the grid is mirror symmetric about the node,
    only one symmetry class of samples is evaluated and the rest are copied.
    """
    alpha = check_alpha(alpha)
    if samples < 9:
        raise ValueError("samples must be at least 9")
    pert = perturbation or Perturbation()
    h = grid.height
    dim = grid.ndim - 1
    center = grid.ground_point(g_index)
    offsets_1d = np.linspace(-grid.spacing / 2, grid.spacing / 2, samples)
    fold = fold_symmetry and grid.is_symmetric_about(g_index)

    cache = {}

    def evaluate(key):
        if key not in cache:
            target = center.copy()
            target[:dim] += offsets_1d[list(key)]
            eps, pair = grid_uncertainty(target, grid, alpha, sweep_n, exhaustive)
            if pair is not None and not pert.is_zero:
                cams = grid.positions()
                eps = perturbed_pair_eps(cams[pair[0]], cams[pair[1]], target, alpha,
                                         pert, h, sweep_n)
            cache[key] = (eps, pair, target)
        return cache[key]

    keys = list(product(range(samples), repeat=dim))
    values = np.empty(len(keys))
    pairs, targets, canonical = [], [], []
    for n, key in enumerate(keys):
        canon = key
        if fold:
            canon = tuple(_fold_index(k, samples) for k in key)
            if dim == 2:
                canon = tuple(sorted(canon, reverse=True))
        eps, pair, _ = evaluate(canon)
        target = center.copy()
        target[:dim] += offsets_1d[list(key)]
        values[n] = eps
        pairs.append(pair)
        targets.append(target)
        canonical.append(canon == key)
    # report a sample that was evaluated directly, so target and pair agree
    top = values.max()
    worst = next(n for n in range(len(keys)) if values[n] == top and canonical[n])
    mid = tuple([samples // 2] * dim)
    center_eps = values[keys.index(mid)] if samples % 2 else evaluate(mid)[0]
    grid_offsets = np.array([offsets_1d[list(k)] for k in keys])
    return CellResult(
        eps=float(values[worst]),
        target=targets[worst],
        pair=pairs[worst],
        ratio=float(values[worst] / optimal_diag1(h, alpha)),
        center_eps=float(center_eps),
        offsets=grid_offsets,
        values=values,
    )


def _thread_count(workers):
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def certify_grid_bound(grid, alpha_list, p=None, dims=None, samples=33,
                       sweep_n=CERTIFY_SWEEP_N, cells=None, workers=None):
    """Check the grid ratio bound for every alpha on the given cells.

    The bound is ``C (1 + lambda_v) / (1 - lambda_h)`` with ``C = 1.72`` for a
    line of cameras and ``2.47`` for a plane. ``cells`` defaults to the
    central node (edge cells are excluded because the guarantee assumes the
    grid extends past the target). Raises BoundViolation carrying the worst
    offending row; otherwise returns the report.
    """
    p = p or Perturbation()
    dims = dims or grid.ndim
    if dims != grid.ndim:
        raise ValueError(f"grid is {grid.ndim}D but dims={dims}")
    alphas = [check_alpha(a) for a in alpha_list]
    if not alphas:
        raise ValueError("alpha_list must not be empty")
    if max(alphas) > CERTIFIED_ALPHA_MAX + 1e-12:
        raise ValueError(f"bounds are certified only for alpha <= {CERTIFIED_ALPHA_MAX}")
    cells = [tuple(np.atleast_1d(c).tolist()) for c in (cells or [grid.center_index()])]
    constant = RATIO_2D if dims == 2 else RATIO_3D
    bound = constant * perturbation_factor(p)
    tasks = [(a, c) for a in alphas for c in cells]

    def run(task):
        a, c = task
        res = worst_in_cell(c, grid, a, samples, sweep_n, perturbation=p)
        return {
            "alpha": a,
            "cell": list(c),
            "ratio": res.ratio,
            "bound": bound,
            "eps": res.eps,
            "target": res.target.tolist(),
            "pair": list(res.pair) if res.pair else None,
        }

    n = _thread_count(workers)
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            rows = list(ex.map(run, tasks))
    else:
        rows = [run(task) for task in tasks]
    report = CertificationReport(dims, p, constant, bound, rows)
    bad = [r for r in rows if r["ratio"] > r["bound"]]
    if bad:
        witness = max(bad, key=lambda r: r["ratio"])
        raise BoundViolation(
            f"ratio {witness['ratio']:.6f} exceeds bound {bound:.6f} at alpha={witness['alpha']}",
            witness,
            report,
        )
    return report
