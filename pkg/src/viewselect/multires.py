"""Coarse-to-fine view selection over a triangle mesh.

Each face gets a visibility cone built from the cameras that can see it. The
camera trajectory is subsampled on square lattices of halving size ``R``; a
face is covered once at least ``k_min`` cameras of the current lattice (or
already selected) fall inside its cone.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .exceptions import NoProgress, NoVisibleCameras

CONE_TOL = 1e-9
MAX_LEVELS = 7  # R0 down to R0 / 2**6
_HIT_EPS = 1e-9


@dataclass(frozen=True)
class VisibilityCone:
    face_id: int
    apex: np.ndarray
    mesh_vector: np.ndarray
    aperture: float
    support: int


@dataclass(frozen=True)
class LevelRecord:
    level: int
    resolution: float
    added: tuple
    faces_covered: int
    coverage: float
    min_spacing: float


@dataclass
class Selection:
    chosen: set
    per_face_cover: dict
    face_level: dict
    levels: list
    uncovered: set
    excluded: set
    coverage: float
    coverage_mode: str = "area"
    n_faces: int = 0
    k_min: int = 3
    weights: np.ndarray = field(default=None, repr=False)


def _fov_mask(C, S, fov):
    """``(F, N)`` mask of cameras whose downward frustum contains each point."""
    v = C[:, None, :] - S[None, :, :]
    down = -v[..., 2]
    tx, ty = math.tan(fov[0] / 2), math.tan(fov[1] / 2)
    ok = down > 0
    return ok & (np.abs(v[..., 0]) <= tx * down) & (np.abs(v[..., 1]) <= ty * down)


def segment_hits(origins, targets, tri):
    """Möller-Trumbore test of segments against triangles.

    ``origins`` and ``targets`` have shape ``(K, 3)``; ``tri`` has shape
    ``(M, 3, 3)``. Returns a ``(K, M)`` mask of proper crossings, ignoring
    touches within ``1e-9`` of either segment end.
    """
    d = targets - origins
    a = tri[:, 0]
    e1 = tri[:, 1] - a
    e2 = tri[:, 2] - a
    p = np.cross(d[:, None, :], e2[None])
    det = np.einsum("kmi,mi->km", p, e1)
    scale = np.linalg.norm(d, axis=1)[:, None] * np.linalg.norm(np.cross(e1, e2), axis=1)[None]
    live = np.abs(det) > 1e-14 * scale
    inv = np.where(live, 1.0 / np.where(live, det, 1.0), 0.0)
    s = origins[:, None, :] - a[None]
    u = np.einsum("kmi,kmi->km", s, p) * inv
    q = np.cross(s, e1[None])
    v = np.einsum("ki,kmi->km", d, q) * inv
    t = np.einsum("mi,kmi->km", e2, q) * inv
    return live & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > _HIT_EPS) & (t < 1 - _HIT_EPS)


def visibility_matrix(mesh, traj):
    """``(F, N)`` boolean matrix: camera ``n`` sees face ``f``.

    A camera sees a face when the centroid is inside its downward field of
    view, the face is front-facing, and the segment from the centroid to the
    camera crosses no other face.
    """
    C, Nrm, S = mesh.centroids, mesh.normals, traj.positions
    tris = mesh.vertices[mesh.faces]
    top = tris[:, :, 2].max(axis=1)
    lo_xy, hi_xy = tris[:, :, :2].min(axis=1), tris[:, :, :2].max(axis=1)
    vis = _fov_mask(C, S, traj.fov)
    vis &= np.einsum("fi,fni->fn", Nrm, S[None] - C[:, None]) > 0
    for f in range(len(C)):
        cams = np.flatnonzero(vis[f])
        if cams.size == 0:
            continue
        seg_lo = np.minimum(S[cams, :2].min(axis=0), C[f, :2])
        seg_hi = np.maximum(S[cams, :2].max(axis=0), C[f, :2])
        # occluders must rise above the centroid and overlap the segments' footprint
        cand = top > C[f, 2] + _HIT_EPS * max(1.0, abs(C[f, 2]))
        cand &= np.all(hi_xy >= seg_lo, axis=1) & np.all(lo_xy <= seg_hi, axis=1)
        cand[f] = False
        occ = np.flatnonzero(cand)
        if occ.size == 0:
            continue
        hits = segment_hits(np.repeat(C[f][None], cams.size, 0), S[cams], tris[occ])
        vis[f, cams[hits.any(axis=1)]] = False
    return vis


def visible_cameras(mesh, traj, vis=None):
    """Map from face id to the sorted ids of the cameras that see it."""
    vis = visibility_matrix(mesh, traj) if vis is None else vis
    return {f: [int(traj.ids[n]) for n in np.flatnonzero(row)] for f, row in enumerate(vis)}


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _angles(u, V):
    return np.arccos(np.clip(V @ u, -1.0, 1.0))


def cone_from_points(face_id, apex, cameras, aperture="mean_deviation"):
    """Visibility cone at ``apex`` spanned by the given camera positions."""
    cameras = np.asarray(cameras, dtype=float).reshape(-1, 3)
    if len(cameras) == 0:
        raise NoVisibleCameras(face_id)
    V = _unit(cameras - apex)
    m = _unit(V.mean(axis=0))
    if aperture == "mean_deviation":
        ap = float(_angles(m, V).mean())
    elif aperture == "mean_pairwise":
        if len(V) == 1:
            ap = 0.0
        else:
            G = np.arccos(np.clip(V @ V.T, -1.0, 1.0))
            ap = float(G[np.triu_indices(len(V), 1)].mean())
    else:
        raise ValueError(f"unknown aperture mode {aperture!r}")
    return VisibilityCone(int(face_id), np.asarray(apex, float), m, ap, len(V))


def visibility_cone(face_id, mesh, traj, vis=None, aperture="mean_deviation"):
    """Cone whose axis is the mean viewing direction of the cameras seeing a face."""
    if vis is None:
        row = visibility_matrix(mesh, traj)[face_id]
    else:
        row = vis[face_id]
    return cone_from_points(face_id, mesh.centroids[face_id], traj.positions[row], aperture)


def in_cone(cone, camera, visible=True):
    """Closed-cone membership of a camera position that passed the visibility test."""
    if not visible:
        return False
    v = np.asarray(camera, float) - cone.apex
    n = np.linalg.norm(v)
    if n == 0:
        return False
    ang = math.acos(max(-1.0, min(1.0, float(cone.mesh_vector @ v) / n)))
    return ang <= cone.aperture + CONE_TOL


def cone_matrix(mesh, traj, vis, aperture="mean_deviation"):
    """``(F, N)`` mask of cameras inside each face's cone, plus the cones.

    Faces without visible cameras get ``None`` and an empty row.
    """
    C, S = mesh.centroids, traj.positions
    inside = np.zeros_like(vis)
    cones = []
    for f in range(len(C)):
        cams = np.flatnonzero(vis[f])
        if cams.size == 0:
            cones.append(None)
            continue
        cone = cone_from_points(f, C[f], S[cams], aperture)
        cones.append(cone)
        ang = _angles(cone.mesh_vector, _unit(S[cams] - C[f]))
        inside[f, cams[ang <= cone.aperture + CONE_TOL]] = True
    return inside, cones


def grid_subsample(traj, R):
    """Ids of one pose per occupied cell of a square lattice of size ``R``.

    Cells are ``[a + i R, a + (i + 1) R)`` with ``a`` the lower corner of the
    trajectory's horizontal bounding box. Each occupied cell contributes the
    pose nearest its center (lowest id on ties); scanning cells row by row, a
    pick closer than ``R / 2`` horizontally to an earlier pick is skipped.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    XY = traj.positions[:, :2]
    rel = (XY - XY.min(axis=0)) / R
    cell = np.floor(rel + 1e-9).astype(np.int64)
    dist = np.linalg.norm(rel - (cell + 0.5), axis=1)
    order = np.lexsort((traj.ids, dist, cell[:, 0], cell[:, 1]))
    picks = []
    last = None
    for k in order:
        key = (cell[k, 1], cell[k, 0])
        if key != last:
            picks.append(k)
            last = key
    chosen = []
    for k in picks:
        if chosen:
            gap = np.linalg.norm(XY[chosen] - XY[k], axis=1).min()
            if gap < R / 2 * (1 - 1e-9):
                continue
        chosen.append(k)
    return {int(traj.ids[k]) for k in chosen}


def _thin(cands, XY, R):
    """Greedy subset of candidate indices with horizontal spacing at least ``R``."""
    kept = []
    for k in cands:
        if kept and np.linalg.norm(XY[kept] - XY[k], axis=1).min() < R * (1 - 1e-9):
            continue
        kept.append(k)
    return kept


def _min_spacing(XY, groups):
    best = math.inf
    for g in groups:
        if len(g) > 1:
            P = XY[list(g)]
            D = np.linalg.norm(P[:, None] - P[None], axis=-1)
            best = min(best, float(D[np.triu_indices(len(g), 1)].min()))
    return best


def select_views(
    mesh,
    traj,
    r0,
    coverage_target=0.95,
    k_min=3,
    *,
    aperture="mean_deviation",
    coverage_mode="area",
    vis=None,
    max_levels=MAX_LEVELS,
):
    """Pick a subset of trajectory cameras that covers the mesh.

    Level ``k`` uses lattice size ``R = r0 / 2**k``. The candidate set is the
    level's lattice picks together with the cameras already chosen. For each
    face still uncovered, the in-cone candidates (already chosen first, then
    by id) are thinned greedily to horizontal spacing ``R``; if at least
    ``k_min`` remain they join the solution and the face is covered.

    Stops once the covered share reaches ``coverage_target`` or after
    ``max_levels`` levels. Raises NoProgress, carrying the partial
    selection, if the target is still unmet at that point or when a level
    that already uses every camera covers nothing new.
    """
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    if not 0 < coverage_target <= 1:
        raise ValueError("coverage_target must lie in (0, 1]")
    if int(k_min) != k_min or k_min < 1:
        raise ValueError("k_min must be a positive integer")
    if coverage_mode not in ("area", "faces"):
        raise ValueError("coverage_mode must be 'area' or 'faces'")
    k_min = int(k_min)
    vis = visibility_matrix(mesh, traj) if vis is None else vis
    inside, _ = cone_matrix(mesh, traj, vis, aperture)
    XY = traj.positions[:, :2]
    n_faces = len(mesh)
    weights = mesh.areas if coverage_mode == "area" else np.ones(n_faces)
    excluded = ~vis.any(axis=1)
    total = float(weights[~excluded].sum())

    sel = Selection(
        chosen=set(),
        per_face_cover={},
        face_level={},
        levels=[],
        uncovered=set(np.flatnonzero(~excluded).tolist()),
        excluded=set(np.flatnonzero(excluded).tolist()),
        coverage=0.0 if total > 0 else 1.0,
        coverage_mode=coverage_mode,
        n_faces=n_faces,
        k_min=k_min,
        weights=weights,
    )
    covered_w = 0.0
    sol = np.zeros(len(traj), dtype=bool)  # indexed by camera id
    for level in range(max_levels):
        if sel.coverage >= coverage_target:
            break
        R = r0 / 2**level
        grid = np.zeros(len(traj), dtype=bool)
        grid[sorted(grid_subsample(traj, R))] = True
        pool = grid | sol
        added, groups, n_new = [], [], 0
        for f in sorted(sel.uncovered):
            cand = np.flatnonzero(inside[f] & pool)
            if cand.size < k_min:
                continue
            cand = np.concatenate([cand[sol[cand]], cand[~sol[cand]]])
            kept = _thin(cand, XY, R)
            if len(kept) < k_min:
                continue
            for k in kept:
                if not sol[k]:
                    sol[k] = True
                    added.append(int(k))
            sel.per_face_cover[f] = sorted(int(k) for k in kept)
            sel.face_level[f] = level
            sel.uncovered.discard(f)
            covered_w += weights[f]
            groups.append(kept)
            n_new += 1
        sel.chosen = set(np.flatnonzero(sol).tolist())
        sel.coverage = covered_w / total if total > 0 else 1.0
        sel.levels.append(
            LevelRecord(level, R, tuple(sorted(added)), n_new, sel.coverage, _min_spacing(XY, groups))
        )
        if n_new == 0 and grid.all():
            break
    if sel.coverage < coverage_target:
        raise NoProgress(
            f"coverage {sel.coverage:.4f} below target {coverage_target}; "
            f"{len(sel.uncovered)} face(s) uncovered",
            sel,
        )
    return sel


def coverage_report(sel, mesh=None):
    """Summary statistics of a selection.

    With ``mesh`` given, coverage is recomputed from face areas; otherwise
    the selection's own weights are used.
    """
    if mesh is not None:
        weights = mesh.areas
        n_faces = len(mesh)
    else:
        weights = sel.weights if sel.weights is not None else np.ones(sel.n_faces)
        n_faces = sel.n_faces
    counted = np.ones(n_faces, dtype=bool)
    counted[list(sel.excluded)] = False
    covered = np.zeros(n_faces, dtype=bool)
    covered[list(sel.per_face_cover)] = True
    denom_area = float(weights[counted].sum())
    denom_faces = int(counted.sum())
    hist = {}
    for cams in sel.per_face_cover.values():
        hist[len(cams)] = hist.get(len(cams), 0) + 1
    return {
        "covered_fraction_area": float(weights[covered].sum()) / denom_area if denom_area else 0.0,
        "covered_fraction_faces": int(covered.sum()) / denom_faces if denom_faces else 0.0,
        "faces_total": n_faces,
        "faces_covered": int(covered.sum()),
        "faces_excluded": len(sel.excluded),
        "chosen_count": len(sel.chosen),
        "per_level": [
            {
                "level": r.level,
                "resolution": r.resolution,
                "cameras_added": len(r.added),
                "faces_covered": r.faces_covered,
                "coverage": r.coverage,
                "min_spacing": None if math.isinf(r.min_spacing) else r.min_spacing,
            }
            for r in sel.levels
        ],
        "cover_histogram": {str(k): hist[k] for k in sorted(hist)},
    }
