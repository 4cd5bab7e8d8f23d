"""Triangle meshes and camera trajectories, with OBJ and JSON readers."""

from dataclasses import dataclass
import json
import math
import os

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import ParseError

MAX_FACES = 10_000
_AREA_TOL = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    """Triangle soup with per-face centroid, unit normal and area.

    Degenerate faces (area at most ``1e-12 * scale**2``, where ``scale`` is
    the bounding-box diagonal unless given) are rejected.
    """

    vertices: np.ndarray
    faces: np.ndarray
    max_faces: int = MAX_FACES
    scale: float = None

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        F = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(F) > self.max_faces:
            raise ValueError(f"mesh has {len(F)} faces, more than the maximum {self.max_faces}")
        if F.size and (F.min() < 0 or F.max() >= len(V)):
            raise ValueError("face index out of range")
        if not np.all(np.isfinite(V)):
            raise ValueError("mesh has non-finite vertices")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "faces", F)
        scale = self.scale
        if scale is None:
            scale = float(np.linalg.norm(np.ptp(V, axis=0))) if len(V) else 1.0
        bad = np.flatnonzero(self.areas <= _AREA_TOL * scale**2)
        if bad.size:
            raise ValueError(f"degenerate face {int(bad[0])}")

    def __len__(self):
        return len(self.faces)

    @property
    def _corners(self):
        return self.vertices[self.faces]

    @property
    def _cross(self):
        a, b, c = np.moveaxis(self._corners, 1, 0)
        return np.cross(b - a, c - a)

    @property
    def centroids(self):
        return self._corners.mean(axis=1)

    @property
    def areas(self):
        return 0.5 * np.linalg.norm(self._cross, axis=1)

    @property
    def normals(self):
        n = self._cross
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def subset(self, keep):
        """Mesh with only the faces selected by boolean mask or index array."""
        return TriangleMesh(self.vertices, self.faces[keep], self.max_faces, self.scale)


@dataclass(frozen=True)
class CameraTrajectory:
    """Downward-looking camera poses with dense integer ids ``0..N-1``."""

    positions: np.ndarray
    ids: np.ndarray
    fov: tuple = (math.radians(120.0), math.radians(70.0))

    def __post_init__(self):
        P = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        if len(P) == 0:
            raise ValueError("trajectory is empty")
        if len(ids) != len(P):
            raise ValueError("ids and positions differ in length")
        if not np.array_equal(np.sort(ids), np.arange(len(ids))):
            raise ValueError("camera ids must be unique and dense (0..N-1)")
        if not all(0 < f < math.pi for f in self.fov):
            raise ValueError("fov angles must lie in (0, pi)")
        order = np.argsort(ids)
        object.__setattr__(self, "positions", P[order])
        object.__setattr__(self, "ids", ids[order])
        object.__setattr__(self, "fov", tuple(float(f) for f in self.fov))

    def __len__(self):
        return len(self.ids)


def _read_text(source):
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    if hasattr(source, "read"):
        return source.read()
    raise FileNotFoundError(source)


def _face_index(token, n_vertices, lineno):
    head = token.split("/", 1)[0]
    try:
        k = int(head)
    except ValueError:
        raise ParseError(f"bad face index {token!r}", f"line {lineno}") from None
    # OBJ indices are 1-based; negative values count back from the last vertex
    k = k - 1 if k > 0 else n_vertices + k
    if not 0 <= k < n_vertices:
        raise ParseError(f"face index {token!r} out of range", f"line {lineno}")
    return k


def parse_obj(text, max_faces=MAX_FACES):
    """Parse ASCII OBJ text holding ``v`` and triangular ``f`` records."""
    verts, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        tag, args = parts[0], parts[1:]
        if tag == "v":
            if len(args) < 3:
                raise ParseError("vertex needs three coordinates", f"line {lineno}")
            try:
                verts.append([float(a) for a in args[:3]])
            except ValueError:
                raise ParseError("bad vertex coordinate", f"line {lineno}") from None
        elif tag == "f":
            if len(args) != 3:
                raise ParseError(
                    f"face has {len(args)} vertices; only triangles are supported",
                    f"line {lineno}",
                )
            faces.append([_face_index(a, len(verts), lineno) for a in args])
    if not faces:
        raise ParseError("no faces found")
    try:
        return TriangleMesh(np.array(verts), np.array(faces), max_faces=max_faces)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def read_obj(path, max_faces=MAX_FACES):
    return parse_obj(_read_text(path), max_faces=max_faces)


def write_obj(mesh, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in mesh.vertices:
            fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*v))
        for f in mesh.faces:
            fh.write("f {} {} {}\n".format(*(f + 1)))


def parse_trajectory(records, fov=None):
    """Trajectory from a list of ``{"id", "x", "y", "z"}`` records."""
    if not isinstance(records, list):
        raise ParseError("trajectory must be a JSON list")
    if not records:
        raise ParseError("trajectory is empty")
    ids, pos = [], []
    for k, rec in enumerate(records):
        where = f"record {k}"
        if not isinstance(rec, dict):
            raise ParseError("expected an object", where)
        missing = [key for key in ("id", "x", "y", "z") if key not in rec]
        if missing:
            raise ParseError(f"missing field(s) {', '.join(missing)}", where)
        if not isinstance(rec["id"], int) or isinstance(rec["id"], bool):
            raise ParseError("id must be an integer", where)
        try:
            xyz = [float(rec[key]) for key in "xyz"]
        except (TypeError, ValueError):
            raise ParseError("coordinates must be numbers", where) from None
        if not all(math.isfinite(c) for c in xyz):
            raise ParseError("coordinates must be finite", where)
        ids.append(rec["id"])
        pos.append(xyz)
    kwargs = {} if fov is None else {"fov": fov}
    try:
        return CameraTrajectory(np.array(pos), np.array(ids), **kwargs)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def read_trajectory(path, fov=None):
    try:
        records = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}") from None
    return parse_trajectory(records, fov=fov)


def trajectory_records(traj):
    return [
        {"id": int(i), "x": float(p[0]), "y": float(p[1]), "z": float(p[2])}
        for i, p in zip(traj.ids, traj.positions)
    ]


def filter_outlier_faces(mesh, k=8, n_sigma=3.0):
    """Drop faces whose mean distance to the ``k`` nearest centroids is an outlier.

    A face is dropped when that distance exceeds the mean over all faces by
    more than ``n_sigma`` standard deviations. Returns ``(mesh, kept_index)``.
    """
    C = mesh.centroids
    if len(C) <= k:
        return mesh, np.arange(len(C))
    d, _ = cKDTree(C).query(C, k=k + 1)
    score = d[:, 1:].mean(axis=1)
    keep = np.flatnonzero(score <= score.mean() + n_sigma * score.std())
    return mesh.subset(keep), keep


def grid_plane(nx, ny, cell, z=0.0, origin=(0.0, 0.0)):
    """Horizontal plane of ``nx * ny`` square cells, two triangles per cell, facing up."""
    xs = origin[0] + cell * np.arange(nx + 1)
    ys = origin[1] + cell * np.arange(ny + 1)
    X, Y = np.meshgrid(xs, ys)
    V = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, z)])
    faces = []
    for j in range(ny):
        for i in range(nx):
            a = j * (nx + 1) + i
            b, c, d = a + 1, a + nx + 2, a + nx + 1
            faces += [[a, b, c], [a, c, d]]
    return V, np.array(faces)


def box_surface(lo, hi, divisions=1):
    """Closed axis-aligned box minus its bottom, outward normals, split into
    ``divisions`` squares per edge on every face."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    n = divisions
    verts, faces = [], []

    def quad_patch(p0, du, dv):
        base = len(verts)
        for j in range(n + 1):
            for i in range(n + 1):
                verts.append(p0 + du * (i / n) + dv * (j / n))
        for j in range(n):
            for i in range(n):
                a = base + j * (n + 1) + i
                b, c, d = a + 1, a + n + 2, a + n + 1
                faces.extend([[a, b, c], [a, c, d]])

    dx, dy, dz = np.diag(hi - lo)
    quad_patch(np.array([lo[0], lo[1], hi[2]]), dx, dy)  # top, +z
    quad_patch(lo, dx, dz)  # y = lo, -y
    quad_patch(np.array([lo[0], hi[1], lo[2]]), dz, dx)  # y = hi, +y
    quad_patch(lo, dz, dy)  # x = lo, -x
    quad_patch(np.array([hi[0], lo[1], lo[2]]), dy, dz)  # x = hi, +x
    return np.array(verts), np.array(faces)


def merge_meshes(parts, **kwargs):
    verts, faces, offset = [], [], 0
    for V, F in parts:
        verts.append(V)
        faces.append(F + offset)
        offset += len(V)
    return TriangleMesh(np.vstack(verts), np.vstack(faces), **kwargs)


def lattice_trajectory(extent_x, extent_y, step, height, origin=(0.0, 0.0), fov=None):
    """Lawnmower-style lattice of poses at ``height`` with spacing ``step``."""
    nx = int(math.floor(extent_x / step + 1e-9)) + 1
    ny = int(math.floor(extent_y / step + 1e-9)) + 1
    xs = origin[0] + step * np.arange(nx)
    ys = origin[1] + step * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    P = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, float(height))])
    kwargs = {} if fov is None else {"fov": fov}
    return CameraTrajectory(P, np.arange(len(P)), **kwargs)
