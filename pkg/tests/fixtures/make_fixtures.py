"""Regenerate the synthetic scenes used by the view-selection tests.

Flat: a 6h x 6h ground plane (h = 1) in 0.5h squares, seen by a lattice
trajectory of spacing h/4 at height h. Orchard: the same plane plus five
boxes (0.6h square, 0.5h tall) standing in for trees.
"""

import json
from pathlib import Path

from viewselect.mesh import (
    box_surface,
    grid_plane,
    lattice_trajectory,
    merge_meshes,
    trajectory_records,
    write_obj,
)

HERE = Path(__file__).parent
TREES = [(1.5, 1.5), (1.5, 4.5), (4.5, 1.5), (4.5, 4.5), (3.0, 3.0)]


def flat_scene():
    return merge_meshes([grid_plane(12, 12, 0.5)])


def orchard_scene():
    parts = [grid_plane(12, 12, 0.5)]
    for cx, cy in TREES:
        parts.append(box_surface((cx - 0.3, cy - 0.3, 0.0), (cx + 0.3, cy + 0.3, 0.5), 2))
    return merge_meshes(parts)


def trajectory():
    return lattice_trajectory(6.0, 6.0, 0.25, 1.0)


def main():
    write_obj(flat_scene(), HERE / "flat.obj")
    write_obj(orchard_scene(), HERE / "orchard.obj")
    with open(HERE / "lattice_traj.json", "w", encoding="utf-8") as fh:
        json.dump(trajectory_records(trajectory()), fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main()
