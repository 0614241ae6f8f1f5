"""Legacy ASCII VTK writers: triangle grids with cell data, and point
clouds for edge-midpoint data."""
from __future__ import annotations

import numpy as np


def _write_points(f, pts):
    f.write(f"POINTS {len(pts)} double\n")
    for p in pts:
        f.write(f"{p[0]:.16e} {p[1]:.16e} 0\n")


def _write_scalars(f, name, vals):
    f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    for v in vals:
        f.write(f"{v:.16e}\n")


def _write_vectors(f, name, vals):
    f.write(f"VECTORS {name} double\n")
    for v in vals:
        f.write(f"{v[0]:.16e} {v[1]:.16e} 0\n")


def write_unstructured(path, mesh, cell_scalars=None, cell_vectors=None) -> None:
    """Triangle mesh with per-cell data as an unstructured grid."""
    cell_scalars = cell_scalars or {}
    cell_vectors = cell_vectors or {}
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\nfvproj snapshot\nASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        _write_points(f, mesh.vertices)
        nt = mesh.num_triangles
        f.write(f"CELLS {nt} {4 * nt}\n")
        for t in mesh.triangles:
            f.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        f.write(f"CELL_TYPES {nt}\n")
        f.write("5\n" * nt)
        if cell_scalars or cell_vectors:
            f.write(f"CELL_DATA {nt}\n")
            for name in sorted(cell_scalars):
                _write_scalars(f, name, np.asarray(cell_scalars[name]))
            for name in sorted(cell_vectors):
                _write_vectors(f, name, np.asarray(cell_vectors[name]))


def write_point_cloud(path, points, scalars=None) -> None:
    """Point cloud (polydata vertices) with per-point scalar data."""
    scalars = scalars or {}
    points = np.asarray(points)
    n = len(points)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\nfvproj point samples\nASCII\n")
        f.write("DATASET POLYDATA\n")
        _write_points(f, points)
        f.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            f.write(f"1 {i}\n")
        if scalars:
            f.write(f"POINT_DATA {n}\n")
            for name in sorted(scalars):
                _write_scalars(f, name, np.asarray(scalars[name]))
