"""Output writers: legacy-ASCII VTK, CSV, and the diagnostics table.

Floats are written with ``repr``, which round-trips IEEE doubles exactly
(up to 17 significant digits).
"""
from __future__ import annotations

import os

import numpy as np


def component_names(model):
    if model.m == 1:
        return ["u"]
    return ["rho", "rhou", "rhov", "E"]


def _vtk_header(fh, title):
    fh.write("# vtk DataFile Version 3.0\n")
    fh.write(title + "\n")
    fh.write("ASCII\n")
    fh.write("DATASET UNSTRUCTURED_GRID\n")


def write_vtk_cells(mesh, field, path, names, title="cell averages"):
    """Unstructured grid of the polygons with one CELL_DATA array per component."""
    with open(path, "w") as fh:
        _vtk_header(fh, title)
        fh.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x!r} {y!r} 0.0\n")
        size = sum(len(loop) + 1 for loop in mesh.polygons)
        fh.write(f"CELLS {mesh.n_elements} {size}\n")
        for loop in mesh.polygons:
            fh.write(f"{len(loop)} " + " ".join(str(v) for v in loop) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_elements}\n")
        for _ in mesh.polygons:
            fh.write("7\n")
        fh.write(f"CELL_DATA {mesh.n_elements}\n")
        for k, name in enumerate(names):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in field.avg[:, k]:
                fh.write(f"{v!r}\n")


def write_vtk_points(layout, field, path, names, title="point values"):
    """Point cloud of all DOFs with POINT_DATA arrays."""
    n = layout.n_point_dofs
    with open(path, "w") as fh:
        _vtk_header(fh, title)
        fh.write(f"POINTS {n} double\n")
        for x, y in layout.dof_pos:
            fh.write(f"{x!r} {y!r} 0.0\n")
        fh.write(f"CELLS {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"CELL_TYPES {n}\n")
        for _ in range(n):
            fh.write("1\n")
        fh.write(f"POINT_DATA {n}\n")
        for k, name in enumerate(names):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in field.point[:, k]:
                fh.write(f"{v!r}\n")


def write_csv_table(path, positions, values, names):
    with open(path, "w") as fh:
        fh.write("x,y," + ",".join(names) + "\n")
        for pos, row in zip(positions, values):
            fh.write(f"{pos[0]!r},{pos[1]!r},"
                     + ",".join(repr(v) for v in row) + "\n")


def read_csv_table(path):
    """Returns (positions, values) of a table written by write_csv_table."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    data = np.array([[float(t) for t in ln.split(",")] for ln in lines[1:]])
    return data[:, :2], data[:, 2:]


def write_field(mesh, layout, field, outdir, stem, names, fmt="vtk"):
    """Write both views of one field snapshot; returns the created paths."""
    paths = []
    if fmt == "vtk":
        p = os.path.join(outdir, f"{stem}_cells.vtk")
        write_vtk_cells(mesh, field, p, names)
        paths.append(p)
        p = os.path.join(outdir, f"{stem}_points.vtk")
        write_vtk_points(layout, field, p, names)
        paths.append(p)
    elif fmt == "csv":
        p = os.path.join(outdir, f"{stem}_cells.csv")
        write_csv_table(p, mesh.centroid, field.avg, names)
        paths.append(p)
        p = os.path.join(outdir, f"{stem}_points.csv")
        write_csv_table(p, layout.dof_pos, field.point, names)
        paths.append(p)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return paths
