"""Result emission: VTK snapshots, cut CSV files, run directories.

Every run directory contains the echoed configuration (sufficient to
reproduce the run), a mesh summary, numbered field snapshots, the
line-cut CSV files and the iteration trace log. All numeric output is
written with a dot decimal separator at full double precision.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .mesh import Mesh, Region, Surface, SURFACE_NAMES, compute_edge_geometry
from .validation import Profile1D

#: environment variable naming the default root for run output directories
OUTPUT_ROOT_ENV = "TECSIM_OUTPUT_ROOT"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk_snapshot(mesh: Mesh, state, path) -> None:
    """Legacy ASCII VTK unstructured grid with point data phi, n, T.

    Point and cell ordering follow the mesh's node and element indices
    exactly, so readers recover fields in mesh order.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"tecsim fields at t = {_fmt(state.time)} s\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.num_vertices} double\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}\n")
        fh.write(f"CELLS {mesh.num_tets} {5 * mesh.num_tets}\n")
        for tet in mesh.tets:
            fh.write(f"4 {tet[0]} {tet[1]} {tet[2]} {tet[3]}\n")
        fh.write(f"CELL_TYPES {mesh.num_tets}\n")
        fh.write("\n".join(["10"] * mesh.num_tets) + "\n")
        fh.write(f"POINT_DATA {mesh.num_vertices}\n")
        for name, values in (("phi", state.phi), ("n", state.n), ("T", state.T)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            fh.write("\n".join(_fmt(v) for v in values) + "\n")


def write_cut_csv(profile: Profile1D, path) -> None:
    """Cut samples as CSV; coordinates are converted from meters to um."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("coordinate_um,value\n")
        for c, v in zip(profile.coordinates, profile.values):
            fh.write(f"{_fmt(c * 1e6)},{_fmt(v)}\n")


def mesh_summary(mesh: Mesh) -> str:
    """Human-readable mesh report: counts, volumes, areas, edge quality."""
    lines = [
        f"vertices: {mesh.num_vertices}",
        f"tetrahedra: {mesh.num_tets}",
        f"total volume: {_fmt(mesh.total_volume)} m^3",
    ]
    for region in Region:
        count = int((mesh.tet_regions == region).sum())
        lines.append(f"region {region.name.lower()}: {count} tets")
    for surface in (Surface.SIGMA_B, Surface.SIGMA_T, Surface.SIGMA_LAT,
                    Surface.GAMMA_B, Surface.GAMMA_T):
        faces = mesh.faces_for(surface)
        area = float(mesh.face_areas(faces).sum()) if len(faces) else 0.0
        lines.append(f"surface {SURFACE_NAMES[surface]}: {len(faces)} faces, "
                     f"area {_fmt(area)} m^2")
    geom = compute_edge_geometry(mesh)
    lines.append(f"edges: {len(geom.edges)}")
    lines.append(f"negative-weight edges: {geom.negative_edge_count} "
                 "(discrete nonnegativity guarantee "
                 + ("holds" if geom.negative_edge_count == 0 else "NOT guaranteed")
                 + ")")
    return "\n".join(lines) + "\n"


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "."))


class RunWriter:
    """Manages one run's output directory."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._trace_path = self.directory / "trace.log"

    def write_config_echo(self, config) -> Path:
        path = self.directory / "config_echo.cfg"
        path.write_text(config.to_text(), encoding="utf-8")
        return path

    def write_mesh_summary(self, mesh: Mesh) -> Path:
        path = self.directory / "mesh_summary.txt"
        path.write_text(mesh_summary(mesh), encoding="utf-8")
        return path

    def write_snapshot(self, mesh: Mesh, level: int, state) -> Path:
        path = self.directory / f"snapshot_{level:06d}.vtk"
        write_vtk_snapshot(mesh, state, path)
        return path

    def append_trace(self, line: str) -> None:
        with open(self._trace_path, "a", encoding="utf-8") as fh:
            fh.write(line.rstrip("\n") + "\n")

    def write_cut(self, name: str, field: str, profile: Profile1D) -> Path:
        path = self.directory / f"cut_{name}_{field}.csv"
        write_cut_csv(profile, path)
        return path
