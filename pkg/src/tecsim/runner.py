"""Turn a parsed configuration into a prepared problem and execute it."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import equations as eq
from .config import SimulationConfig
from .materials import ElementCoefficients, MaterialTable
from .mesh import Mesh, Region
from .output import RunWriter
from .solver import (FrozenFields, GummelSettings, TimeGrid, TransientResult,
                     run_transient)
from .validation import Profile1D
from .mesh import extract_line_cut

log = logging.getLogger("tecsim")


@dataclass
class PreparedRun:
    config: SimulationConfig
    mesh: Mesh
    table: MaterialTable
    coeffs: ElementCoefficients
    bc: eq.BoundarySpec
    initial: eq.FieldState
    grid: TimeGrid
    settings: GummelSettings
    frozen: FrozenFields


def build_problem(config: SimulationConfig) -> PreparedRun:
    """Materialize mesh, coefficients, boundary data and initial fields."""
    mesh = config.build_mesh()
    table = config.build_materials()
    coeffs = table.bind(mesh)
    bc = config.build_boundary_spec()
    frozen = config.build_frozen_fields()

    errors = bc.validate(mesh, equations=frozen.solved_equations)
    if errors:
        raise eq.BoundarySpecError(errors)

    z = mesh.vertices[:, 2]
    z_min, z_max = float(z.min()), float(z.max())

    def expand(spec):
        return spec.evaluate(z, z_min, z_max)

    n = expand(config.frozen.n if config.frozen.n else config.initial.n)
    temp = expand(config.frozen.T if config.frozen.T else config.initial.T)
    phi = expand(config.frozen.phi) if config.frozen.phi else np.zeros_like(z)

    # metal-interior nodes carry the region's fixed electron concentration
    active_nodes = mesh.active_submesh.node_ids
    in_active = np.zeros(mesh.num_vertices, dtype=bool)
    in_active[active_nodes] = True
    for region, mat in ((Region.BOTTOM, table.bottom), (Region.TOP, table.top)):
        if mat is None:
            continue
        nodes = np.unique(mesh.tets[mesh.tet_regions == region])
        n[nodes[~in_active[nodes]]] = mat.n_bar

    initial = eq.FieldState(0.0, phi, n, temp)
    initial.validate(mesh)
    return PreparedRun(config=config, mesh=mesh, table=table, coeffs=coeffs,
                       bc=bc, initial=initial, grid=config.build_time_grid(),
                       settings=config.build_solver_settings(), frozen=frozen)


def execute(prepared: PreparedRun, writer: RunWriter | None = None
            ) -> TransientResult:
    """Run the transient and, if a writer is given, persist all artifacts.

    Snapshots are written as they are produced, so a failing run leaves the
    partial history (plus the trace log captured via the package logger) on
    disk.
    """
    on_snapshot = None
    if writer is not None:
        writer.write_config_echo(prepared.config)
        writer.write_mesh_summary(prepared.mesh)

        def on_snapshot(level, state):
            writer.write_snapshot(prepared.mesh, level, state)

    result = run_transient(prepared.mesh, prepared.coeffs, prepared.bc,
                           prepared.initial, prepared.grid, prepared.settings,
                           prepared.frozen,
                           snapshot_every=prepared.config.output.snapshot_every,
                           on_snapshot=on_snapshot)

    if writer is not None:
        for trace in result.traces:
            writer.append_trace(
                f"level={trace.level} t={trace.time:.9e} "
                f"iterations={trace.iterations} "
                f"deltas={','.join(f'{d:.6e}' for d in trace.deltas)}")
        _write_cuts(prepared, result, writer)
    return result


def _write_cuts(prepared: PreparedRun, result: TransientResult,
                writer: RunWriter) -> None:
    state = result.final_state
    units = {"phi": "V", "n": "1/m^3", "T": "K"}
    for cut in prepared.config.output.cuts:
        for name in ("phi", "n", "T"):
            coords, values = extract_line_cut(
                prepared.mesh, getattr(state, name), cut.axis, cut.anchor,
                cut.samples)
            if len(coords) == 0:
                log.warning("cut %s lies outside the mesh; writing empty file",
                            cut.name)
            writer.write_cut(cut.name, name,
                             Profile1D(coords, values, units[name]))


def apply_overrides(prepared: PreparedRun, toll=None, max_iterations=None
                    ) -> PreparedRun:
    """Command-line overrides of the solver settings."""
    settings = prepared.settings
    if toll is not None:
        settings = replace(settings, toll=toll)
    if max_iterations is not None:
        settings = replace(settings, max_iterations=max_iterations)
    prepared.settings = settings
    return prepared
