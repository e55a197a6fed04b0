"""Transient driver: backward Euler time stepping around a decoupling loop.

Every time slab is advanced by a fixed-point iteration that solves, per
sweep, the potential equation, then the continuity equation, then the heat
equation, each linearized at the previous sweep's iterate while the time
derivative always acts against the previous *time level*. The iteration
stops at the first sweep whose density update falls below the tolerance
(measured, by default, relative to the current density norm; the raw
unscaled norm of the paper-style criterion is available as a setting).

Any subset of the three fields may be frozen to prescribed profiles, which
is how the analytic validation cases (given field and temperature, or
given drift) are expressed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import equations, fem
from .materials import ElementCoefficients
from .mesh import Mesh

log = logging.getLogger("tecsim")


class GummelError(RuntimeError):
    """Decoupling iteration failed to converge; carries the trace."""

    def __init__(self, message: str, trace: "IterationTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time levels given by their positive widths.

    A width of ``math.inf`` marks a stationary solve (the time-derivative
    terms are dropped for that slab).
    """

    deltas: tuple

    def __post_init__(self):
        deltas = tuple(float(d) for d in self.deltas)
        if not deltas:
            raise ValueError("at least one time slab is required")
        if any(not d > 0.0 for d in deltas):
            raise ValueError("all time slab widths must be positive")
        object.__setattr__(self, "deltas", deltas)

    @classmethod
    def steady(cls) -> "TimeGrid":
        return cls((math.inf,))

    @classmethod
    def geometric(cls, first: float, growth: float, t_final: float,
                  dt_max: float = math.inf) -> "TimeGrid":
        """Widths growing by ``growth`` per slab until ``t_final`` is covered."""
        if not (first > 0.0 and growth >= 1.0 and t_final > 0.0):
            raise ValueError("need first > 0, growth >= 1 and t_final > 0")
        deltas, t, dt = [], 0.0, first
        while t < t_final * (1.0 - 1e-12):
            dt = min(dt, dt_max, t_final - t)
            deltas.append(dt)
            t += dt
            dt *= growth
        return cls(tuple(deltas))

    @property
    def levels(self) -> tuple:
        out, t = [0.0], 0.0
        for d in self.deltas:
            t += d
            out.append(t)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.deltas)


@dataclass(frozen=True)
class GummelSettings:
    """Controls of the decoupling iteration."""

    toll: float = 1e-3
    max_iterations: int = 100
    linear_tolerance: float = 1e-10
    scaling: str = "relative"   # 'relative' or 'absolute' update norm
    damping: float = 1.0        # fraction of each update applied (1 = undamped)
    track_all_fields: bool = False  # also require small potential/heat updates

    def __post_init__(self):
        if not self.toll > 0.0:
            raise ValueError("toll must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.scaling not in ("relative", "absolute"):
            raise ValueError("scaling must be 'relative' or 'absolute'")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class FrozenFields:
    """Which fields are held fixed at their current nodal profiles.

    ``heat_drift`` optionally replaces the model's thermal drift with a
    prescribed constant vector (W/(m^2 K)) for the analytic benchmarks.
    """

    potential: bool = False
    density: bool = False
    temperature: bool = False
    heat_drift: tuple | None = None

    @property
    def solved_equations(self) -> tuple:
        out = []
        if not self.potential:
            out.append("poisson")
        if not self.density:
            out.append("continuity")
        if not self.temperature:
            out.append("heat")
        return tuple(out)


@dataclass
class IterationTrace:
    """Convergence record of one time step."""

    level: int
    time: float
    deltas: list = field(default_factory=list)
    linear_residuals: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        """The stopping index: deltas holds iterations + 1 entries."""
        return max(len(self.deltas) - 1, 0)


def check_convergence(n_new, n_old, toll: float) -> bool:
    """Plain Euclidean norm test ||n_new - n_old||_2 < toll (strict)."""
    diff = np.asarray(n_new, dtype=float) - np.asarray(n_old, dtype=float)
    return bool(np.linalg.norm(diff) < toll)


def _update_norm(new, old, scaling: str) -> float:
    delta = float(np.linalg.norm(new - old))
    if scaling == "absolute":
        return delta
    return delta / (float(np.linalg.norm(old)) or 1.0)


def gummel_step(state: equations.FieldState, dt: float, mesh: Mesh,
                coeffs: ElementCoefficients, bc: equations.BoundarySpec,
                settings: GummelSettings = GummelSettings(),
                frozen: FrozenFields = FrozenFields(),
                level: int = 0):
    """Advance one time slab; returns ``(new_state, trace)``.

    The convergence monitor follows the density updates; when the density
    is frozen it falls back to the temperature (then potential) updates so
    frozen-field benchmark runs still report a meaningful stopping index.
    """
    errors = bc.validate(mesh, equations=frozen.solved_equations)
    if errors:
        raise equations.BoundarySpecError(errors)

    time_next = state.time + dt
    trace = IterationTrace(level=level, time=time_next)
    if frozen.density:
        monitor = "T" if not frozen.temperature else "phi"
    else:
        monitor = "n"

    phi, n, temp = state.phi, state.n, state.T
    lin_tol = settings.linear_tolerance
    for _ in range(settings.max_iterations):
        iterate = equations.FieldState(state.time, phi, n, temp)
        residuals = {}

        if frozen.potential:
            phi_new = phi
        else:
            system = equations.assemble_poisson(mesh, coeffs, bc, iterate)
            phi_new = fem.solve_linear(system, lin_tol)
            residuals["poisson"] = _residual(system, phi_new)

        edge_data = None
        if frozen.density:
            n_new = n
        else:
            edge_data = equations.continuity_edge_data(mesh, coeffs, phi_new,
                                                       temp, n)
            system, sub = equations.assemble_continuity(
                mesh, coeffs, bc, iterate, phi_new, dt,
                prev_density=state.n, edge_data=edge_data)
            solution = fem.solve_linear(system, lin_tol)
            residuals["continuity"] = _residual(system, solution)
            # guard against roundoff-level negative densities
            solution = np.maximum(solution, 0.0)
            n_new = n.copy()
            n_new[sub.node_ids] = solution
            if settings.damping < 1.0:
                n_new = n + settings.damping * (n_new - n)

        if frozen.temperature:
            temp_new = temp
        else:
            system = equations.assemble_heat(
                mesh, coeffs, bc, iterate, phi_new, n_new, dt,
                prev_temperature=state.T, drift_override=frozen.heat_drift,
                edge_data=edge_data)
            temp_new = fem.solve_linear(system, lin_tol)
            residuals["heat"] = _residual(system, temp_new)
            if settings.damping < 1.0:
                temp_new = temp + settings.damping * (temp_new - temp)

        pairs = {"n": (n_new, n), "T": (temp_new, temp), "phi": (phi_new, phi)}
        delta = _update_norm(*pairs[monitor], settings.scaling)
        trace.deltas.append(delta)
        trace.linear_residuals.append(residuals)

        converged = delta < settings.toll
        if converged and settings.track_all_fields:
            converged = all(
                _update_norm(*pairs[name], settings.scaling) < settings.toll
                for name in pairs)
        phi, n, temp = phi_new, n_new, temp_new
        if converged:
            trace.converged = True
            new_state = equations.FieldState(time_next, phi, n, temp)
            new_state.validate(mesh)
            return new_state, trace

    raise GummelError(
        f"decoupling iteration did not converge within "
        f"{settings.max_iterations} iterations at t = {time_next:.6e} s "
        f"(last update {trace.deltas[-1]:.3e}, toll {settings.toll:.3e})",
        trace)


def _residual(system: fem.SparseSystem, solution) -> float:
    r = np.linalg.norm(system.matrix @ solution - system.rhs)
    ref = np.linalg.norm(system.rhs) or 1.0
    return r / ref


@dataclass
class TransientResult:
    """Outcome of a transient run."""

    states: list          # retained snapshots, initial state included
    snapshot_levels: list  # time-level index of each retained state
    traces: list
    step_changes: list    # relative density change per time level
    mesh: Mesh
    coeffs: ElementCoefficients

    @property
    def final_state(self) -> equations.FieldState:
        return self.states[-1]


def run_transient(mesh: Mesh, coeffs: ElementCoefficients,
                  bc: equations.BoundarySpec, initial: equations.FieldState,
                  grid: TimeGrid, settings: GummelSettings = GummelSettings(),
                  frozen: FrozenFields = FrozenFields(),
                  snapshot_every: int = 0, on_snapshot=None) -> TransientResult:
    """March the coupled system over the time grid.

    When the potential is solved, the initial state's potential is replaced
    by one potential solve against the initial density and temperature.
    ``snapshot_every = k`` retains every k-th level (0: final only; the
    initial state is always kept); ``on_snapshot(level, state)`` is invoked
    as snapshots are produced so callers can persist partial histories.
    Progress is reported as one structured log line per level.
    """
    initial = initial.copy()
    if not frozen.potential:
        system = equations.assemble_poisson(mesh, coeffs, bc, initial)
        initial.phi = fem.solve_linear(system, settings.linear_tolerance)
    initial.validate(mesh)

    result = TransientResult(states=[initial], snapshot_levels=[0], traces=[],
                             step_changes=[], mesh=mesh, coeffs=coeffs)
    if on_snapshot is not None:
        on_snapshot(0, initial)

    state = initial
    for k, dt in enumerate(grid.deltas, start=1):
        new_state, trace = gummel_step(state, dt, mesh, coeffs, bc, settings,
                                       frozen, level=k)
        change = _update_norm(new_state.n, state.n, "relative")
        result.traces.append(trace)
        result.step_changes.append(change)
        log.info("level=%d t=%.6e dt=%.3e iterations=%d delta=%.3e "
                 "step_change=%.3e", k, new_state.time, dt, trace.iterations,
                 trace.deltas[-1], change)
        state = new_state
        keep = (snapshot_every > 0 and k % snapshot_every == 0)
        if keep or k == len(grid.deltas):
            result.states.append(state)
            result.snapshot_levels.append(k)
            if on_snapshot is not None:
                on_snapshot(k, state)
    return result
