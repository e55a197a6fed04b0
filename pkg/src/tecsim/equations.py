"""Assembly of the three linearized boundary value problems of one sweep.

Each decoupling sweep solves, in order:

1. the generalized potential equation (dielectric Gauss law in the active
   layer, electro-thermal Ohm conduction in the metal-like regions) for a
   new potential;
2. the electron continuity equation on the active submesh, with the full
   drift field (electric, thermopower and chemical-entropy contributions)
   folded into a single exponential-fitting edge flux;
3. the heat flow equation on the whole device, advected by the
   thermopower-weighted current and driven by the divergence of the
   electrochemical energy flux.

All equations are assembled in conservation form with lumped reaction
terms, so the fitted operators keep the M-matrix structure and closed
systems conserve the lumped density integral exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .constants import CONSTANTS
from .materials import ElementCoefficients, N_FLOOR
from .mesh import LOCAL_EDGES, Mesh, Region, Surface, SURFACE_NAMES

_Q = CONSTANTS.q
_KB = CONSTANTS.k_b


class BoundarySpecError(ValueError):
    """Inconsistent boundary specification; message lists every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Dirichlet:
    value: float


@dataclass(frozen=True)
class Neumann:
    """Prescribed inflow flux density (positive = into the domain)."""

    inflow: float = 0.0


@dataclass(frozen=True)
class Robin:
    """Exchange condition flux = coefficient * (u - reference).

    For the continuity equation the coefficient is the interface
    recombination velocity v_eq [m/s] (the assembled transfer coefficient
    is q*v_eq); for the heat equation it is the heat transfer coefficient
    [W/(m^2 K)] acting directly.
    """

    coefficient: float
    reference: float


_POISSON_SURFACES = {Surface.SIGMA_B, Surface.SIGMA_T, Surface.SIGMA_LAT}
_CONTINUITY_SURFACES = {Surface.GAMMA_B, Surface.GAMMA_T, Surface.SIGMA_LAT_A}
_HEAT_SURFACES = {Surface.SIGMA_B, Surface.SIGMA_T, Surface.SIGMA_LAT,
                  Surface.GAMMA_B, Surface.GAMMA_T}


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary conditions per equation and device surface."""

    poisson: dict = field(default_factory=dict)
    continuity: dict = field(default_factory=dict)
    heat: dict = field(default_factory=dict)

    def validate(self, mesh: Mesh, equations=("poisson", "continuity", "heat")
                 ) -> list[str]:
        """All violations of the boundary contract on ``mesh``.

        ``equations`` restricts the check to the equations actually solved
        (a run with a frozen potential needs no contact values).
        """
        errors = []

        def check_surfaces(name, table, allowed):
            for surface in table:
                if surface not in allowed:
                    errors.append(
                        f"{name}: surface {SURFACE_NAMES[surface]} is not "
                        f"admissible (allowed: "
                        f"{', '.join(sorted(SURFACE_NAMES[s] for s in allowed))})")

        check_surfaces("poisson", self.poisson, _POISSON_SURFACES)
        check_surfaces("continuity", self.continuity, _CONTINUITY_SURFACES)
        check_surfaces("heat", self.heat, _HEAT_SURFACES)

        if "poisson" in equations:
            for surface in (Surface.SIGMA_B, Surface.SIGMA_T):
                bc = self.poisson.get(surface)
                if not isinstance(bc, Dirichlet):
                    errors.append(
                        f"poisson: a Dirichlet value is required on "
                        f"{SURFACE_NAMES[surface]} (the contacts are equipotential)")

        if "heat" in equations:
            # Every exterior surface must be covered by exactly one heat
            # entry; gamma entries cover the matching contact when the outer
            # region is degenerate.
            coverage = {Surface.SIGMA_B: 0, Surface.SIGMA_T: 0,
                        Surface.SIGMA_LAT: 0}
            for surface in self.heat:
                if surface in coverage:
                    coverage[surface] += 1
                elif surface == Surface.GAMMA_B and mesh.region_empty(Region.BOTTOM):
                    coverage[Surface.SIGMA_B] += 1
                elif surface == Surface.GAMMA_T and mesh.region_empty(Region.TOP):
                    coverage[Surface.SIGMA_T] += 1
            for surface, count in coverage.items():
                present = len(
                    mesh.boundary_faces[mesh.boundary_labels == surface]) > 0
                if present and count == 0:
                    errors.append(
                        f"heat: no boundary condition on exterior surface "
                        f"{SURFACE_NAMES[surface]}")
                if count > 1:
                    errors.append(
                        f"heat: surface {SURFACE_NAMES[surface]} is covered by "
                        "more than one condition")
        return errors


@dataclass
class FieldState:
    """Nodal solution triple at one time level.

    ``n`` spans all mesh vertices: active nodes carry the transported
    density, nodes interior to a metal region carry that region's fixed
    electron concentration.
    """

    time: float
    phi: np.ndarray
    n: np.ndarray
    T: np.ndarray

    def validate(self, mesh: Mesh) -> None:
        for name, arr in (("phi", self.phi), ("n", self.n), ("T", self.T)):
            if np.shape(arr) != (mesh.num_vertices,):
                raise ValueError(f"{name} must have one value per mesh vertex")
        if not (self.T > 0.0).all():
            raise ValueError("temperature must be positive everywhere")
        active_nodes = mesh.active_submesh.node_ids
        if (self.n[active_nodes] < 0.0).any():
            raise ValueError("density must be nonnegative on active nodes")

    def copy(self) -> "FieldState":
        return FieldState(self.time, self.phi.copy(), self.n.copy(), self.T.copy())


def _surface_faces_areas(mesh: Mesh, surface: Surface):
    faces = mesh.faces_for(surface)
    return faces, mesh.face_areas(faces)


def _apply_scalar_bcs(system, mesh, table, *, robin_scale=1.0,
                      local_map=None) -> None:
    """Apply one equation's boundary table to an assembled system."""
    dirichlet_nodes, dirichlet_values = [], []
    for surface, bc in table.items():
        faces, areas = _surface_faces_areas(mesh, surface)
        if len(faces) == 0:
            continue
        if local_map is not None:
            faces = local_map[faces]
            if (faces < 0).any():
                raise BoundarySpecError(
                    [f"surface {SURFACE_NAMES[surface]} touches nodes outside "
                     "the active region"])
        if isinstance(bc, Dirichlet):
            dirichlet_nodes.append(np.unique(faces))
            dirichlet_values.append(bc.value)
        elif isinstance(bc, Neumann):
            if bc.inflow != 0.0:
                fem.apply_neumann(system, faces, areas, bc.inflow)
        elif isinstance(bc, Robin):
            fem.apply_robin(system, faces, areas, robin_scale * bc.coefficient,
                            bc.reference)
        else:
            raise TypeError(f"unknown boundary condition {bc!r}")
    for nodes, value in zip(dirichlet_nodes, dirichlet_values):
        fem.apply_dirichlet(system, nodes, value)


# -- generalized potential equation ------------------------------------------------

def assemble_poisson(mesh: Mesh, coeffs: ElementCoefficients, bc: BoundarySpec,
                     state: FieldState) -> fem.SparseSystem:
    """Generalized potential equation at the current iterate.

    Diffusion with the piecewise coefficient (conductivity in metals,
    permittivity in the active layer); the active space charge
    q*(z*n + doping) enters as a lumped load and the metal thermopower term
    sigma*alpha*grad(T) is integrated by parts onto the load vector.
    Contact potentials are pinned, the lateral wall is natural.
    """
    errors = bc.validate(mesh, equations=("poisson",))
    if errors:
        raise BoundarySpecError(errors)
    g = mesh.geometry
    system = fem.SparseSystem(mesh.num_vertices)

    local = fem.local_diffusion(g.grads, g.volumes, coeffs.potential_coeff)
    fem.scatter_element_matrices(system, mesh.tets, local)

    active = coeffs.is_active
    if active.any():
        tets_a = mesh.tets[active]
        charge = (_Q * coeffs.charge_number * state.n[tets_a]
                  + _Q * coeffs.doping[active, None])
        system.add_rhs(tets_a, charge * (g.volumes[active] / 4.0)[:, None])

    thermo = coeffs.thermo_coeff
    metal = thermo != 0.0
    if metal.any():
        local_t = fem.local_diffusion(g.grads[metal], g.volumes[metal],
                                      thermo[metal])
        loads = -np.einsum("tij,tj->ti", local_t, state.T[mesh.tets[metal]])
        system.add_rhs(mesh.tets[metal], loads)

    _apply_scalar_bcs(system, mesh, bc.poisson)
    return system


# -- electron continuity equation ---------------------------------------------------

def continuity_edge_data(mesh: Mesh, coeffs: ElementCoefficients, phi, temperature,
                         density):
    """Edge Peclet numbers and diffusivities of the drift-diffusion flux.

    Returned arrays are (n_active_tets, 6), ordered like the active submesh
    and its local edges. For each edge the drift potential drop combines
    the electric potential, the thermopower contribution and the
    chemical-entropy term ln(n/N_ref) evaluated at the clamped edge-average
    density; dividing by the edge thermal voltage k_B*T_edge/q gives the
    dimensionless Peclet number, oriented from the lower to the higher
    local vertex. The edge diffusivity is the Einstein value at the
    edge-average temperature.
    """
    sub = mesh.active_submesh
    tets = mesh.tets[sub.tet_ids]
    i = tets[:, LOCAL_EDGES[:, 0]]
    j = tets[:, LOCAL_EDGES[:, 1]]

    z = coeffs.charge_number
    alpha = coeffs.alpha[sub.tet_ids][:, None]
    mu = coeffs.mu_el[sub.tet_ids][:, None]

    d_phi = phi[j] - phi[i]
    d_t = temperature[j] - temperature[i]
    t_edge = 0.5 * (temperature[i] + temperature[j])
    n_edge = np.maximum(0.5 * (density[i] + density[j]), N_FLOOR)

    v_thermal = _KB * t_edge / _Q
    peclets = (-z * (d_phi + alpha * d_t) / v_thermal
               - np.log(n_edge / coeffs.n_ref) * d_t / t_edge)
    diffusivities = _KB * t_edge * mu / (_Q * abs(z))
    return peclets, diffusivities


def assemble_continuity(mesh: Mesh, coeffs: ElementCoefficients, bc: BoundarySpec,
                        state: FieldState, phi_new, dt: float,
                        prev_density=None, edge_data=None):
    """Electron continuity step on the active submesh.

    Exponential-fitting advection-diffusion driven by the current iterate's
    drift field, plus the backward Euler reaction q/dt against the previous
    time level's density (``prev_density`` defaults to the iterate itself,
    which is exact on the first sweep; pass the time-level density for the
    later sweeps). ``dt = math.inf`` drops the time terms and yields the
    stationary operator. Returns ``(system, submesh)``; the system is
    numbered over active nodes only.
    """
    if not dt > 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    sub = mesh.active_submesh
    g = mesh.geometry
    ids = sub.tet_ids
    system = fem.SparseSystem(sub.num_nodes)

    if edge_data is None:
        edge_data = continuity_edge_data(mesh, coeffs, phi_new, state.T, state.n)
    peclets, diffusivities = edge_data

    local = fem.local_sg_advection_diffusion(
        g.tet_edge_weights[ids], peclets, _Q * diffusivities)
    fem.scatter_element_matrices(system, sub.tets_local, local)

    if math.isfinite(dt):
        n_prev = state.n if prev_density is None else prev_density
        mass = fem.local_lumped_mass(g.volumes[ids], _Q / dt)
        fem.scatter_lumped(system, sub.tets_local, mass,
                           rhs_values=mass * n_prev[mesh.tets[ids]])

    _apply_scalar_bcs(system, mesh, bc.continuity, robin_scale=_Q,
                      local_map=sub.global_to_local)
    return system, sub


def element_currents(mesh: Mesh, coeffs: ElementCoefficients, density,
                     edge_data) -> np.ndarray:
    """Charge current density per active element from the fitted edge fluxes.

    Each edge of an element carries the two-point exponential-fitting flux
    of the continuity operator evaluated at the given density; the constant
    element vector best matching the six directional fluxes (least squares)
    is the reconstructed current. Returned in the active-submesh element
    order, in A/m^2, oriented as the electron charge current.
    """
    sub = mesh.active_submesh
    tets = mesh.tets[sub.tet_ids]
    peclets, diffusivities = edge_data

    x = mesh.vertices
    evec = x[tets[:, LOCAL_EDGES[:, 1]]] - x[tets[:, LOCAL_EDGES[:, 0]]]
    lengths = np.linalg.norm(evec, axis=2)
    tangents = evec / lengths[:, :, None]

    n_i = density[tets[:, LOCAL_EDGES[:, 0]]]
    n_j = density[tets[:, LOCAL_EDGES[:, 1]]]
    flux = fem.sg_edge_flux(_Q * diffusivities, lengths, peclets, n_i, n_j)

    normal_mat = np.einsum("ted,tec->tdc", tangents, tangents)
    rhs = np.einsum("ted,te->td", tangents, flux)
    transported = np.linalg.solve(normal_mat, rhs[:, :, None])[:, :, 0]
    return coeffs.charge_number * transported


# -- heat flow equation ---------------------------------------------------------------

def thermal_drift_field(mesh: Mesh, coeffs: ElementCoefficients, state: FieldState,
                        phi_new, n_new, edge_data=None) -> np.ndarray:
    """Thermopower-weighted current advecting the temperature, per element.

    Metal elements: alpha * (-sigma * grad(phi + alpha*T)). Active
    elements: alpha times the charge current reconstructed from the fitted
    edge fluxes of the continuity operator at the new density.
    """
    v_t = np.zeros((mesh.num_tets, 3))
    g = mesh.geometry
    metal = ~coeffs.is_active
    if metal.any():
        verts = mesh.tets[metal]
        f = phi_new[verts] + coeffs.alpha[metal, None] * state.T[verts]
        grad_f = np.einsum("tid,ti->td", g.grads[metal], f)
        v_t[metal] = -(coeffs.sigma[metal] * coeffs.alpha[metal])[:, None] * grad_f
    sub = mesh.active_submesh
    if len(sub.tet_ids):
        if edge_data is None:
            edge_data = continuity_edge_data(mesh, coeffs, phi_new, state.T, state.n)
        currents = element_currents(mesh, coeffs, n_new, edge_data)
        v_t[sub.tet_ids] = coeffs.alpha[sub.tet_ids][:, None] * currents
    return v_t


def electrochemical_potential(mesh: Mesh, coeffs: ElementCoefficients,
                              state: FieldState, phi_new, n_new) -> np.ndarray:
    """Element-mean electrochemical potential (region-wise branch), [V]."""
    verts = mesh.tets
    values = phi_new[verts] - coeffs.mu_c_over_f[:, None]
    active = coeffs.is_active
    if active.any():
        va = mesh.tets[active]
        log_term = (_KB * state.T[va] / _Q) * np.log(
            np.maximum(n_new[va], N_FLOOR) / coeffs.n_ref)
        values[active] = phi_new[va] - log_term
    return values.mean(axis=1)


def assemble_heat(mesh: Mesh, coeffs: ElementCoefficients, bc: BoundarySpec,
                  state: FieldState, phi_new, n_new, dt: float,
                  prev_temperature=None, drift_override=None,
                  edge_data=None) -> fem.SparseSystem:
    """Heat flow step on the whole device.

    Exponential-fitting advection-diffusion with the thermopower-weighted
    current as drift and the thermal conductivity as diffusivity, lumped
    rho*c/dt reaction against the previous time level, and the divergence
    of the electrochemical energy flux integrated by parts onto the load
    vector. ``drift_override`` replaces the model drift with a prescribed
    constant vector (used by the analytic validation cases).
    """
    if not dt > 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    g = mesh.geometry
    system = fem.SparseSystem(mesh.num_vertices)

    if drift_override is not None:
        v_t = np.broadcast_to(np.asarray(drift_override, dtype=float),
                              (mesh.num_tets, 3))
    else:
        v_t = thermal_drift_field(mesh, coeffs, state, phi_new, n_new, edge_data)

    evec = (mesh.vertices[mesh.tets[:, LOCAL_EDGES[:, 1]]]
            - mesh.vertices[mesh.tets[:, LOCAL_EDGES[:, 0]]])
    kappa = coeffs.kappa[:, None]
    peclets = np.einsum("ted,td->te", evec, v_t) / kappa
    local = fem.local_sg_advection_diffusion(g.tet_edge_weights, peclets,
                                             np.broadcast_to(kappa, peclets.shape))
    fem.scatter_element_matrices(system, mesh.tets, local)

    if math.isfinite(dt):
        t_prev = state.T if prev_temperature is None else prev_temperature
        mass = fem.local_lumped_mass(g.volumes, coeffs.rho_c / dt)
        fem.scatter_lumped(system, mesh.tets, mass,
                           rhs_values=mass * t_prev[mesh.tets])

    phi_ec = electrochemical_potential(mesh, coeffs, state, phi_new, n_new)
    loads = (g.volumes * phi_ec)[:, None] * np.einsum("tid,td->ti", g.grads, v_t)
    system.add_rhs(mesh.tets, loads)

    _apply_scalar_bcs(system, mesh, bc.heat)
    return system
