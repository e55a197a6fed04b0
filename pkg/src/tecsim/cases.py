"""Built-in analytic validation cases.

Two families of benchmarks with independent 1D references:

* ``heat_validation``: steady convective heat flow through a 10 nm active
  cube with a prescribed uniform drift (electron gas of fixed density in a
  constant axial field), Robin-coupled contact reservoirs at 900 K / 300 K,
  compared against the closed-form exponential profile. Three thermal
  conductivities sweep the local Peclet number across the stability
  threshold of unfitted schemes.

* ``species_validation``: a single charged species relaxing to its zero
  flux steady distribution in a frozen linear temperature ramp and
  constant axial field with blocking walls, for charge numbers -1, +1, +2,
  compared against the mass-matched quadrature solution of the zero-flux
  balance.

The same case definitions back the command line ``validate`` subcommand
and the acceptance test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import equations as eq
from . import solver as sv
from . import validation as vd
from .constants import CONSTANTS
from .materials import ActiveMaterial, MaterialTable
from .mesh import Surface, build_box_mesh, extract_line_cut

# shared parameters of the heat benchmark
HEAT_DENSITY = 1.0e26          # electron density [1/m^3]
HEAT_FIELD = 1.158e9           # axial field strength [V/m]
HEAT_MOBILITY = 3.3e-6         # [m^2/(V s)]
HEAT_ALPHA = 1e-4              # thermopower [V/K]
HEAT_GAMMA = 1.17e5            # Robin transfer coefficient
HEAT_T_BOTTOM = 900.0
HEAT_T_TOP = 300.0
HEAT_LENGTH = 1e-8             # device thickness [m]
HEAT_KAPPAS = (0.01, 0.05, 0.1)

# shared parameters of the species benchmark
SPECIES_FIELD = 1e6            # axial field [V/m]
SPECIES_LENGTH = 9e-6
SPECIES_T_BOTTOM = 970.0
SPECIES_T_TOP = 370.0
SPECIES_N0 = 1e28
SPECIES_MOBILITY = 3.3e-6
SPECIES_CHARGES = (-1, 1, 2)


def heat_drift_coefficient() -> float:
    """Convective coefficient q*alpha*N_e*mu*E0 of the heat benchmark."""
    return (CONSTANTS.q * HEAT_ALPHA * HEAT_DENSITY * HEAT_MOBILITY
            * HEAT_FIELD)


@dataclass
class CaseResult:
    name: str
    passed: bool
    lines: list
    numeric: vd.Profile1D | None = None
    reference: vd.Profile1D | None = None


def heat_validation(kappa: float, divisions=(6, 6, 24),
                    gate: float = 0.02) -> CaseResult:
    """Steady 3D heat solve vs. the analytic 1D profile for one kappa."""
    length = HEAT_LENGTH
    mesh = build_box_mesh((length, length, length), divisions)
    table = MaterialTable(
        active=ActiveMaterial(epsilon=8.854e-12, alpha=HEAT_ALPHA, kappa=kappa,
                              rho=3.98e6, c=880.0, mu_el=HEAT_MOBILITY),
        n_ref=HEAT_DENSITY)
    coeffs = table.bind(mesh)
    bc = eq.BoundarySpec(heat={
        Surface.GAMMA_B: eq.Robin(HEAT_GAMMA, HEAT_T_BOTTOM),
        Surface.GAMMA_T: eq.Robin(HEAT_GAMMA, HEAT_T_TOP),
        Surface.SIGMA_LAT: eq.Neumann(0.0)})
    nv = mesh.num_vertices
    state = eq.FieldState(0.0, np.zeros(nv), np.full(nv, HEAT_DENSITY),
                          np.full(nv, 300.0))
    frozen = sv.FrozenFields(potential=True, density=True,
                             heat_drift=(0.0, 0.0, heat_drift_coefficient()))
    result = sv.run_transient(mesh, coeffs, bc, state, sv.TimeGrid.steady(),
                              frozen=frozen)

    coords, values = extract_line_cut(mesh, result.final_state.T, "z",
                                      (length / 2, length / 2),
                                      divisions[2] + 1)
    numeric = vd.Profile1D(coords, values, "K")
    analytic = vd.heat_1d_analytic(heat_drift_coefficient(), kappa, length,
                                   (HEAT_GAMMA, HEAT_T_BOTTOM, HEAT_T_TOP))
    reference = analytic.sample(2001)
    err = vd.profile_error(numeric, reference)
    diffs = np.diff(values)
    monotone = bool((diffs >= 0).all() or (diffs <= 0).all())

    pe = vd.peclet_local(HEAT_LENGTH, HEAT_ALPHA, HEAT_DENSITY, HEAT_MOBILITY,
                         HEAT_FIELD, kappa)
    passed = err.linf <= gate and monotone
    lines = [
        f"local Peclet number: {pe:.3f}",
        f"relative Linf vs analytic profile: {err.linf:.3e} (gate {gate:g})",
        f"relative L2 vs analytic profile: {err.l2:.3e}",
        f"monotone along z: {monotone}",
        f"{'PASS' if passed else 'FAIL'}",
    ]
    return CaseResult(f"heat-kappa-{kappa:g}", passed, lines, numeric, reference)


def species_validation(charge_number: int, divisions=(2, 2, 900),
                       gate: float = 0.02, mass_gate: float = 1e-3,
                       t_final: float = 4e-4) -> CaseResult:
    """Transient relaxation of one species vs. the zero-flux 1D oracle."""
    length = SPECIES_LENGTH
    mesh = build_box_mesh((length / 16, length / 16, length), divisions)
    table = MaterialTable(
        active=ActiveMaterial(epsilon=8.854e-12, alpha=0.0, kappa=1.0,
                              rho=1e3, c=1e3, mu_el=SPECIES_MOBILITY),
        n_ref=SPECIES_N0, charge_number=charge_number)
    coeffs = table.bind(mesh)
    bc = eq.BoundarySpec()  # blocking walls everywhere
    nv = mesh.num_vertices
    z = mesh.vertices[:, 2]
    phi = -SPECIES_FIELD * z
    temp = SPECIES_T_BOTTOM + (SPECIES_T_TOP - SPECIES_T_BOTTOM) * z / length
    state = eq.FieldState(0.0, phi, np.full(nv, SPECIES_N0), temp)
    frozen = sv.FrozenFields(potential=True, temperature=True)
    grid = sv.TimeGrid.geometric(1e-8, 1.5, t_final, dt_max=5e-5)
    result = sv.run_transient(mesh, coeffs, bc, state, grid, frozen=frozen)

    coords, values = extract_line_cut(
        mesh, result.final_state.n, "z", (length / 32, length / 32),
        divisions[2] + 1)
    numeric = vd.Profile1D(coords, values, "1/m^3")
    reference = vd.species_1d_steady_oracle(
        charge_number, SPECIES_FIELD, (SPECIES_T_BOTTOM, SPECIES_T_TOP),
        SPECIES_MOBILITY, length, SPECIES_N0)
    err = vd.profile_error(numeric, reference)

    lumped = mesh.geometry.lumped_volumes
    mass0 = SPECIES_N0 * mesh.total_volume
    drift = abs(float(lumped @ result.final_state.n) - mass0) / mass0
    steady = result.step_changes[-1]

    passed = err.l2 <= gate and drift <= mass_gate
    lines = [
        f"relative L2 vs zero-flux oracle: {err.l2:.3e} (gate {gate:g})",
        f"relative Linf vs zero-flux oracle: {err.linf:.3e}",
        f"total-mass drift: {drift:.3e} (gate {mass_gate:g})",
        f"final per-step relative change: {steady:.3e}",
        f"{'PASS' if passed else 'FAIL'}",
    ]
    sign = "minus" if charge_number < 0 else "plus"
    return CaseResult(f"species-{sign}{abs(charge_number)}", passed, lines,
                      numeric, reference)


def peclet_case() -> CaseResult:
    """The three benchmark Peclet numbers and their expected roundings."""
    expected = {0.01: (3.061, 3.0), 0.05: (0.612, 0.6), 0.1: (0.306, 0.3)}
    lines, passed = [], True
    for kappa in HEAT_KAPPAS:
        value = vd.peclet_local(HEAT_LENGTH, HEAT_ALPHA, HEAT_DENSITY,
                                HEAT_MOBILITY, HEAT_FIELD, kappa)
        digits, rounded = expected[kappa]
        ok = (abs(value - digits) < 5e-4
              and float(f"{value:.1g}") == rounded)
        passed &= ok
        lines.append(f"kappa={kappa:g}: Pe={value:.4f} "
                     f"(expected {digits}, rounds to {rounded:g}) "
                     f"{'ok' if ok else 'MISMATCH'}")
    lines.append("PASS" if passed else "FAIL")
    return CaseResult("peclet", passed, lines)


def available_cases() -> dict:
    """Case name -> zero-argument callable."""
    cases = {"peclet": peclet_case}
    for kappa in HEAT_KAPPAS:
        cases[f"heat-kappa-{kappa:g}"] = (
            lambda k=kappa: heat_validation(k))
    for z in SPECIES_CHARGES:
        sign = "minus" if z < 0 else "plus"
        cases[f"species-{sign}{abs(z)}"] = (
            lambda c=z: species_validation(c))
    return cases
