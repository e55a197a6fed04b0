"""tecsim: 3D thermo-electrochemical device transport on tetrahedral meshes.

Coupled potential / electron-density / temperature simulation of layered
semiconductor devices, discretized with an exponentially fitted P1 finite
element method that preserves nonnegative densities and temperatures, and
advanced in time by backward Euler around a decoupling fixed-point loop.
"""

from .constants import CONSTANTS, PhysicalConstants
from .equations import (BoundarySpec, Dirichlet, FieldState, Neumann, Robin,
                        assemble_continuity, assemble_heat, assemble_poisson)
from .fem import (SolverError, SparseSystem, bernoulli, is_m_matrix,
                  solve_linear)
from .materials import (ActiveMaterial, MaterialTable, MetalMaterial, N_FLOOR,
                        chemical_potential, einstein_diffusivity, psi_n)
from .mesh import (EdgeGeometry, Mesh, MeshError, Region, Surface,
                   build_box_mesh, compute_edge_geometry, extract_line_cut,
                   read_mesh_file, write_mesh_file)
from .solver import (FrozenFields, GummelError, GummelSettings, TimeGrid,
                     check_convergence, gummel_step, run_transient)
from .validation import (Profile1D, heat_1d_analytic, heat_1d_fd,
                         peclet_local, profile_error, species_1d_steady_oracle)

__version__ = "0.1.0"

__all__ = [
    "ActiveMaterial", "BoundarySpec", "CONSTANTS", "Dirichlet", "EdgeGeometry",
    "FieldState", "FrozenFields", "GummelError", "GummelSettings",
    "MaterialTable", "Mesh", "MeshError", "MetalMaterial", "N_FLOOR",
    "Neumann", "PhysicalConstants", "Profile1D", "Region", "Robin",
    "SolverError", "SparseSystem", "Surface", "TimeGrid",
    "assemble_continuity", "assemble_heat", "assemble_poisson", "bernoulli",
    "build_box_mesh", "check_convergence", "chemical_potential",
    "compute_edge_geometry", "einstein_diffusivity", "extract_line_cut",
    "gummel_step", "heat_1d_analytic", "heat_1d_fd", "is_m_matrix",
    "peclet_local", "profile_error", "psi_n", "read_mesh_file",
    "run_transient", "solve_linear", "species_1d_steady_oracle",
    "write_mesh_file",
]
