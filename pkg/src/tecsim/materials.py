"""Material data and the constitutive relations derived from it.

Two region kinds exist:

* metal-like conductors (``MetalMaterial``): fixed electron concentration,
  ohmic conduction ``sigma``, constant chemical energy ``mu_c``;
* the transport layer (``ActiveMaterial``): dielectric ``epsilon``,
  electron mobility ``mu_el``, optional fixed doping.

``MaterialTable`` combines per-region materials (the active layer may be
subdivided into z-stacked zones with different coefficients) and binds them
to a mesh as per-element coefficient arrays for assembly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import CONSTANTS
from .mesh import Mesh, Region

# Densities are clamped at this floor (1/m^3) before any logarithm is taken;
# it sits far below every physically meaningful concentration.
N_FLOOR = 1.0


class MaterialError(ValueError):
    """Invalid material definition or use."""


def _require_positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise MaterialError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class MetalMaterial:
    """Coefficients of a metal-like inactive region.

    ``mu_c`` is the constant chemical energy [J/mol]; ``n_bar`` the fixed
    electron concentration [1/m^3] (stored, not transported).
    """

    sigma: float          # electrical conductivity [S/m]
    alpha: float          # thermopower [V/K]
    kappa: float          # thermal conductivity [W/(m K)]
    rho: float            # mass density [kg/m^3]
    c: float              # specific heat [J/(kg K)]
    mu_c: float = 0.0     # chemical energy [J/mol]
    n_bar: float = 1.0    # electron concentration [1/m^3]

    kind = "metal"

    def __post_init__(self) -> None:
        for name in ("sigma", "kappa", "rho", "c", "n_bar"):
            _require_positive(name, getattr(self, name))
        if self.alpha < 0.0:
            raise MaterialError("alpha must be nonnegative")


@dataclass(frozen=True)
class ActiveMaterial:
    """Coefficients of the active (transport) layer or of one of its zones."""

    epsilon: float        # dielectric permittivity [F/m]
    alpha: float          # thermopower [V/K]
    kappa: float          # thermal conductivity [W/(m K)]
    rho: float            # mass density [kg/m^3]
    c: float              # specific heat [J/(kg K)]
    mu_el: float          # electron mobility [m^2/(V s)]
    doping: float = 0.0   # fixed ionized doping [1/m^3]

    kind = "active"

    def __post_init__(self) -> None:
        for name in ("epsilon", "kappa", "rho", "c", "mu_el"):
            _require_positive(name, getattr(self, name))
        if self.alpha < 0.0:
            raise MaterialError("alpha must be nonnegative")
        if self.doping < 0.0:
            raise MaterialError("doping must be nonnegative")


def einstein_diffusivity(temperature, mobility, charge_number: int = -1):
    """Diffusivity D = k_B T mu / (q |z|) from mobility and temperature.

    Accepts scalars or arrays; temperature must be positive and the charge
    number nonzero.
    """
    if charge_number == 0:
        raise MaterialError("charge number must be nonzero")
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature <= 0.0):
        raise MaterialError("temperature must be positive")
    out = CONSTANTS.k_b * temperature * np.asarray(mobility, dtype=float)
    out = out / (CONSTANTS.q * abs(charge_number))
    return out if out.ndim else float(out)


def chemical_potential(density, temperature, charge_number: int,
                       reference_density: float, floor: float = N_FLOOR):
    """Chemical potential k_B T / (z q) * ln(n / N_ref) in volts.

    The density is clamped at ``floor`` before the logarithm, so arbitrarily
    small (including zero) densities are accepted.
    """
    if charge_number == 0:
        raise MaterialError("charge number must be nonzero")
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature <= 0.0):
        raise MaterialError("temperature must be positive")
    _require_positive("reference_density", reference_density)
    n = np.maximum(np.asarray(density, dtype=float), floor)
    out = (CONSTANTS.k_b * temperature / (charge_number * CONSTANTS.q)
           * np.log(n / reference_density))
    return out if out.ndim else float(out)


def psi_n(phi, density, temperature, material, n_ref: float):
    """Electro-thermo-chemical potential of electrons, per region kind.

    Metal regions:  phi - mu_c/F + alpha*T.
    Active regions: phi - (k_B T / q) ln(n/N_ref) + alpha*T
    (the z = -1 form of the general chemical-potential term).
    """
    phi = np.asarray(phi, dtype=float)
    temperature = np.asarray(temperature, dtype=float)
    if material.kind == "metal":
        out = phi - material.mu_c / CONSTANTS.faraday + material.alpha * temperature
    else:
        out = (phi
               + chemical_potential(density, temperature, -1, n_ref)
               + material.alpha * temperature)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ElementCoefficients:
    """Per-element material coefficients bound to one mesh.

    Arrays are indexed by tetrahedron. ``potential_coeff`` is sigma on metal
    elements and epsilon on active ones (the piecewise coefficient of the
    generalized potential equation); ``thermo_coeff`` is sigma*alpha on metal
    elements and zero on active ones.
    """

    is_active: np.ndarray         # bool (nt,)
    sigma: np.ndarray             # [S/m], zero on active elements
    epsilon: np.ndarray           # [F/m], zero on metal elements
    alpha: np.ndarray             # [V/K]
    kappa: np.ndarray             # [W/(m K)]
    rho_c: np.ndarray             # rho*c [J/(m^3 K)]
    mu_el: np.ndarray             # [m^2/(V s)], zero on metal elements
    mu_c_over_f: np.ndarray       # mu_c / F [V], zero on active elements
    doping: np.ndarray            # [1/m^3], zero on metal elements
    n_ref: float
    charge_number: int

    @property
    def potential_coeff(self) -> np.ndarray:
        return np.where(self.is_active, self.epsilon, self.sigma)

    @property
    def thermo_coeff(self) -> np.ndarray:
        return np.where(self.is_active, 0.0, self.sigma * self.alpha)


@dataclass(frozen=True)
class MaterialTable:
    """Materials for the whole device.

    ``active`` is a single ``ActiveMaterial`` or a z-stack of zones; for a
    stack, ``active_breaks`` gives the interior z planes (meters) separating
    the zones, ordered bottom to top (len(active) - 1 values).
    """

    active: tuple[ActiveMaterial, ...]
    bottom: MetalMaterial | None = None
    top: MetalMaterial | None = None
    active_breaks: tuple[float, ...] = ()
    n_ref: float = 1.0
    charge_number: int = -1
    metal_n: dict = field(default_factory=dict)  # filled in __post_init__

    def __post_init__(self):
        active = self.active
        if isinstance(active, ActiveMaterial):
            active = (active,)
        object.__setattr__(self, "active", tuple(active))
        object.__setattr__(self, "active_breaks", tuple(self.active_breaks))
        if not self.active:
            raise MaterialError("at least one active material is required")
        if len(self.active_breaks) != len(self.active) - 1:
            raise MaterialError(
                f"{len(self.active)} active zones need "
                f"{len(self.active) - 1} breaks, got {len(self.active_breaks)}")
        if any(b2 <= b1 for b1, b2 in zip(self.active_breaks, self.active_breaks[1:])):
            raise MaterialError("active zone breaks must be strictly increasing")
        _require_positive("n_ref", self.n_ref)
        if self.charge_number == 0:
            raise MaterialError("charge number must be nonzero")
        object.__setattr__(self, "metal_n", {
            Region.BOTTOM: self.bottom.n_bar if self.bottom else 0.0,
            Region.TOP: self.top.n_bar if self.top else 0.0,
        })

    def region_material(self, region: Region):
        """The material of a region; for a zoned active layer, its first zone."""
        if region == Region.BOTTOM:
            if self.bottom is None:
                raise MaterialError("no bottom material defined")
            return self.bottom
        if region == Region.TOP:
            if self.top is None:
                raise MaterialError("no top material defined")
            return self.top
        return self.active[0]

    def bind(self, mesh: Mesh) -> ElementCoefficients:
        """Expand the table into per-element coefficient arrays for ``mesh``."""
        nt = mesh.num_tets
        regions = mesh.tet_regions
        is_active = regions == Region.ACTIVE
        if (regions == Region.BOTTOM).any() and self.bottom is None:
            raise MaterialError("mesh has a bottom region but no bottom material")
        if (regions == Region.TOP).any() and self.top is None:
            raise MaterialError("mesh has a top region but no top material")

        zone = np.zeros(nt, dtype=int)
        if self.active_breaks:
            zc = mesh.tet_centroids[:, 2]
            zone = np.searchsorted(np.asarray(self.active_breaks), zc)

        def gather(attr, kinds):
            out = np.zeros(nt)
            for region, mat in ((Region.BOTTOM, self.bottom), (Region.TOP, self.top)):
                if mat is not None and "metal" in kinds:
                    out[regions == region] = getattr(mat, attr)
            if "active" in kinds:
                vals = np.array([getattr(m, attr) for m in self.active])
                out[is_active] = vals[zone[is_active]]
            return out

        return ElementCoefficients(
            is_active=is_active,
            sigma=gather("sigma", ("metal",)),
            epsilon=gather("epsilon", ("active",)),
            alpha=gather("alpha", ("metal", "active")),
            kappa=gather("kappa", ("metal", "active")),
            rho_c=gather("rho", ("metal", "active")) * gather("c", ("metal", "active")),
            mu_el=gather("mu_el", ("active",)),
            mu_c_over_f=gather("mu_c", ("metal",)) / CONSTANTS.faraday,
            doping=gather("doping", ("active",)),
            n_ref=self.n_ref,
            charge_number=self.charge_number,
        )
