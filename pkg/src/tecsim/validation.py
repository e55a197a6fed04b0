"""Independent 1D reference solutions for validating the 3D solver.

Everything here is deliberately built on plain finite differences and
quadrature, sharing no code with the finite element kernel, so agreement
between a 3D centerline cut and these oracles is evidence rather than a
tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq
from scipy.special import logsumexp

from .constants import CONSTANTS

_Q = CONSTANTS.q
_KB = CONSTANTS.k_b


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Profile1D:
    """Samples of a field along a line: strictly increasing coordinates."""

    coordinates: np.ndarray
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if coords.shape != values.shape or coords.ndim != 1:
            raise ValidationError("coordinates and values must be equal-length 1D")
        if len(coords) > 1 and not (np.diff(coords) > 0.0).all():
            raise ValidationError("coordinates must be strictly increasing")
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.coordinates)


def peclet_local(h: float, alpha: float, n_e: float, mu_el: float, e0: float,
                 kappa: float) -> float:
    """Local Peclet number q*h*alpha*N_e*mu*E0 / (2*kappa) of the heat flow.

    Measures convective versus diffusive heat transport over one mesh edge;
    values above ~1 destabilize unfitted discretizations.
    """
    if not kappa > 0.0:
        raise ValidationError(f"kappa must be positive, got {kappa}")
    return _Q * h * alpha * n_e * mu_el * e0 / (2.0 * kappa)


class HeatProfile1D:
    """Closed-form steady solution of (a*T - kappa*T')' = 0 with Robin ends.

    For a nonzero convective coefficient the solution is
    T(z) = C1 + C2 * exp(a z / kappa); for a = 0 it degenerates to a
    straight line. The Robin data prescribe flux(0)*(-1) = gamma*(T - T_b)
    and flux(L) = gamma*(T - T_t) with outward normals.
    """

    def __init__(self, a: float, kappa: float, length: float, robin):
        gamma, t_bottom, t_top = (float(v) for v in robin)
        if not (kappa > 0.0 and length > 0.0):
            raise ValidationError("kappa and length must be positive")
        if gamma < 0.0:
            raise ValidationError("Robin coefficient must be nonnegative")
        self.a, self.kappa, self.length = float(a), float(kappa), float(length)
        self.exponential = a != 0.0
        if self.exponential:
            beta = a / kappa
            ebl = math.exp(beta * length)
            matrix = np.array([[a + gamma, gamma],
                               [a - gamma, -gamma * ebl]])
            rhs = np.array([gamma * t_bottom, -gamma * t_top])
            self.beta = beta
        else:
            matrix = np.array([[gamma, -kappa],
                               [gamma, gamma * length + kappa]])
            rhs = np.array([gamma * t_bottom, gamma * t_top])
            self.beta = 0.0
        row_scale = np.abs(matrix).max(axis=1)
        if (row_scale == 0.0).any() or abs(np.linalg.det(matrix / row_scale[:, None])) < 1e-12:
            raise ValidationError("singular Robin system: the end conditions "
                                  "do not determine a unique profile")
        self.c1, self.c2 = np.linalg.solve(matrix / row_scale[:, None],
                                           rhs / row_scale)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.exponential:
            return self.c1 + self.c2 * np.exp(self.beta * z)
        return self.c1 + self.c2 * z

    def sample(self, num: int = 201) -> Profile1D:
        z = np.linspace(0.0, self.length, num)
        return Profile1D(z, self(z), "K")


def heat_1d_analytic(a: float, kappa: float, length: float, robin) -> HeatProfile1D:
    """Analytic steady profile of the 1D convective heat problem.

    ``a`` is the convective coefficient (thermopower-weighted current per
    kelvin, W/(m^2 K)); ``robin = (gamma, T_bottom, T_top)`` holds the end
    exchange data. The companion ``heat_1d_fd`` cross-checks the constants.
    """
    return HeatProfile1D(a, kappa, length, robin)


def heat_1d_fd(a: float, kappa: float, length: float, robin,
               intervals: int = 40_000) -> Profile1D:
    """Brute-force finite difference solve of the same 1D heat problem.

    Conservative central differences on a uniform node grid; the Robin ends
    are closed by eliminating ghost nodes against the centered boundary
    flux, keeping second-order accuracy. Completely independent of the
    finite element kernel.
    """
    gamma, t_bottom, t_top = (float(v) for v in robin)
    if intervals < 4:
        raise ValidationError("need at least 4 intervals")
    h = length / intervals
    n = intervals + 1
    z = np.linspace(0.0, length, n)

    main = np.zeros(n)
    lower = np.zeros(n - 1)
    upper = np.zeros(n - 1)
    rhs = np.zeros(n)

    # interior: flux difference J_{i+1/2} - J_{i-1/2} = 0 with
    # J_{i+1/2} = a (T_i + T_{i+1})/2 - kappa (T_{i+1} - T_i)/h
    main[1:-1] = 2.0 * kappa / h
    lower[:] = -a / 2.0 - kappa / h
    upper[:] = a / 2.0 - kappa / h

    # ghost elimination at z=0: centered flux a T_0 - k (T_1 - T_ghost)/(2h)
    # equals -gamma (T_0 - T_b)
    p_bot = a * h / kappa + 2.0
    main[0] = (a + gamma) * p_bot + 2.0 * kappa / h
    upper[0] = -2.0 * kappa / h
    rhs[0] = gamma * t_bottom * p_bot

    # ghost elimination at z=L: centered flux equals gamma (T_N - T_t)
    p_top = a * h / kappa - 2.0
    main[-1] = (a - gamma) * p_top + 2.0 * kappa / h
    lower[-1] = -2.0 * kappa / h
    rhs[-1] = -gamma * t_top * p_top

    matrix = np.zeros((3, n))
    matrix[0, 1:] = upper
    matrix[1, :] = main
    matrix[2, :-1] = lower
    values = solve_banded((1, 1), matrix, rhs)
    return Profile1D(z, values, "K")


def species_1d_steady_oracle(charge_number: int, e_field: float, t_ends,
                             mobility: float, length: float, n_init: float,
                             points: int = 10_001, alpha: float = 0.0,
                             n_ref: float | None = None) -> Profile1D:
    """Zero-flux steady profile of one charged species in a frozen background.

    The species sees a constant axial field ``e_field``, a linear
    temperature ramp between ``t_ends = (T(0), T(L))`` and blocking ends, so
    the stationary state carries no flux and conserves the mass of the
    uniform initial density ``n_init``. Setting the flux to zero turns the
    transport law into a linear first-order equation for ln(N), integrated
    here by composite trapezoid quadrature on a fine grid; the mass then
    selects the one admissible integration constant (found by a bracketed
    root solve on the log of the mass). ``mobility`` only affects transient
    time scales and is accepted for interface symmetry.
    """
    if charge_number == 0:
        raise ValidationError("charge number must be nonzero")
    if points < 10:
        raise ValidationError("need at least 10 integration points")
    del mobility  # drops out of the zero-flux balance
    t0, t1 = (float(v) for v in t_ends)
    if min(t0, t1) <= 0.0:
        raise ValidationError("temperatures must be positive")
    if n_ref is None:
        n_ref = n_init
    z = np.linspace(0.0, length, points)
    temp = t0 + (t1 - t0) * z / length
    dtdz = (t1 - t0) / length

    # zero flux: d(ln N)/dz = q z_c (E - alpha T') / (k_B T) - ln(N/N_ref) T'/T,
    # i.e. (y T)' = q z_c (E - alpha T') / k_B with y = ln(N/N_ref);
    # cumulative trapezoid of the right-hand side gives y up to y(0).
    integrand = np.full_like(z, _Q * charge_number * (e_field - alpha * dtdz) / _KB)
    cumulative = np.concatenate(
        ([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(z))))

    h = z[1] - z[0]
    weights = np.full(points, h)
    weights[0] = weights[-1] = h / 2.0
    log_weights = np.log(weights)

    def log_mass(y0: float) -> float:
        y = (y0 * t0 + cumulative) / temp
        return float(np.log(n_ref) + logsumexp(y + log_weights))

    target = math.log(n_init * length)
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if log_mass(lo) - target < 0.0:
            break
        lo *= 2.0
    for _ in range(200):
        if log_mass(hi) - target > 0.0:
            break
        hi *= 2.0
    y0 = brentq(lambda v: log_mass(v) - target, lo, hi,
                xtol=1e-13, rtol=8.9e-16)
    values = n_ref * np.exp((y0 * t0 + cumulative) / temp)
    return Profile1D(z, values, "1/m^3")


@dataclass(frozen=True)
class ProfileError:
    """Deviations between profiles, relative to the reference magnitude."""

    linf: float
    l2: float


def profile_error(numeric: Profile1D, reference: Profile1D) -> ProfileError:
    """Maximum and root-mean-square relative deviation from a reference.

    The reference is interpolated to the numeric sample points (restricted
    to the overlapping coordinate range) and deviations are normalized by
    the reference's magnitude scale over that range.
    """
    lo = max(numeric.coordinates[0], reference.coordinates[0])
    hi = min(numeric.coordinates[-1], reference.coordinates[-1])
    mask = (numeric.coordinates >= lo) & (numeric.coordinates <= hi)
    if not mask.any():
        raise ValidationError("profiles do not overlap")
    ref = np.interp(numeric.coordinates[mask], reference.coordinates,
                    reference.values)
    scale = float(np.abs(ref).max())
    if scale == 0.0:
        scale = 1.0
    deviation = np.abs(numeric.values[mask] - ref) / scale
    return ProfileError(linf=float(deviation.max()),
                        l2=float(np.sqrt(np.mean(deviation**2))))
