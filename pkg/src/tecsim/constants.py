"""Universal physical constants used throughout the simulator.

The values are the rounded ones commonly tabulated for device work; the
whole code base reads them from here so that every formula sees the same
numbers.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Immutable container of universal constants (SI units)."""

    q: float = 1.602e-19      # elementary charge [C]
    k_b: float = 1.38e-23     # Boltzmann constant [J/K]
    r_gas: float = 8.314      # ideal gas constant [J/(K mol)]
    faraday: float = 9.648e4  # Faraday constant [C/mol]


CONSTANTS = PhysicalConstants()
