"""Physical constants shared by every module.

F, R and N_A carry the rounded values used throughout the electrochemistry
literature this package targets; the rest are CODATA 2018.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    F: float = 96485.3365  # C/mol
    R: float = 8.314  # J/(mol K)
    N_A: float = 6.02e23  # 1/mol
    k: float = 1.380649e-23  # J/K
    e: float = 1.602176634e-19  # C
    hbar: float = 1.054571817e-34  # J s
    eps0: float = 8.8541878128e-12  # F/m
    m0: float = 9.1093837015e-31  # kg

    def thermal_voltage(self, T: float) -> float:
        """kT/e in volts (equivalently kT in eV)."""
        return self.k * T / self.e


CONST = PhysicalConstants()

# Unit conversions
HZ_CM_PER_V = 1e-2  # 1 Hz cm/V in Hz m/V
MHZ_PER_GAUSS = 1e6 / 1e-4  # 1 MHz/G in Hz/T
