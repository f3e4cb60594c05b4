"""Gouy-Chapman electrostatics of a symmetric z:z electrolyte and the
statistics of electric-field fluctuations at the solid surface.

Coordinates: z = 0 is the solid/solution interface, z = Delta is the bulk
reference plane deep in the solution. ``V0 = phi(0) - phi(Delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .constants import CONST
from .errors import ScreeningRegimeError
from .numerics import adaptive_quad

KAPPA_DELTA_MIN = 10.0


@dataclass(frozen=True)
class ElectrolyteParams:
    """Symmetric electrolyte in a slab cell.

    Defaults describe a CuSO4-like 2:2 salt at 1 mol/m^3 in a 1 mm x 4 mm^2
    cell with the bulk held at 1.5 V.
    """

    c_b: float = 1.0  # mol/m^3 per species
    z_s: int = 2
    D_plus: float = 2.3e-9  # m^2/s
    D_minus: float = 2.3e-9
    eps_e: float = 80.0 * CONST.eps0  # F/m
    T: float = 298.0
    Delta: float = 1e-3  # m
    A: float = 4e-6  # m^2
    phi_be: float = 1.5  # V

    def __post_init__(self):
        checks = {
            "c_b": self.c_b > 0,
            "z_s": int(self.z_s) == self.z_s and self.z_s >= 1,
            "D_plus": self.D_plus > 0,
            "D_minus": self.D_minus > 0,
            "eps_e": self.eps_e > 0,
            "T": self.T > 0,
            "Delta": self.Delta > 0,
            "A": self.A > 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid electrolyte parameters: {', '.join(bad)}")

    @property
    def thermal_voltage(self) -> float:
        """RT/F in volts."""
        return CONST.R * self.T / CONST.F

    def with_cb(self, c_b: float) -> "ElectrolyteParams":
        return replace(self, c_b=c_b)


def debye_kappa(p: ElectrolyteParams) -> float:
    """Inverse screening length kappa = sqrt(2 z^2 F^2 c_b / (R T eps_e)) in 1/m."""
    return math.sqrt(2.0 * p.z_s**2 * CONST.F**2 * p.c_b / (CONST.R * p.T * p.eps_e))


def _check_regime(p: ElectrolyteParams) -> float:
    kappa = debye_kappa(p)
    if kappa * p.Delta <= KAPPA_DELTA_MIN:
        raise ScreeningRegimeError(
            f"kappa*Delta = {kappa * p.Delta:.3g} <= {KAPPA_DELTA_MIN:g}; "
            "the Gouy-Chapman closed form needs a screened bulk"
        )
    return kappa


def _reduced(p: ElectrolyteParams, V: float) -> float:
    """Dimensionless potential z F V / (R T)."""
    return p.z_s * V / p.thermal_voltage


def _gc_reduced(Phi0: float, xi: float) -> float:
    """Reduced Gouy-Chapman potential 4 artanh(tanh(Phi0/4) e^-xi).

    Near x = 1 it is evaluated as 2[log1p(x) - log(1-x)] with ``1 - x``
    assembled from pieces that do not cancel, so large Phi0 stays exact at
    xi = 0; small x goes through atanh directly.
    """
    if Phi0 == 0.0:
        return 0.0
    sign = 1.0 if Phi0 > 0 else -1.0
    a = abs(Phi0)
    q = math.exp(-a / 2.0)
    t = (1.0 - q) / (1.0 + q)  # tanh(a/4)
    one_minus_t = 2.0 * q / (1.0 + q)
    ex = math.exp(-xi)
    x = t * ex
    if x < 0.5:
        return sign * 4.0 * math.atanh(x)
    one_minus_x = -math.expm1(-xi) + one_minus_t * ex
    return sign * 2.0 * (math.log1p(x) - math.log(one_minus_x))


def gouy_chapman_potential(p: ElectrolyteParams, V0: float, z: float) -> float:
    """phi(z) - phi(Delta) in volts for the nonlinear Poisson-Boltzmann slab."""
    kappa = _check_regime(p)
    if not 0.0 <= z <= p.Delta:
        raise ValueError(f"z={z} outside [0, Delta]")
    Phi = _gc_reduced(_reduced(p, V0), kappa * z)
    return Phi * p.thermal_voltage / p.z_s


def gouy_chapman_field(p: ElectrolyteParams, V0: float, z: float) -> float:
    """E(z) = -dphi/dz from the first integral dPhi/dxi = -2 sinh(Phi/2)."""
    kappa = _check_regime(p)
    if not 0.0 <= z <= p.Delta:
        raise ValueError(f"z={z} outside [0, Delta]")
    Phi = _gc_reduced(_reduced(p, V0), kappa * z)
    return 2.0 * kappa * p.thermal_voltage / p.z_s * math.sinh(Phi / 2.0)


def _sinh_ratio(kappa: float, Delta: float, z: float) -> float:
    """sinh(kappa (Delta - z)) / sinh(kappa Delta), overflow-free."""
    if kappa == 0.0:
        return (Delta - z) / Delta
    return math.exp(-kappa * z) * math.expm1(-2 * kappa * (Delta - z)) / math.expm1(-2 * kappa * Delta)


def linearized_potential(p: ElectrolyteParams, V0: float, z: float) -> float:
    """Debye-Hueckel slab solution V0 sinh(kappa(Delta-z))/sinh(kappa Delta)."""
    return V0 * _sinh_ratio(debye_kappa(p), p.Delta, z)


def linearized_field(p: ElectrolyteParams, V0: float, z: float) -> float:
    """E(z) = kappa V0 cosh(kappa(Delta-z))/sinh(kappa Delta).

    Tends to the parallel-plate value V0/Delta as kappa -> 0.
    """
    kappa = debye_kappa(p)
    x = kappa * p.Delta
    if x < 1e-4:
        # series of x coth-like ratio; keeps the kappa -> 0 limit exact
        u = kappa * (p.Delta - z)
        num = 1.0 + u * u / 2.0
        den = 1.0 + x * x / 6.0
        return V0 / p.Delta * num / den
    return kappa * V0 * math.exp(-kappa * z) * (1.0 + math.exp(-2 * kappa * (p.Delta - z))) / (
        -math.expm1(-2 * x)
    )


def concentration_profile(p: ElectrolyteParams, V0: float, z: float, species: str) -> float:
    """Boltzmann concentration c_b exp(-/+ z F (phi(z)-phi(Delta))/(R T)) in mol/m^3."""
    sign = _species_sign(species)
    Phi = _reduced(p, gouy_chapman_potential(p, V0, z))
    return p.c_b * math.exp(-sign * Phi)


def _species_sign(species: str) -> int:
    if species in ("+", "plus", "cation"):
        return 1
    if species in ("-", "minus", "anion"):
        return -1
    raise ValueError(f"species must be '+' or '-', got {species!r}")


def interface_field(p: ElectrolyteParams, V0: float) -> float:
    """Equilibrium field at z = 0+ in V/m: (2 kappa R T/(z F)) sinh(z F V0/(2 R T))."""
    kappa = _check_regime(p)
    return 2.0 * kappa * p.thermal_voltage / p.z_s * math.sinh(_reduced(p, V0) / 2.0)


def invert_interface_field(p: ElectrolyteParams, E: float) -> float:
    """Surface potential drop V0 that produces interface field ``E``."""
    kappa = debye_kappa(p)
    scale = 2.0 * kappa * p.thermal_voltage / p.z_s
    return 2.0 * p.thermal_voltage / p.z_s * math.asinh(E / scale)


def _prefactor(p: ElectrolyteParams) -> float:
    return CONST.F**2 / (CONST.N_A * p.A * p.eps_e**2)


def _braces(Delta: float, D: float, t: float) -> float:
    """Erf(Delta/s) - (s/(Delta sqrt(pi)))(1 - exp(-Delta^2/s^2)), s = sqrt(4 D t)."""
    s = math.sqrt(4.0 * D * t)
    if s == 0.0:
        return 1.0
    u = Delta / s
    return math.erf(u) + (s / (Delta * math.sqrt(math.pi))) * math.expm1(-u * u)


def field_correlator_simplified(p: ElectrolyteParams, t: float) -> float:
    """<dE(0,t) dE(0,0)> in (V/m)^2 for flat equilibrium concentrations.

    Sums both ionic species, each with its own diffusion constant.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    total = sum(p.z_s**2 * _braces(p.Delta, D, t) for D in (p.D_plus, p.D_minus))
    return _prefactor(p) * p.Delta * p.c_b * total


def field_correlator_full(p: ElectrolyteParams, V0: float, t: float, *, rtol: float = 1e-8) -> float:
    """Field correlator with the Boltzmann-distributed equilibrium profile.

    Integrates c_s^eq(v) times the diffusion-kernel weight over [0, Delta]
    for each species. Raises QuadratureError below ``rtol``.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    kappa = _check_regime(p)
    Phi0 = _reduced(p, V0)
    total = 0.0
    for sign, D in ((1, p.D_plus), (-1, p.D_minus)):
        s = math.sqrt(4.0 * D * t)

        def integrand(v, sign=sign, s=s):
            w = 0.5 * (math.erf((p.Delta - v) / s) + math.erf(v / s))
            if w <= 0.0:
                return 0.0
            return math.exp(-sign * _gc_reduced(Phi0, kappa * v) + math.log(w))

        pts = [k / kappa for k in (1, 5, 20, 60)] + [s, 5 * s, p.Delta - 5 * s, p.Delta - s]
        total += p.z_s**2 * p.c_b * adaptive_quad(integrand, 0.0, p.Delta, rtol=rtol,
                                                  atol=1e-30, points=pts, limit=1000)
    return _prefactor(p) * total


def white_noise_variance(p: ElectrolyteParams, species_factor: int = 2) -> float:
    """Time-independent plateau F^2 z^2 Delta c_b / (N_A A eps_e^2) x species_factor.

    ``species_factor=2`` sums both species as in the full correlator at
    t -> 0; ``species_factor=1`` keeps a single z^2 term.
    """
    if species_factor not in (1, 2):
        raise ValueError("species_factor must be 1 or 2")
    return species_factor * _prefactor(p) * p.z_s**2 * p.Delta * p.c_b
