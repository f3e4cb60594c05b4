"""NV ground-state spin response to electric fields and field noise.

All spin frequencies are in Hz (not rad/s). The lab z axis is the surface
normal; the NV symmetry axis lies in the lab x-z plane at ``orientation``
from the lab z axis (default: the (111) angle, arccos(1/sqrt 3)).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

from .constants import HZ_CM_PER_V, MHZ_PER_GAUSS
from .numerics import EPS, adaptive_quad

NV_111_ANGLE = math.acos(1.0 / math.sqrt(3.0))
WEAK_FIELD_RATIO = 0.1

Correlator = Union[Callable[[float], float], float]


@dataclass(frozen=True)
class NVParams:
    D_zfs: float = 2.87e9  # Hz
    gamma_e: float = 2.8 * MHZ_PER_GAUSS  # Hz/T
    d_par: float = 0.35 * HZ_CM_PER_V  # Hz m/V
    d_perp: float = 17.0 * HZ_CM_PER_V
    d_perp_prime: float = 17.0 * HZ_CM_PER_V  # unmeasured; same order as d_perp
    orientation: float = NV_111_ANGLE  # rad, NV axis from lab z in the x-z plane
    B_z: float = 0.0  # T
    phi_B: float = 0.0  # rad

    def __post_init__(self):
        if not self.D_zfs > 0:
            raise ValueError("D_zfs must be positive")
        if not self.d_perp > 0:
            raise ValueError("d_perp must be positive")


@dataclass(frozen=True)
class SpinLevels:
    nu_plus: float
    nu_minus: float
    theta: float
    phi_E: float
    xi_perp: float
    beta_z: float
    strong_field: bool = False  # |gamma_e B| / D >= 0.1: transverse-B neglect doubtful


@dataclass(frozen=True)
class ReadoutParams:
    alpha: float = 0.03  # mean photons per shot, m_s = 0
    beta_counts: float = 0.02  # m_s = 1

    def __post_init__(self):
        if not self.alpha > self.beta_counts > 0:
            raise ValueError("need alpha > beta_counts > 0")

    @classmethod
    def from_alpha(cls, alpha: float) -> "ReadoutParams":
        """Standard contrast alpha = 3 beta / 2."""
        return cls(alpha=alpha, beta_counts=2.0 * alpha / 3.0)


def lab_to_nv_field(E_z_lab: float, orientation: float = NV_111_ANGLE) -> tuple[float, float, float]:
    """Project a lab-frame normal field onto the NV frame: (E_x, E_y, E_z)."""
    return math.sin(orientation) * E_z_lab, 0.0, math.cos(orientation) * E_z_lab


def spin_levels(nv: NVParams, E_z_lab: float, B_z: float | None = None) -> SpinLevels:
    """Transition frequencies nu_+/- = D +/- sqrt(xi_perp^2 + beta_z^2).

    The axial Stark term and the Delta m_s = 1 electric term are dropped.
    """
    if B_z is None:
        B_z = nv.B_z
    Ex, Ey, _ = lab_to_nv_field(E_z_lab, nv.orientation)
    xi = nv.d_perp * math.hypot(Ex, Ey)
    beta = nv.gamma_e * B_z
    strong = abs(beta) / nv.D_zfs >= WEAK_FIELD_RATIO
    if strong:
        warnings.warn("gamma_e*B is not small compared with D", RuntimeWarning)
    split = math.hypot(xi, beta)
    return SpinLevels(
        nu_plus=nv.D_zfs + split,
        nu_minus=nv.D_zfs - split,
        theta=math.atan2(xi, beta),
        phi_E=math.atan2(Ey, Ex),
        xi_perp=xi,
        beta_z=beta,
        strong_field=strong,
    )


def stark_shift(nv: NVParams, E_z_lab: float, phi_B: float | None = None, *, projected: bool = True) -> float:
    """Energy shift (Hz) of the |-> state prepared by a transverse B field.

    |+> shifts by the opposite amount. ``projected=False`` applies d_perp to
    the lab field directly, without the NV-frame projection.
    """
    if phi_B is None:
        phi_B = nv.phi_B
    E_x = lab_to_nv_field(E_z_lab, nv.orientation)[0] if projected else E_z_lab
    return nv.d_perp * E_x * math.cos(2.0 * phi_B)


def nu_fluctuation_correlator(nv: NVParams, transfer: float, electrolyte_corr_at_t: float,
                              magnetic_corr: float = 0.0) -> float:
    """<dnu(t) dnu(0)> in Hz^2 from the interface-field correlator.

    ``transfer`` is dE_NV/dE_e(0) for the lab-normal component; the NV-frame
    projection enters as sin^2(orientation). ``magnetic_corr`` adds a
    user-supplied (Hz^2) magnetic contribution, zero by default.
    """
    proj = math.sin(nv.orientation) ** 2
    return nv.d_perp**2 * proj * transfer**2 * electrolyte_corr_at_t + magnetic_corr


def _as_function(corr: Correlator) -> Callable[[float], float]:
    if callable(corr):
        return corr
    value = float(corr)
    return lambda t: value


def phase_variance(nu_corr_fn: Correlator, tau: float) -> float:
    """<dpsi^2> = 4 pi^2 int_0^tau int_0^tau C(t - t') dt dt' (rad^2).

    Uses stationarity: the double integral equals 2 int_0^tau (tau - u) C(u) du.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        return 0.0
    C = _as_function(nu_corr_fn)
    integral = adaptive_quad(lambda u: (tau - u) * C(u), 0.0, tau, rtol=1e-12, atol=0.0)
    return 8.0 * math.pi**2 * integral


T2STAR_CONVENTIONS = ("curvature", "half")


def t2_star(nu_corr_fn: Correlator, convention: str = "curvature") -> float:
    """Dephasing time T2* (s) from the zero-lag frequency-noise correlator.

    ``curvature``: 1/T2*^2 = (1/2) d^2<dpsi^2>/dt^2 at 0 = 4 pi^2 C(0).
    ``half``: matches the Gaussian decay exp(-<dpsi^2>/2), 1/T2*^2 = 2 pi^2 C(0).
    Returns ``math.inf`` for a noiseless correlator.
    """
    if convention not in T2STAR_CONVENTIONS:
        raise ValueError(f"convention must be one of {T2STAR_CONVENTIONS}")
    c0 = _as_function(nu_corr_fn)(0.0)
    if c0 < 0:
        raise ValueError("C(0) must be non-negative")
    factor = 4.0 if convention == "curvature" else 2.0
    rate_sq = factor * math.pi**2 * c0
    if rate_sq == 0.0:
        return math.inf
    return 1.0 / math.sqrt(rate_sq)


def ramsey_signal(tau: float, T2_star: float, psi: float) -> float:
    """Mean m_s=0 population after a Ramsey sequence with Gaussian dephasing."""
    if tau < 0 or T2_star <= 0:
        raise ValueError("need tau >= 0 and T2_star > 0")
    decay = math.exp(-((tau / T2_star) ** 2)) if math.isfinite(T2_star) else 1.0
    return 0.5 * (1.0 - decay * math.cos(psi))


def mean_observable(T2_star: float, tau: float, psi: float, readout: ReadoutParams) -> float:
    """Average photon count <M> for one readout."""
    a, b = readout.alpha, readout.beta_counts
    return 0.5 * (a + b) + 0.5 * (a - b) * math.exp(-((tau / T2_star) ** 2)) * math.cos(psi)


def observable_variance(T2_star: float, tau: float, psi: float, readout: ReadoutParams) -> float:
    """(Delta M)^2 including the classical two-level spread."""
    a, b = readout.alpha, readout.beta_counts
    g = math.exp(-((tau / T2_star) ** 2))
    return (
        mean_observable(T2_star, tau, psi, readout)
        + 0.25 * (a - b) ** 2 * (1.0 - math.cos(psi) ** 2 * g * g)
    )


def variance_of_T2_estimate(T2_star: float, tau: float, psi: float, readout: ReadoutParams) -> float:
    """Shot-noise-limited (Delta T2*)^2 in s^2.

    Closed form 15 T2*^6 exp(2 (tau/T2*)^2) / (2 alpha tau^4 cos^2 psi),
    which keeps only the Poisson term of (Delta M)^2 and assumes alpha = 3 beta/2.
    """
    c = math.cos(psi)
    if abs(c) <= EPS:  # cos(pi/2) rounds to 6e-17, not zero
        raise ZeroDivisionError("cos(psi) = 0: the signal carries no T2* information")
    x = tau / T2_star
    return 15.0 * T2_star**6 * math.exp(2.0 * x * x) / (2.0 * readout.alpha * tau**4 * c * c)


def sensitivity(fit, c_b: float, tau: float, readout: ReadoutParams) -> float:
    """Concentration sensitivity eta in mol m^-3 Hz^-1/2 for a power-law
    calibration ``1/T2* = A c_b^B`` (``fit`` has attributes A and B)."""
    if tau <= 0:
        return math.inf
    A, B = fit.A, fit.B
    T2 = 1.0 / (A * c_b**B)
    x = tau / T2
    return (
        math.sqrt(15.0 * tau / (2.0 * readout.alpha))
        * (A / B)
        * c_b ** (B + 1.0)
        * tau**-2
        * T2**3
        * math.exp(x * x)
    )
