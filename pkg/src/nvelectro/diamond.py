"""Space-charge electrostatics inside nitrogen-implanted diamond.

The charge density depends on the local potential only, so Poisson's
equation has a first integral: the field is a function of phi, and depth
follows from integrating dphi/E(phi). The surface potential is fixed by
matching the electrolyte's Gouy-Chapman field (displacement continuity) and
a Dirichlet value deep in the crystal.

Depth ``d`` is measured into the diamond from the interface. With the z axis
pointing into the solution, ``E = -dphi/dz = dphi/dd``.

Energies are in eV with the valence-band edge as gauge (E_v = 0); since
potentials are in volts, ``e*phi`` in eV is numerically ``phi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .constants import CONST
from .electrolyte import ElectrolyteParams, debye_kappa, interface_field, invert_interface_field
from .errors import (
    CarrierOverflow,
    DerivativeUnstable,
    NoBracket,
    NonConverged,
    QuadratureError,
    RadicandNegative,
    ScreeningRegimeError,
)
from .numerics import adaptive_quad, brent_root

EXP_LIMIT = 700.0
PHI0_SEARCH_MARGIN = 5.0  # V, bracket expansion limit around [phi_bd, phi_be]
MIN_SCAN_WIDTH = 1e-3  # V, smallest initial phi0 scan window
NEUTRAL_RTOL = 1e-12  # |rho| / (e (N_d + N_a)) treated as charge-neutral
CHARGE_MODELS = ("dopants", "dielectric")


@dataclass(frozen=True)
class DiamondParams:
    eps_d: float = 5.8 * CONST.eps0
    E_gap: float = 5.47  # eV
    m_eff_n: float = 0.57  # units of m0
    m_eff_p: float = 0.8
    D_areal: float = 1e16  # implanted nitrogen, 1/m^2
    d_max: float = 14e-9  # m
    frac_Ns: float = 0.96
    frac_NV: float = 0.04
    E_d_Ns: float = 1.7  # eV below E_c
    E_a_NV: float = 1.0  # eV above E_v
    E_d_NV: float | None = None  # optional NV- donor level, eV below E_c
    z_bulk: float = 100e-9  # m
    phi_bd: float = 0.0  # V
    phi_ref: float = 0.0  # V, potential at which the chemical potential sits at mu0
    T: float = 298.0
    charge_model: str = "dopants"  # "dielectric" switches the space charge off

    def __post_init__(self):
        problems = []
        if not self.eps_d > 0:
            problems.append("eps_d")
        if not (0 < self.frac_Ns < 1 and 0 < self.frac_NV < 1):
            problems.append("fractions must lie in (0, 1)")
        elif abs(self.frac_Ns + self.frac_NV - 1.0) > 1e-12:
            problems.append("frac_Ns + frac_NV must equal 1")
        if not self.d_max > 0:
            problems.append("d_max")
        if not self.z_bulk > self.d_max:
            problems.append("z_bulk must exceed d_max")
        if not self.D_areal > 0:
            problems.append("D_areal")
        if not self.T > 0:
            problems.append("T")
        if self.charge_model not in CHARGE_MODELS:
            problems.append(f"charge_model must be one of {CHARGE_MODELS}")
        if problems:
            raise ValueError("invalid diamond parameters: " + "; ".join(problems))

    @property
    def N_d(self) -> float:
        """Substitutional-nitrogen donor density, 1/m^3."""
        return self.frac_Ns * self.D_areal / self.d_max

    @property
    def N_a(self) -> float:
        """NV acceptor density, 1/m^3."""
        return self.frac_NV * self.D_areal / self.d_max

    @property
    def kT(self) -> float:
        """Thermal energy in eV."""
        return CONST.thermal_voltage(self.T)


@dataclass(frozen=True)
class BandModel:
    N_c: float
    N_v: float
    mu0: float  # eV
    E_c: float
    E_v: float = 0.0

    def __post_init__(self):
        if not (self.N_c > 0 and self.N_v > 0):
            raise ValueError("effective densities of states must be positive")
        if not self.E_v < self.mu0 < self.E_c:
            raise ValueError("mu0 must lie inside the gap")


@dataclass(frozen=True)
class InterfaceSolution:
    phi0: float  # V, surface potential
    V0: float  # V, phi0 - phi_be
    E_e0: float  # V/m, solution side
    E_d0: float  # V/m, diamond side
    profile: tuple[tuple[float, float, float], ...]  # (depth m, phi V, E V/m)
    converged: bool
    residual: float  # V, |phi(z_bulk) - phi_bd|
    eps_e: float = 80.0 * CONST.eps0


def effective_dos(dp: DiamondParams) -> tuple[float, float]:
    """(N_c, N_v) = 2 (m* k T / (2 pi hbar^2))^{3/2} for each band, in 1/m^3."""
    if dp.T <= 0:
        raise ValueError("T must be positive")

    def nd(m):
        return 2.0 * (m * CONST.m0 * CONST.k * dp.T / (2.0 * math.pi * CONST.hbar**2)) ** 1.5

    return nd(dp.m_eff_n), nd(dp.m_eff_p)


def intrinsic_mu(dp: DiamondParams, band: BandModel | None = None) -> float:
    """Midgap energy shifted by (3/4) kT ln(m_p/m_n)."""
    E_c, E_v = (band.E_c, band.E_v) if band is not None else (dp.E_gap, 0.0)
    return 0.5 * (E_v + E_c) + 0.75 * dp.kT * math.log(dp.m_eff_p / dp.m_eff_n)


def band_model(dp: DiamondParams) -> BandModel:
    N_c, N_v = effective_dos(dp)
    return BandModel(N_c=N_c, N_v=N_v, mu0=intrinsic_mu(dp), E_c=dp.E_gap, E_v=0.0)


def _guarded_exp(x: float) -> float:
    if x > EXP_LIMIT:
        raise CarrierOverflow(f"Boltzmann exponent {x:.1f} exceeds {EXP_LIMIT:g}")
    return math.exp(x)


def _fermi(y: float) -> float:
    """1/(1+exp(y)) without overflow."""
    if y > 0:
        q = math.exp(-y)
        return q / (1.0 + q)
    return 1.0 / (1.0 + math.exp(y))


def carrier_densities(dp: DiamondParams, band: BandModel, phi: float) -> tuple[float, float]:
    """Boltzmann electron and hole densities (n, p) in 1/m^3."""
    kT = dp.kT
    u = phi - dp.phi_ref
    n = band.N_c * _guarded_exp((band.mu0 + u - band.E_c) / kT)
    p = band.N_v * _guarded_exp((band.E_v - band.mu0 - u) / kT)
    return n, p


def ionized_dopants(dp: DiamondParams, band: BandModel, phi: float) -> tuple[float, float]:
    """(N_d^+, N_a^-) in 1/m^3. With ``E_d_NV`` set, the NV population also
    contributes a second donor level to N_d^+."""
    kT = dp.kT
    u = phi - dp.phi_ref
    E_d = band.E_c - dp.E_d_Ns
    E_a = band.E_v + dp.E_a_NV
    nd_plus = dp.N_d * _fermi((band.mu0 + u - E_d) / kT)
    if dp.E_d_NV is not None:
        nd_plus += dp.N_a * _fermi((band.mu0 + u - (band.E_c - dp.E_d_NV)) / kT)
    na_minus = dp.N_a * _fermi((E_a - band.mu0 - u) / kT)
    return nd_plus, na_minus


def charge_density(dp: DiamondParams, band: BandModel, phi: float) -> float:
    """rho_d(phi) = e [p - n + N_d^+ - N_a^-] in C/m^3."""
    if dp.charge_model == "dielectric":
        return 0.0
    n, p = carrier_densities(dp, band, phi)
    nd_plus, na_minus = ionized_dopants(dp, band, phi)
    return CONST.e * (p - n + nd_plus - na_minus)


def neutral_potential(dp: DiamondParams, band: BandModel) -> float:
    """Potential at which the space charge vanishes (root of rho_d)."""

    def f(phi):
        return charge_density(dp, band, phi)

    lo, hi = dp.phi_ref - band.E_c, dp.phi_ref + band.E_c
    return brent_root(f, lo, hi, xtol=1e-14)


def _charge_breakpoints(dp: DiamondParams, band: BandModel) -> list[float]:
    """Potentials where an occupation factor switches within a few kT."""
    centres = [band.E_c - dp.E_d_Ns - band.mu0, dp.E_a_NV - band.mu0]
    if dp.E_d_NV is not None:
        centres.append(band.E_c - dp.E_d_NV - band.mu0)
    kT = dp.kT
    return [dp.phi_ref + c + k * kT for c in centres for k in (-8, -2, 0, 2, 8)]


def charge_integral(dp: DiamondParams, band: BandModel, a: float, b: float,
                    *, rtol: float = 1e-10) -> float:
    """Integral of rho_d from ``a`` to ``b`` in C V/m^3, by adaptive quadrature."""
    if dp.charge_model == "dielectric" or a == b:
        return 0.0
    scale = CONST.e * (dp.N_d + 2 * dp.N_a) * abs(b - a)
    return adaptive_quad(
        lambda phi: charge_density(dp, band, phi), a, b,
        rtol=rtol, atol=1e-13 * scale, points=_charge_breakpoints(dp, band),
    )


def _sgn(x: float) -> float:
    return (x > 0) - (x < 0)


class _FirstIntegral:
    """Field-versus-potential relation for one surface state (phi0, E_e0)."""

    def __init__(self, dp: DiamondParams, band: BandModel, phi0: float, E_e0: float, eps_e: float):
        self.dp, self.band = dp, band
        self.phi0 = phi0
        self.E_s = eps_e / dp.eps_d * E_e0
        sign = _sgn(E_e0)
        if sign == 0:
            # zero surface field: curvature -rho/eps_d picks the direction
            sign = _sgn(-charge_density(dp, band, phi0))
        self.sign = sign

    def radicand(self, phi: float) -> float:
        return self.E_s**2 - 2.0 / self.dp.eps_d * charge_integral(self.dp, self.band, self.phi0, phi)

    def field(self, phi: float) -> float:
        r = self.radicand(phi)
        if r < 0:
            raise RadicandNegative(f"radicand {r:.3e} < 0 at phi={phi:.9g} V")
        return self.sign * math.sqrt(r)

    def _inv_field(self, phi: float) -> float:
        r = self.radicand(phi)
        if r <= 0:
            raise RadicandNegative(f"radicand {r:.3e} <= 0 at phi={phi:.9g} V")
        return 1.0 / math.sqrt(r)

    def turning_point(self, target: float, n_scan: int = 48) -> float | None:
        """First potential between phi0 and target where the radicand vanishes."""
        prev = self.phi0
        for i in range(1, n_scan + 1):
            phi = self.phi0 + (target - self.phi0) * i / n_scan
            if self.radicand(phi) <= 0:
                return brent_root(self.radicand, prev, phi, xtol=1e-15)
            prev = phi
        return None

    def segment(self, a: float, b: float) -> float:
        """Distance travelled between potentials a and b (same branch)."""
        if a == b:
            return 0.0
        lo, hi = min(a, b), max(a, b)
        scale = self.radicand(a)
        r_end = self.radicand(b)
        tol = 1e-12 * max(scale, self.E_s**2)
        if r_end < -tol:
            raise RadicandNegative(f"radicand {r_end:.3e} < 0 at phi={b:.9g} V")
        if r_end <= tol:
            return self._segment_to_turning(a, b)
        return adaptive_quad(self._inv_field, lo, hi, rtol=1e-10, atol=1e-24)

    def _segment_to_turning(self, a: float, b: float) -> float:
        # phi = b - s u^2 removes the 1/sqrt(phi - b) endpoint singularity
        s = 1.0 if b > a else -1.0
        umax = math.sqrt(abs(b - a))

        def g(u):
            r = self.radicand(b - s * u * u)
            if r <= 0:
                return 0.0
            return 2.0 * u / math.sqrt(r)

        return adaptive_quad(g, 0.0, umax, rtol=1e-9, atol=1e-24)

    def depth(self, target: float) -> float:
        if target == self.phi0:
            return 0.0
        if (target - self.phi0) * self.sign < 0:
            raise ValueError(
                f"phi_target={target:.6g} V lies against the profile direction from phi0={self.phi0:.6g} V"
            )
        try:
            return self.segment(self.phi0, target)
        except RadicandNegative:
            pass
        phi_t = self.turning_point(target)
        if phi_t is None:
            raise QuadratureError("radicand went negative but no turning point was located")
        if abs(target - phi_t) <= 1e-12 * (1.0 + abs(phi_t)):
            return self._segment_to_turning(self.phi0, phi_t)
        raise RadicandNegative(
            f"phi_target={target:.9g} V is beyond the turning point {phi_t:.9g} V", turning_point=phi_t
        )


def field_first_integral(dp: DiamondParams, band: BandModel, phi0: float, E_e0: float, phi: float,
                         *, eps_e: float = 80.0 * CONST.eps0) -> float:
    """Field inside the diamond at potential ``phi`` for surface state (phi0, E_e0).

    E(phi) = sgn(V0) sqrt((eps_e/eps_d E_e0)^2 - (2/eps_d) int_phi0^phi rho_d).
    """
    return _FirstIntegral(dp, band, phi0, E_e0, eps_e).field(phi)


def depth_of_potential(dp: DiamondParams, band: BandModel, phi0: float, E_e0: float,
                       phi_target: float, *, eps_e: float = 80.0 * CONST.eps0) -> float:
    """Depth (m) at which the profile reaches ``phi_target``."""
    return _FirstIntegral(dp, band, phi0, E_e0, eps_e).depth(phi_target)


def _surface_state(ep: ElectrolyteParams, phi0: float) -> float:
    return interface_field(ep, phi0 - ep.phi_be)


def _matching_residual(ep, dp, band, phi0) -> float | None:
    """depth(phi_bd) - z_bulk, +z_bulk beyond a turning point, None if the
    profile from phi0 heads away from phi_bd."""
    E_e0 = _surface_state(ep, phi0)
    fi = _FirstIntegral(dp, band, phi0, E_e0, ep.eps_e)
    if phi0 == dp.phi_bd:
        return -dp.z_bulk
    if (dp.phi_bd - phi0) * fi.sign <= 0:
        return None
    try:
        return fi.depth(dp.phi_bd) - dp.z_bulk
    except RadicandNegative:
        return dp.z_bulk


def _probe_edge(f, x_ok: float, f_ok: float, x_bad: float, n_bisect: int = 60):
    """Bisect toward the edge of the valid region looking for a sign flip."""
    for _ in range(n_bisect):
        m = 0.5 * (x_ok + x_bad)
        fm = f(m)
        if fm is None:
            x_bad = m
        elif (fm > 0) != (f_ok > 0):
            return x_ok, m
        else:
            x_ok, f_ok = m, fm
    return None


def _scan_bracket(f, lo: float, hi: float, limits: tuple[float, float], n_scan: int = 48):
    """Sign change of ``f`` between two valid (non-None) samples, widening
    the scanned window toward ``limits``. Cells that end in an invalid
    sample are bisected toward the validity edge."""
    if hi - lo < MIN_SCAN_WIDTH:
        mid = 0.5 * (lo + hi)
        lo, hi = max(mid - MIN_SCAN_WIDTH / 2, limits[0]), min(mid + MIN_SCAN_WIDTH / 2, limits[1])
    width = hi - lo
    while True:
        xs = [lo + (hi - lo) * i / n_scan for i in range(n_scan + 1)]
        prev = None
        for x in xs:
            fx = f(x)
            if fx == 0.0:
                return x, x
            if prev is not None:
                if fx is None:
                    found = _probe_edge(f, prev[0], prev[1], x)
                    if found:
                        return found
                elif (fx > 0) != (prev[1] > 0):
                    return prev[0], x
            elif fx is not None and x != xs[0]:
                found = _probe_edge(f, x, fx, xs[xs.index(x) - 1])
                if found:
                    return tuple(sorted(found))
            prev = None if fx is None else (x, fx)
        if lo <= limits[0] and hi >= limits[1]:
            raise NoBracket(f"no sign change of the matching residual for phi0 in [{limits[0]:g}, {limits[1]:g}] V")
        width *= 2.0
        lo, hi = max(lo - width / 2, limits[0]), min(hi + width / 2, limits[1])


def _trivial_solution(ep, dp, band) -> InterfaceSolution | None:
    if ep.phi_be != dp.phi_bd:
        return None
    # a root of rho found by bisection leaves rounding-level charge behind
    scale = CONST.e * (dp.N_d + dp.N_a)
    if abs(charge_density(dp, band, dp.phi_bd)) > NEUTRAL_RTOL * scale:
        return None
    n = 201
    profile = tuple((dp.z_bulk * i / (n - 1), dp.phi_bd, 0.0) for i in range(n))
    return InterfaceSolution(phi0=dp.phi_bd, V0=0.0, E_e0=0.0, E_d0=0.0, profile=profile,
                             converged=True, residual=0.0, eps_e=ep.eps_e)


def _sample_profile(fi: _FirstIntegral, phi_end: float, n_log: int = 120, n_lin: int = 121):
    span = phi_end - fi.phi0
    fracs = {0.0, 1.0}
    fracs.update(10.0 ** (-8.0 + 8.0 * i / (n_log - 1)) for i in range(n_log))
    fracs.update(i / (n_lin - 1) for i in range(n_lin))
    phis = [fi.phi0 + f * span for f in sorted(fracs)]
    phis[-1] = phi_end
    rows = [(0.0, fi.phi0, fi.E_s)]
    depth = 0.0
    for a, b in zip(phis[:-1], phis[1:]):
        depth += fi.segment(a, b)
        rows.append((depth, b, fi.field(b)))
    return tuple(rows)


def solve_interface(ep: ElectrolyteParams, dp: DiamondParams, band: BandModel | None = None,
                    *, max_iter: int = 200) -> InterfaceSolution:
    """Match the electrolyte and diamond solutions.

    Finds the surface potential phi0 for which the diamond profile launched
    with displacement-continuous field reaches phi_bd exactly at z_bulk.
    """
    if band is None:
        band = band_model(dp)
    if debye_kappa(ep) * ep.Delta <= 10.0:
        raise ScreeningRegimeError("kappa*Delta <= 10")
    trivial = _trivial_solution(ep, dp, band)
    if trivial is not None:
        return trivial

    def f(phi0):
        return _matching_residual(ep, dp, band, phi0)

    seed = (min(dp.phi_bd, ep.phi_be), max(dp.phi_bd, ep.phi_be))
    limits = (dp.phi_bd - PHI0_SEARCH_MARGIN, ep.phi_be + PHI0_SEARCH_MARGIN)
    limits = (min(limits[0], seed[0]), max(limits[1], seed[1]))
    a, b = _scan_bracket(f, seed[0], seed[1], limits)
    def f_root(x):
        r = f(x)
        return dp.z_bulk if r is None else r

    try:
        phi0 = brent_root(f_root, a, b, xtol=1e-16, maxiter=max_iter)
    except RuntimeError as exc:
        raise NonConverged(str(exc)) from exc

    E_e0 = _surface_state(ep, phi0)
    fi = _FirstIntegral(dp, band, phi0, E_e0, ep.eps_e)
    try:
        z_end = fi.depth(dp.phi_bd)
        E_end = fi.field(dp.phi_bd)
    except RadicandNegative as exc:
        raise NonConverged(f"matching residual is discontinuous at phi0={phi0:.12g} V") from exc
    residual = abs(E_end) * abs(z_end - dp.z_bulk)
    converged = residual < 1e-6
    if not converged:
        raise NonConverged(f"phi(z_bulk) misses phi_bd by {residual:.3e} V (phi0={phi0:.12g} V)")
    profile = _sample_profile(fi, dp.phi_bd)
    return InterfaceSolution(phi0=phi0, V0=phi0 - ep.phi_be, E_e0=E_e0, E_d0=fi.E_s,
                             profile=profile, converged=converged, residual=residual, eps_e=ep.eps_e)


def _locate_potential(fi: _FirstIntegral, depth: float, phi_guess: float, z_guess: float,
                      phi_limit: float) -> float:
    """Potential at ``depth`` on the profile ``fi`` by bracketed root finding."""
    if depth == 0.0:
        return fi.phi0

    def g(phi):
        return fi.depth(phi) - depth

    # local linear step from the guess, then expand a bracket around it
    E = fi.field(phi_guess) if phi_guess != fi.phi0 else fi.E_s
    centre = phi_guess + E * (depth - z_guess)
    lo_lim, hi_lim = sorted((fi.phi0, phi_limit))
    centre = min(max(centre, lo_lim), hi_lim)
    w = max(abs(E) * depth * 1e-6, 1e-12)
    for _ in range(60):
        a, b = max(centre - w, lo_lim), min(centre + w, hi_lim)
        ga, gb = _safe(g, a, depth), _safe(g, b, depth)
        if ga is not None and gb is not None and (ga > 0) != (gb > 0):
            return brent_root(g, a, b, xtol=1e-16)
        if ga == 0.0:
            return a
        if gb == 0.0:
            return b
        w *= 4.0
    raise NonConverged(f"could not bracket the potential at depth {depth:.3e} m")


def _safe(g, phi, depth):
    try:
        return g(phi)
    except RadicandNegative:
        return depth  # unreachable: treat as far beyond


def potential_at_depth(sol: InterfaceSolution, dp: DiamondParams, band: BandModel, depth: float) -> float:
    """phi at ``depth`` on a converged solution, refined from the sampled profile."""
    if not 0.0 <= depth <= dp.z_bulk:
        raise ValueError(f"depth {depth} outside [0, z_bulk]")
    if sol.E_e0 == 0.0 and sol.V0 == 0.0 and all(r[2] == 0.0 for r in sol.profile):
        return sol.phi0
    fi = _FirstIntegral(dp, band, sol.phi0, sol.E_e0, sol.eps_e)
    rows = sol.profile
    k = max(i for i, r in enumerate(rows) if r[0] <= depth)
    z_k, phi_k, _ = rows[k]
    if z_k == depth:
        return phi_k
    phi_next = rows[min(k + 1, len(rows) - 1)][1]

    def g(phi):
        return z_k + fi.segment(phi_k, phi) - depth

    return brent_root(g, phi_k, phi_next, xtol=1e-16)


def field_at_nv(sol: InterfaceSolution, dp: DiamondParams, band: BandModel, depth: float) -> float:
    """Diamond-side field (V/m) at the NV depth."""
    if not 0.0 < depth < dp.z_bulk:
        raise ValueError("depth must lie in (0, z_bulk)")
    if not sol.converged:
        raise NonConverged("solution is not converged")
    phi = potential_at_depth(sol, dp, band, depth)
    if sol.E_d0 == 0.0 and sol.V0 == 0.0:
        return 0.0
    return field_first_integral(dp, band, sol.phi0, sol.E_e0, phi, eps_e=sol.eps_e)


def transfer_derivative(ep: ElectrolyteParams, dp: DiamondParams, band: BandModel | None, depth: float,
                        *, sol: InterfaceSolution | None = None, rel_step: float = 1e-4,
                        warn_tol: float = 0.01, fail_tol: float = 0.05) -> float:
    """dE_NV/dE_e(0): response of the field at ``depth`` to an interface-field change.

    The perturbed surface state keeps both interface conditions: phi0 is
    re-derived from the perturbed E_e0 through the Gouy-Chapman relation and
    the diamond field starts from the displacement-continuous value. The
    bulk Dirichlet value is not re-imposed (it would pin E_e0).
    Central differences at steps h and 2h are Richardson-combined.
    """
    if band is None:
        band = band_model(dp)
    if sol is None:
        sol = solve_interface(ep, dp, band)
    phi_nv = potential_at_depth(sol, dp, band, depth)

    def e_nv(E):
        phi0 = ep.phi_be + invert_interface_field(ep, E)
        fi = _FirstIntegral(dp, band, phi0, E, ep.eps_e)
        phi = _locate_potential(fi, depth, phi_nv, depth, dp.phi_bd)
        return fi.field(phi)

    h = rel_step * max(abs(sol.E_e0), 1.0)
    d1 = (e_nv(sol.E_e0 + h) - e_nv(sol.E_e0 - h)) / (2 * h)
    d2 = (e_nv(sol.E_e0 + 2 * h) - e_nv(sol.E_e0 - 2 * h)) / (4 * h)
    rich = (4.0 * d1 - d2) / 3.0
    scale = max(abs(rich), 1e-300)
    disagreement = abs(d1 - d2) / scale
    if disagreement > fail_tol:
        raise DerivativeUnstable(f"step-size disagreement {disagreement:.2%} > {fail_tol:.0%}")
    if disagreement > warn_tol:
        warnings.warn(f"transfer derivative step-size disagreement {disagreement:.2%}", RuntimeWarning)
    return rich


def with_phi_bd(dp: DiamondParams, phi_bd: float) -> DiamondParams:
    return replace(dp, phi_bd=phi_bd)
