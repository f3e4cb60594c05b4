import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_bvp, solve_ivp

from nvelectro.constants import CONST
from nvelectro.diamond import (
    DiamondParams,
    band_model,
    carrier_densities,
    charge_density,
    charge_integral,
    depth_of_potential,
    effective_dos,
    field_at_nv,
    field_first_integral,
    intrinsic_mu,
    ionized_dopants,
    neutral_potential,
    potential_at_depth,
    solve_interface,
    transfer_derivative,
)
from nvelectro.electrolyte import ElectrolyteParams, interface_field
from nvelectro.errors import CarrierOverflow, NoBracket, RadicandNegative

from conftest import NV_DEPTH

DP = DiamondParams()
BAND = band_model(DP)
EP = ElectrolyteParams()


# Independent vectorised charge model and its closed-form antiderivative.
def rho_np(dp, band, phi):
    kT = dp.kT
    u = np.asarray(phi, dtype=float) - dp.phi_ref
    n = band.N_c * np.exp((band.mu0 + u - band.E_c) / kT)
    p = band.N_v * np.exp((band.E_v - band.mu0 - u) / kT)
    nd = dp.N_d * 0.5 * (1.0 - np.tanh((band.mu0 + u - (band.E_c - dp.E_d_Ns)) / (2 * kT)))
    na = dp.N_a * 0.5 * (1.0 + np.tanh((band.mu0 + u - (band.E_v + dp.E_a_NV)) / (2 * kT)))
    return CONST.e * (p - n + nd - na)


def rho_antiderivative(dp, band, phi):
    kT = dp.kT
    u = phi - dp.phi_ref
    n = band.N_c * math.exp((band.mu0 + u - band.E_c) / kT)
    p = band.N_v * math.exp((band.E_v - band.mu0 - u) / kT)
    xd = (band.mu0 + u - (band.E_c - dp.E_d_Ns)) / kT
    xa = (band.mu0 + u - (band.E_v + dp.E_a_NV)) / kT
    sp = lambda x: float(np.logaddexp(0.0, x))  # noqa: E731
    return CONST.e * (-kT * p - kT * n + dp.N_d * (u - kT * sp(xd)) - dp.N_a * kT * sp(xa))


def rel(a, b):
    m = max(abs(a), abs(b))
    return 0.0 if m == 0 else abs(a - b) / m


class TestBands:
    def test_effective_dos_reference(self):
        N_c, N_v = effective_dos(DP)
        assert N_c == pytest.approx(1.07e25, rel=5e-3)
        assert N_v == pytest.approx(1.78e25, rel=5e-3)

    def test_effective_dos_high_precision(self):
        mp.mp.dps = 30
        for m, N in zip((DP.m_eff_n, DP.m_eff_p), effective_dos(DP)):
            ref = 2 * (mp.mpf(m) * mp.mpf(CONST.m0) * mp.mpf(CONST.k) * DP.T
                       / (2 * mp.pi * mp.mpf(CONST.hbar) ** 2)) ** mp.mpf(1.5)
            assert N == pytest.approx(float(ref), rel=1e-13)

    def test_effective_dos_temperature_scaling(self):
        hot = effective_dos(replace(DP, T=4 * DP.T))
        for a, b in zip(hot, effective_dos(DP)):
            assert a / b == pytest.approx(8.0, rel=1e-13)

    def test_intrinsic_mu(self):
        assert intrinsic_mu(replace(DP, m_eff_p=0.57)) == 0.5 * DP.E_gap
        shift = intrinsic_mu(DP) - 0.5 * DP.E_gap
        assert shift == pytest.approx(0.75 * DP.kT * math.log(0.8 / 0.57), rel=1e-14)
        assert shift == pytest.approx(6.5e-3, abs=5e-5)
        assert intrinsic_mu(replace(DP, T=1e-9)) == pytest.approx(0.5 * DP.E_gap, abs=1e-12)

    def test_dopant_densities(self):
        assert DP.N_d == pytest.approx(0.96e16 / 14e-9, rel=1e-15)
        assert DP.N_a == pytest.approx(0.04e16 / 14e-9, rel=1e-15)

    def test_invalid_fractions(self):
        with pytest.raises(ValueError):
            DiamondParams(frac_Ns=0.9, frac_NV=0.04)
        with pytest.raises(ValueError):
            DiamondParams(z_bulk=10e-9)


class TestCarriers:
    @given(st.floats(-3.0, 3.0))
    def test_mass_action(self, phi):
        n, p = carrier_densities(DP, BAND, phi)
        expected = BAND.N_c * BAND.N_v * math.exp(-DP.E_gap / DP.kT)
        assert n * p == pytest.approx(expected, rel=1e-12)

    def test_product_exponent(self):
        n, p = carrier_densities(DP, BAND, 0.0)
        assert math.log(n * p / (BAND.N_c * BAND.N_v)) == pytest.approx(-213.0, abs=0.2)

    def test_thermal_step(self):
        n0, p0 = carrier_densities(DP, BAND, 0.3)
        n1, p1 = carrier_densities(DP, BAND, 0.3 + DP.kT)
        assert n1 / n0 == pytest.approx(math.e, rel=1e-12)
        assert p0 / p1 == pytest.approx(math.e, rel=1e-12)

    def test_overflow_guard(self):
        with pytest.raises(CarrierOverflow):
            carrier_densities(DP, BAND, 30.0)


class TestDopants:
    def test_limits(self):
        nd, na = ionized_dopants(DP, BAND, 50.0)
        assert nd == pytest.approx(0.0, abs=1e-300) and na == pytest.approx(DP.N_a, rel=1e-15)
        nd, na = ionized_dopants(DP, BAND, -50.0)
        assert nd == pytest.approx(DP.N_d, rel=1e-15) and na == pytest.approx(0.0, abs=1e-300)

    def test_half_ionization(self):
        phi = (BAND.E_c - DP.E_d_Ns) - BAND.mu0
        assert ionized_dopants(DP, BAND, phi)[0] == pytest.approx(DP.N_d / 2, rel=1e-12)

    @given(st.floats(-20.0, 20.0))
    def test_bounded(self, phi):
        nd, na = ionized_dopants(DP, BAND, phi)
        assert 0.0 <= nd <= DP.N_d and 0.0 <= na <= DP.N_a

    def test_optional_second_donor(self):
        dp = replace(DP, E_d_NV=2.75)
        assert ionized_dopants(dp, BAND, -3.0)[0] == pytest.approx(DP.N_d + DP.N_a, rel=1e-12)


class TestChargeDensity:
    def test_positive_at_minus_one_volt(self):
        assert charge_density(DP, BAND, -1.0) > 0
        # donors and NV acceptors both fully ionized there
        assert charge_density(DP, BAND, -1.0) == pytest.approx(CONST.e * (DP.N_d - DP.N_a), rel=1e-9)

    def test_monotone_non_increasing(self):
        grid = np.linspace(-2, 2, 801)
        vals = [charge_density(DP, BAND, float(x)) for x in grid]
        assert np.all(np.diff(vals) <= 0)

    def test_neutral_point(self):
        phi_star = neutral_potential(DP, BAND)
        nd, na = ionized_dopants(DP, BAND, phi_star)
        assert nd == pytest.approx(na, rel=1e-9)
        assert phi_star == pytest.approx(1.10899, abs=1e-5)

    def test_matches_vectorised_model(self):
        for phi in np.linspace(-2, 3, 41):
            assert charge_density(DP, BAND, float(phi)) == pytest.approx(float(rho_np(DP, BAND, phi)),
                                                                       rel=1e-10, abs=1e-12)

    def test_dielectric_stub(self):
        assert charge_density(replace(DP, charge_model="dielectric"), BAND, 0.7) == 0.0

    @pytest.mark.parametrize("a,b", [(0.0, 1.5), (1.5, 0.0), (-1.0, 2.5), (1.0, 1.2)])
    def test_integral_matches_antiderivative(self, a, b):
        exact = rho_antiderivative(DP, BAND, b) - rho_antiderivative(DP, BAND, a)
        assert charge_integral(DP, BAND, a, b) == pytest.approx(exact, rel=1e-8)


class TestFirstIntegral:
    def test_surface_value_is_displacement_continuity(self):
        for E in (-6.7e5, 2e5):
            E_s = EP.eps_e / DP.eps_d * E
            assert field_first_integral(DP, BAND, 1.3, E, 1.3, eps_e=EP.eps_e) == E_s

    def test_dielectric_stub_constant_field(self):
        dp = replace(DP, charge_model="dielectric")
        E_s = EP.eps_e / dp.eps_d * 3e5
        for phi in (0.0, 0.4, 2.0):
            assert field_first_integral(dp, BAND, 0.5, 3e5, phi, eps_e=EP.eps_e) == pytest.approx(E_s, rel=1e-15)

    def test_sign_follows_bias(self):
        assert field_first_integral(DP, BAND, 1.3, 4e5, 1.31, eps_e=EP.eps_e) > 0
        assert field_first_integral(DP, BAND, 1.3, -4e5, 1.29, eps_e=EP.eps_e) < 0

    def test_unreachable_potential(self):
        # rising from 0 V toward the neutral point, positive space charge stops the profile early
        with pytest.raises(RadicandNegative):
            field_first_integral(DP, BAND, 0.0, 1e5, 1.0, eps_e=EP.eps_e)
        with pytest.raises(RadicandNegative) as info:
            depth_of_potential(DP, BAND, 0.0, 1e5, 1.0, eps_e=EP.eps_e)
        assert 0.0 < info.value.turning_point < 1.0


class TestDepth:
    def test_zero(self):
        assert depth_of_potential(DP, BAND, 1.4, -6e5, 1.4, eps_e=EP.eps_e) == 0.0

    def test_constant_field_stub(self):
        dp = replace(DP, charge_model="dielectric")
        E_e0 = 2e5
        E_s = EP.eps_e / dp.eps_d * E_e0
        phi0, target = 0.2, 0.45
        d = depth_of_potential(dp, BAND, phi0, E_e0, target, eps_e=EP.eps_e)
        assert d == pytest.approx(abs(phi0 - target) / abs(E_s), rel=1e-10)
        with pytest.raises(ValueError):
            depth_of_potential(dp, BAND, phi0, E_e0, 0.1, eps_e=EP.eps_e)

    def test_increasing_along_profile(self, solution):
        targets = np.linspace(solution.phi0, 0.0, 40)[1:]
        depths = [depth_of_potential(DP, BAND, solution.phi0, solution.E_e0, float(t), eps_e=EP.eps_e)
                  for t in targets]
        assert np.all(np.diff(depths) > 0)


def bvp_oracle(ep, dp, band):
    """Independent route: collocation on phi'' = -rho/eps_d with the nonlinear surface condition.

    Depth is scaled by z_bulk so both unknowns are of order one volt.
    """
    L, eps = dp.z_bulk, dp.eps_d

    def f(x, y):
        return np.vstack([y[1], -rho_np(dp, band, y[0]) * L * L / eps])

    def bc(ya, yb):
        E_s = ep.eps_e / eps * interface_field(ep, ya[0] - ep.phi_be)
        return np.array([ya[1] - E_s * L, yb[0] - dp.phi_bd])

    x = np.linspace(0, 1, 400)
    guess = np.vstack([ep.phi_be * (1 - x), -ep.phi_be * np.ones_like(x)])
    res = solve_bvp(f, bc, x, guess, tol=1e-10, max_nodes=100000)
    return res, L


class TestSolveInterface:
    def test_matches_collocation_solve(self, solution):
        res, L = bvp_oracle(EP, DP, BAND)
        assert res.success, res.message
        assert solution.phi0 == pytest.approx(res.y[0, 0], rel=1e-8)
        assert solution.E_d0 == pytest.approx(res.y[1, 0] / L, rel=1e-6)
        assert field_at_nv(solution, DP, BAND, NV_DEPTH) == pytest.approx(res.sol(NV_DEPTH / L)[1] / L, rel=1e-6)

    def test_reference_values(self, solution):
        assert solution.phi0 == pytest.approx(1.4967375946774, rel=1e-10)
        assert solution.V0 == pytest.approx(-3.2624e-3, rel=1e-4)
        assert solution.E_e0 == pytest.approx(-6.73875e5, rel=1e-5)

    def test_displacement_continuity(self, solution):
        assert EP.eps_e * solution.E_e0 == pytest.approx(DP.eps_d * solution.E_d0, rel=1e-9)
        assert solution.profile[0][2] == pytest.approx(solution.E_d0, rel=1e-9)
        assert solution.E_e0 == pytest.approx(interface_field(EP, solution.V0), rel=1e-12)

    def test_first_integral_pointwise(self, solution):
        E_s = solution.E_d0
        for _, phi, E in solution.profile:
            integral = rho_antiderivative(DP, BAND, phi) - rho_antiderivative(DP, BAND, solution.phi0)
            resid = E * E - E_s * E_s + 2.0 / DP.eps_d * integral
            assert abs(resid) <= 1e-6 * max(E * E, E_s * E_s)

    def test_depth_round_trip(self, solution):
        for z, phi, _ in solution.profile[1:]:
            d = depth_of_potential(DP, BAND, solution.phi0, solution.E_e0, phi, eps_e=EP.eps_e)
            assert d == pytest.approx(z, rel=1e-3)

    def test_profile_structure(self, solution):
        z = [r[0] for r in solution.profile]
        assert len(z) >= 200
        assert np.all(np.diff(z) > 0)
        assert z[1] < 1e-12  # log-spaced near the surface
        assert z[-1] == pytest.approx(DP.z_bulk, rel=1e-6)
        assert solution.profile[-1][1] == pytest.approx(DP.phi_bd, abs=1e-12)
        assert solution.converged and solution.residual < 1e-6

    def test_profile_matches_ode_integration(self, solution):
        """Shooting from the surface state with an ODE integrator reproduces the sampled profile."""
        eps = DP.eps_d
        res = solve_ivp(lambda x, y: [y[1], -charge_density(DP, BAND, y[0]) / eps], (0, 40e-9),
                        [solution.phi0, solution.E_d0], rtol=1e-11, atol=[1e-14, 1e-4], dense_output=True)
        for z, phi, E in solution.profile:
            if 1e-9 < z < 40e-9:
                y = res.sol(z)
                assert phi == pytest.approx(y[0], rel=1e-6)
                assert E == pytest.approx(y[1], rel=1e-6)

    def test_field_relaxes_from_surface(self, solution):
        rows = [r for r in solution.profile if r[0] <= 50e-9]
        mags = [abs(r[2]) for r in rows]
        assert np.all(np.diff(mags) < 0)
        phis = [r[1] for r in solution.profile]
        assert np.all(np.diff(phis) < 0)

    def test_trivial_dielectric(self):
        dp = replace(DP, charge_model="dielectric", phi_bd=1.5)
        sol = solve_interface(EP, dp, BAND)
        assert sol.phi0 == 1.5 and sol.V0 == 0.0 and sol.E_e0 == 0.0
        assert all(r[2] == 0.0 for r in sol.profile)

    def test_trivial_neutral_diamond(self):
        phi_star = neutral_potential(DP, BAND)
        sol = solve_interface(replace(EP, phi_be=phi_star), replace(DP, phi_bd=phi_star), BAND)
        assert sol.V0 == 0.0 and all(r[2] == 0.0 for r in sol.profile)

    def test_equal_bulk_potentials_charged_diamond(self):
        # needs a profile that rises then falls back; single-branch matching reports no bracket
        with pytest.raises(NoBracket):
            solve_interface(replace(EP, phi_be=0.3), replace(DP, phi_bd=0.3), BAND)

    def test_dielectric_linear_profile(self):
        dp = replace(DP, charge_model="dielectric")
        sol = solve_interface(EP, dp, BAND)
        # constant field across the diamond: phi0 - phi_bd = -E_d0 * z_bulk
        assert sol.phi0 - dp.phi_bd == pytest.approx(-sol.E_d0 * dp.z_bulk, rel=1e-9)

    def test_gauge_invariance(self, solution):
        shift = 0.7
        ep = replace(EP, phi_be=EP.phi_be + shift)
        dp = replace(DP, phi_bd=DP.phi_bd + shift, phi_ref=DP.phi_ref + shift)
        moved = solve_interface(ep, dp, band_model(dp))
        assert moved.phi0 - shift == pytest.approx(solution.phi0, rel=1e-9)
        assert moved.E_e0 == pytest.approx(solution.E_e0, rel=1e-9)
        assert moved.E_d0 == pytest.approx(solution.E_d0, rel=1e-9)
        assert field_at_nv(moved, dp, band_model(dp), NV_DEPTH) == pytest.approx(
            field_at_nv(solution, DP, BAND, NV_DEPTH), rel=1e-9)

    def test_gauge_invariance_dielectric(self):
        dp = replace(DP, charge_model="dielectric")
        a = solve_interface(EP, dp, BAND)
        b = solve_interface(replace(EP, phi_be=EP.phi_be - 0.4), replace(dp, phi_bd=dp.phi_bd - 0.4), BAND)
        assert b.E_e0 == pytest.approx(a.E_e0, rel=1e-9)


class TestFieldAtNV:
    def test_surface_limit(self, solution):
        assert field_at_nv(solution, DP, BAND, 1e-15) == pytest.approx(solution.E_d0, rel=1e-6)

    def test_reference_value(self, solution):
        assert field_at_nv(solution, DP, BAND, NV_DEPTH) == pytest.approx(-8.4034e6, rel=1e-4)

    def test_decreasing_in_depth_through_the_depleted_layer(self, solution):
        mags = [abs(field_at_nv(solution, DP, BAND, d)) for d in np.linspace(1e-9, 50e-9, 15)]
        assert np.all(np.diff(mags) < 0)

    def test_potential_lookup(self, solution):
        for z, phi, _ in solution.profile[::20][1:]:
            assert potential_at_depth(solution, DP, BAND, z) == pytest.approx(phi, rel=1e-12)

    def test_rejects_depth_outside(self, solution):
        with pytest.raises(ValueError):
            field_at_nv(solution, DP, BAND, 0.0)
        with pytest.raises(ValueError):
            field_at_nv(solution, DP, BAND, DP.z_bulk)

    def test_concentration_dependence(self, default_sweep):
        points, _ = default_sweep
        extra = solve_interface(EP.with_cb(1e-3), DP, BAND)
        c = [1e-3] + [p.c_b for p in points]
        E = [abs(field_at_nv(extra, DP, BAND, NV_DEPTH))] + [abs(p.E_nv) for p in points]
        assert np.all(np.diff(E) > 0)
        slopes = np.diff(np.log(E)) / np.diff(np.log(c))
        mid = np.sqrt(np.array(c[1:]) * np.array(c[:-1]))
        assert slopes[mid < 0.1].min() > slopes[mid > 0.1].max()


class TestTransfer:
    def test_dielectric_stub_ratio(self):
        dp = replace(DP, charge_model="dielectric")
        for d in (5e-9, 10e-9, 60e-9):
            assert transfer_derivative(EP, dp, BAND, d) == pytest.approx(EP.eps_e / dp.eps_d, rel=1e-8)

    def test_positive(self, default_sweep):
        assert all(p.transfer > 0 for p in default_sweep[0])

    def test_matches_ode_shooting(self, solution):
        """Transfer from integrating Poisson's equation from perturbed surface states."""
        from nvelectro.electrolyte import invert_interface_field

        def e_nv(E):
            phi0 = EP.phi_be + invert_interface_field(EP, E)
            res = solve_ivp(lambda x, y: [y[1], -charge_density(DP, BAND, y[0]) / DP.eps_d], (0, NV_DEPTH),
                            [phi0, EP.eps_e / DP.eps_d * E], rtol=1e-12, atol=[1e-15, 1e-5])
            return res.y[1, -1]

        h = 1e-3 * abs(solution.E_e0)
        oracle = (e_nv(solution.E_e0 + h) - e_nv(solution.E_e0 - h)) / (2 * h)
        assert transfer_derivative(EP, DP, BAND, NV_DEPTH, sol=solution) == pytest.approx(oracle, rel=1e-5)

    def test_decreasing_in_depth(self, solution):
        t = [transfer_derivative(EP, DP, BAND, d, sol=solution) for d in (5e-9, 10e-9, 13e-9)]
        assert t[0] > t[1] > t[2]


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 2.5), st.floats(-1.5, 2.5))
def test_charge_integral_is_additive(a, b):
    m = 0.5 * (a + b)
    whole = charge_integral(DP, BAND, a, b)
    parts = charge_integral(DP, BAND, a, m) + charge_integral(DP, BAND, m, b)
    assert whole == pytest.approx(parts, rel=1e-8, abs=1e-10 * CONST.e * DP.N_d * (abs(b - a) + 1e-30))
