"""Concentration sweeps, power-law calibration and Stark-sensing tables."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .diamond import BandModel, DiamondParams, band_model, field_at_nv, solve_interface, transfer_derivative
from .electrolyte import ElectrolyteParams, white_noise_variance
from .errors import InsufficientPoints, NVElectroError
from .nv_spin import NVParams, ReadoutParams, nu_fluctuation_correlator, sensitivity, stark_shift, t2_star

MIN_FIT_POINTS = 5


def default_cb_grid(n: int = 25, lo: float = 1e-2, hi: float = 1e3) -> list[float]:
    return [float(c) for c in np.logspace(math.log10(lo), math.log10(hi), n)]


@dataclass(frozen=True)
class NoiseModel:
    """Conventions that turn the interface-field plateau into 1/T2*."""

    species_factor: int = 2
    t2star_convention: str = "curvature"


@dataclass(frozen=True)
class SweepPoint:
    c_b: float
    phi0: float
    E_e0: float
    E_nv: float
    transfer: float
    plateau: float
    inv_T2_star: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class PowerLawFit:
    A: float
    B: float
    rms_log_residual: float
    n_points: int

    def __call__(self, c_b: float) -> float:
        return self.A * c_b**self.B


class StarkRow(NamedTuple):
    c_b_lo: float
    c_b_hi: float
    delta_E: float  # V/m
    delta_shift: float  # Hz, NV-frame projection applied
    delta_shift_unprojected: float  # Hz, d_perp times the lab field change


def _failed(c_b: float, exc: Exception) -> SweepPoint:
    nan = math.nan
    return SweepPoint(c_b, nan, nan, nan, nan, nan, nan, error=f"{type(exc).__name__}: {exc}")


def sweep_point(ep_template: ElectrolyteParams, dp: DiamondParams, band: BandModel, nv: NVParams,
                depth: float, c_b: float, noise: NoiseModel = NoiseModel()) -> SweepPoint:
    """Solve one concentration. Solver failures are returned, not raised."""
    try:
        ep = replace(ep_template, c_b=c_b)
        sol = solve_interface(ep, dp, band)
        E_nv = field_at_nv(sol, dp, band, depth)
        transfer = transfer_derivative(ep, dp, band, depth, sol=sol)
        plateau = white_noise_variance(ep, noise.species_factor)
        c0 = nu_fluctuation_correlator(nv, transfer, plateau)
        T2 = t2_star(c0, noise.t2star_convention)
    except (NVElectroError, ValueError, ArithmeticError) as exc:
        return _failed(c_b, exc)
    return SweepPoint(c_b, sol.phi0, sol.E_e0, E_nv, transfer, plateau, 1.0 / T2)


def _sweep_task(args) -> SweepPoint:
    return sweep_point(*args)


def run_sweep(ep_template: ElectrolyteParams, dp: DiamondParams, band: BandModel | None, nv: NVParams,
              depth: float, cb_grid: Sequence[float], noise: NoiseModel = NoiseModel(),
              *, workers: int | None = None) -> list[SweepPoint]:
    """One SweepPoint per concentration, in input order.

    Points run in separate processes when more than one worker is available.
    """
    if not cb_grid:
        return []
    if any(not c > 0 for c in cb_grid):
        raise ValueError("concentrations must be positive")
    if band is None:
        band = band_model(dp)
    tasks = [(ep_template, dp, band, nv, depth, float(c), noise) for c in cb_grid]
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_task, tasks))


def apply_noise_model(points: Sequence[SweepPoint], ep_template: ElectrolyteParams, nv: NVParams,
                      noise: NoiseModel) -> list[SweepPoint]:
    """Recompute plateau and 1/T2* of solved points under another convention.

    The interface solve and transfer derivative do not depend on the noise
    convention, so they are reused as they are.
    """
    out = []
    for p in points:
        if not p.ok:
            out.append(p)
            continue
        plateau = white_noise_variance(replace(ep_template, c_b=p.c_b), noise.species_factor)
        T2 = t2_star(nu_fluctuation_correlator(nv, p.transfer, plateau), noise.t2star_convention)
        out.append(replace(p, plateau=plateau, inv_T2_star=1.0 / T2))
    return out


def _fit_data(points: Iterable) -> tuple[np.ndarray, np.ndarray]:
    xs, ys, skipped = [], [], 0
    for p in points:
        if isinstance(p, SweepPoint):
            if not p.ok or not math.isfinite(p.inv_T2_star):
                skipped += 1
                continue
            c, y = p.c_b, p.inv_T2_star
        else:
            c, y = p
        if not (c > 0 and y > 0):
            raise ValueError("power-law fit needs positive c_b and 1/T2*")
        xs.append(c)
        ys.append(y)
    if skipped:
        warnings.warn(f"{skipped} failed sweep points excluded from the fit", RuntimeWarning)
    return np.log(xs), np.log(ys)


def fit_power_law(points: Iterable) -> PowerLawFit:
    """Least squares of ln(1/T2*) on ln(c_b).

    ``points`` holds SweepPoints or (c_b, inv_T2_star) pairs.
    """
    lx, ly = _fit_data(points)
    if lx.size < MIN_FIT_POINTS:
        raise InsufficientPoints(f"need at least {MIN_FIT_POINTS} points, got {lx.size}")
    B, lnA = np.polyfit(lx, ly, 1)
    resid = ly - (lnA + B * lx)
    return PowerLawFit(A=float(math.exp(lnA)), B=float(B),
                       rms_log_residual=float(math.sqrt(np.mean(resid**2))), n_points=int(lx.size))


def stark_sensing_table(ep_template: ElectrolyteParams, dp: DiamondParams, band: BandModel | None,
                        nv: NVParams, depth: float, cb_pairs: Sequence[tuple[float, float]]) -> list[StarkRow]:
    """Field change at the NV between two concentrations and the resulting Stark shift change."""
    if band is None:
        band = band_model(dp)
    fields: dict[float, float] = {}

    def e_nv(c):
        if c not in fields:
            sol = solve_interface(replace(ep_template, c_b=c), dp, band)
            fields[c] = field_at_nv(sol, dp, band, depth)
        return fields[c]

    rows = []
    for lo, hi in cb_pairs:
        if not (lo > 0 and hi > 0):
            raise ValueError("concentrations must be positive")
        dE = 0.0 if lo == hi else e_nv(hi) - e_nv(lo)
        rows.append(StarkRow(lo, hi, dE,
                             abs(stark_shift(nv, dE, projected=True)),
                             abs(stark_shift(nv, dE, projected=False))))
    return rows


def sensitivity_curve(fit: PowerLawFit, cb_grid: Sequence[float], tau: float,
                      readout: ReadoutParams) -> list[tuple[float, float]]:
    return [(c, sensitivity(fit, c, tau, readout)) for c in cb_grid]
