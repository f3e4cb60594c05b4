"""Brownian-dynamics check of the ionic density and field correlators.

Non-interacting point ions diffuse in a slab [0, L] with reflecting walls.
Folding a free Gaussian walk into [0, L] gives the reflecting walk exactly,
so each chunk of steps is one cumulative sum followed by a fold.

Correlators use the exact ensemble mean (N w / L per bin) rather than the
sample mean, and their standard errors come from block averaging.
Because N is fixed, the analytic references carry a -N p_i p_j term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .constants import CONST
from .errors import ResolutionError

_SQRT_PI = math.sqrt(math.pi)
_CHUNK = 256


@dataclass(frozen=True)
class McConfig:
    n_particles: int = 10_000  # per species
    box_length: float = 1e-6  # m
    area: float = 4e-6  # m^2
    diffusion: float = 2.3e-9  # m^2/s
    dt: float = 1e-7  # s
    n_steps: int = 20_000
    n_bins: int = 10
    seed: int = 12345
    probe_length: float = 1e-7  # field is sourced by ions in [0, probe_length]
    z_s: int = 2
    eps: float = 80.0 * CONST.eps0
    n_blocks: int = 32
    burn_in: float = 0.0  # s; raised to box_length^2/diffusion if shorter

    def __post_init__(self):
        positive = ("n_particles", "box_length", "area", "diffusion", "dt", "n_steps",
                    "n_bins", "probe_length", "z_s", "eps", "n_blocks")
        bad = [k for k in positive if not getattr(self, k) > 0]
        if bad:
            raise ValueError(f"must be positive: {', '.join(bad)}")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if not self.dt < self.box_length**2 / (100.0 * self.diffusion):
            raise ResolutionError("dt must be below box_length^2 / (100 diffusion)")
        if not self.probe_length < self.box_length:
            raise ValueError("probe_length must be shorter than box_length")
        if self.n_steps < 4 * self.n_blocks:
            raise ValueError("n_steps too small for the block count")

    @property
    def bin_width(self) -> float:
        return self.box_length / self.n_bins

    @property
    def step_rms(self) -> float:
        return math.sqrt(2.0 * self.diffusion * self.dt)

    @property
    def number_density(self) -> float:
        """Mean particles per m^3 for one species."""
        return self.n_particles / (self.box_length * self.area)

    @property
    def concentration(self) -> float:
        """Per-species concentration in mol/m^3."""
        return self.number_density / CONST.N_A

    @property
    def burn_in_time(self) -> float:
        return max(self.burn_in, self.box_length**2 / self.diffusion)


class LagPoint(NamedTuple):
    lag: float
    value: float
    stderr: float


@dataclass(frozen=True)
class McTrace:
    """Per-step observables of one run.

    ``bin_counts`` has shape (species, n_steps, n_bins); ``probe_counts``
    has shape (species, n_steps).
    """

    bin_counts: np.ndarray
    probe_counts: np.ndarray


def _check_resolution(cfg: McConfig) -> None:
    if cfg.bin_width < 3.0 * cfg.step_rms:
        raise ResolutionError(
            f"bin width {cfg.bin_width:.3g} m below 3 step rms {3 * cfg.step_rms:.3g} m"
        )


def _fold(x: np.ndarray, L: float) -> np.ndarray:
    y = np.mod(x, 2.0 * L)
    return np.where(y > L, 2.0 * L - y, y)


def _run_species(cfg: McConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    L, n = cfg.box_length, cfg.n_particles
    x = rng.uniform(0.0, L, n)
    # the reflecting kernel is exact for any step, so burn-in is one long jump
    x = _fold(x + rng.normal(0.0, math.sqrt(2.0 * cfg.diffusion * cfg.burn_in_time), n), L)
    counts = np.empty((cfg.n_steps, cfg.n_bins), dtype=np.int64)
    probe = np.empty(cfg.n_steps, dtype=np.int64)
    scale = cfg.n_bins / L
    offsets = None
    done = 0
    while done < cfg.n_steps:
        k = min(_CHUNK, cfg.n_steps - done)
        free = x + np.cumsum(rng.normal(0.0, cfg.step_rms, (k, n)), axis=0)
        pos = _fold(free, L)
        x = pos[-1].copy()
        idx = np.minimum((pos * scale).astype(np.int64), cfg.n_bins - 1)
        if offsets is None or offsets.shape[0] != k:
            offsets = (np.arange(k, dtype=np.int64) * cfg.n_bins)[:, None]
        flat = np.bincount((idx + offsets).ravel(), minlength=k * cfg.n_bins)
        counts[done:done + k] = flat.reshape(k, cfg.n_bins)
        probe[done:done + k] = np.count_nonzero(pos < cfg.probe_length, axis=1)
        done += k
    return counts, probe


def run_simulation(cfg: McConfig) -> McTrace:
    """Run both ionic species with independent streams derived from ``cfg.seed``."""
    _check_resolution(cfg)
    streams = np.random.SeedSequence(cfg.seed).spawn(2)
    results = [_run_species(cfg, np.random.default_rng(s)) for s in streams]
    return McTrace(
        bin_counts=np.stack([r[0] for r in results]),
        probe_counts=np.stack([r[1] for r in results]),
    )


def _lag_steps(cfg: McConfig, lag_grid: Sequence[float]) -> list[int]:
    steps = []
    for lag in lag_grid:
        if lag < 0:
            raise ValueError("lags must be >= 0")
        k = int(round(lag / cfg.dt))
        if k >= cfg.n_steps // 2:
            raise ValueError(f"lag {lag} s too long for a run of {cfg.n_steps} steps")
        steps.append(k)
    return steps


def _lag_estimate(a: np.ndarray, b: np.ndarray, k: int, n_blocks: int) -> tuple[float, float]:
    """Mean of a(t+k) b(t) and its block-averaging standard error.

    ``a`` and ``b`` may carry a leading replica axis that is averaged first.
    """
    prod = a[..., k:] * b[..., : b.shape[-1] - k]
    if prod.ndim > 1:
        prod = prod.mean(axis=0)
    m = prod.size // n_blocks
    blocks = prod[: m * n_blocks].reshape(n_blocks, m).mean(axis=1)
    return float(prod.mean()), float(blocks.std(ddof=1) / math.sqrt(n_blocks))


def simulate_density_correlator(cfg: McConfig, lag_grid: Sequence[float], bins: tuple[int, int] | None = None,
                                *, trace: McTrace | None = None) -> list[LagPoint]:
    """<dn_i(t) dn_j(0)> in 1/m^6 for bins (i, j), averaged over both species.

    Defaults to the central bin paired with itself.
    """
    _check_resolution(cfg)
    if bins is None:
        bins = (cfg.n_bins // 2, cfg.n_bins // 2)
    i, j = bins
    if not (0 <= i < cfg.n_bins and 0 <= j < cfg.n_bins):
        raise ValueError("bin index out of range")
    steps = _lag_steps(cfg, lag_grid)
    if trace is None:
        trace = run_simulation(cfg)
    mean = cfg.n_particles / cfg.n_bins
    di = trace.bin_counts[:, :, i] - mean
    dj = trace.bin_counts[:, :, j] - mean
    to_density = 1.0 / (cfg.area * cfg.bin_width) ** 2
    out = []
    for lag_k in steps:
        v, e = _lag_estimate(di, dj, lag_k, cfg.n_blocks)
        out.append(LagPoint(lag_k * cfg.dt, v * to_density, e * to_density))
    return out


def _field_per_count(cfg: McConfig) -> float:
    return cfg.z_s * (CONST.F / CONST.N_A) / (cfg.eps * cfg.area)


def simulate_field_correlator(cfg: McConfig, lag_grid: Sequence[float], *,
                              trace: McTrace | None = None) -> list[LagPoint]:
    """<dE(0,t) dE(0,0)> in (V/m)^2 from the net charge in [0, probe_length]."""
    _check_resolution(cfg)
    steps = _lag_steps(cfg, lag_grid)
    if trace is None:
        trace = run_simulation(cfg)
    mean = cfg.n_particles * cfg.probe_length / cfg.box_length
    net = (trace.probe_counts[0] - mean) - (trace.probe_counts[1] - mean)
    scale = _field_per_count(cfg) ** 2
    out = []
    for lag_k in steps:
        v, e = _lag_estimate(net, net, lag_k, cfg.n_blocks)
        out.append(LagPoint(lag_k * cfg.dt, v * scale, e * scale))
    return out


def _second_antiderivative(u: float, s: float) -> float:
    """H with H'' = Gaussian of width s (variance s^2/2); H(u) = |u|/2 at s = 0."""
    if s == 0.0:
        return 0.5 * abs(u)
    return 0.5 * (u * math.erf(u / s) + (s / _SQRT_PI) * math.exp(-((u / s) ** 2)))


def _box_overlap(a: float, b: float, c: float, d: float, s: float) -> float:
    """int_a^b int_c^d G_s(x - y) dy dx."""
    H = _second_antiderivative
    return H(b - c, s) - H(a - c, s) - H(b - d, s) + H(a - d, s)


def _reflected_overlap(a: float, b: float, c: float, d: float, L: float, s: float) -> float:
    """Box overlap for the reflecting kernel on [0, L] by the method of images."""
    n_img = int(math.ceil(6.0 * s / (2.0 * L))) + 1
    total = 0.0
    for k in range(-n_img, n_img + 1):
        shift = 2.0 * k * L
        total += _box_overlap(a, b, c + shift, d + shift, s)
        if s > 0.0:
            total += _box_overlap(a, b, shift - d, shift - c, s)
    return total


def density_correlator_analytic(cfg: McConfig, lag: float, bins: tuple[int, int], *,
                                images: bool = True, fixed_number: bool = True) -> float:
    """Bin-averaged diffusion-kernel correlator in 1/m^6.

    With ``images=False`` and ``fixed_number=False`` this is the free-space
    Gaussian kernel n/(A sqrt(4 pi D t)) exp(-dz^2/(4 D t)) averaged over both bins.
    """
    w = cfg.bin_width
    i, j = bins
    a, b = i * w, (i + 1) * w
    c, d = j * w, (j + 1) * w
    s = math.sqrt(4.0 * cfg.diffusion * lag)
    overlap = (_reflected_overlap(a, b, c, d, cfg.box_length, s) if images
               else _box_overlap(a, b, c, d, s))
    value = cfg.number_density * overlap / (cfg.area * w * w)
    if fixed_number:
        value -= cfg.number_density / (cfg.area * cfg.box_length)
    return value


def field_correlator_analytic(cfg: McConfig, lag: float) -> float:
    """Fixed-N reflecting-wall reference for ``simulate_field_correlator``."""
    s = math.sqrt(4.0 * cfg.diffusion * lag)
    P, L = cfg.probe_length, cfg.box_length
    per_species = cfg.n_particles * (_reflected_overlap(0.0, P, 0.0, P, L, s) / L - (P / L) ** 2)
    return 2.0 * per_species * _field_per_count(cfg) ** 2
