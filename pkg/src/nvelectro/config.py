"""Flat ``section.key=value`` run configuration.

Every key has a default; files and ``--set`` overrides may only name known
keys. Values are parsed by the type of their default.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable

from .diamond import DiamondParams
from .electrolyte import ElectrolyteParams
from .errors import ConfigError, ResolutionError
from .nv_spin import NVParams, ReadoutParams, T2STAR_CONVENTIONS
from .pipeline import NoiseModel
from .stochastic_oracle import McConfig


@dataclass(frozen=True)
class SystemSettings:
    T: float = 298.0  # K, shared by the electrolyte and the diamond


@dataclass(frozen=True)
class SweepSettings:
    cb_min: float = 1e-2
    cb_max: float = 1e3
    n_points: int = 25
    depth: float = 10e-9  # m
    workers: int = 0  # 0 = one per CPU


@dataclass(frozen=True)
class StarkSettings:
    pairs: str = "0.01:0.1,0.1:1,1:10"


@dataclass(frozen=True)
class CorrelatorSettings:
    t_min: float = 1e-6  # s
    t_max: float = 1e2
    n_points: int = 60


@dataclass(frozen=True)
class RamseySettings:
    tau_max: float = 50e-6  # s
    n_points: int = 201
    psi: float = 0.0  # rad


@dataclass(frozen=True)
class SensitivitySettings:
    A: float = 39295.0  # Hz (mol/m^3)^-B
    B: float = 0.417
    tau: float = 10e-6  # s
    c_b: float = 10.0  # mol/m^3
    cb_min: float = 1e-2
    cb_max: float = 1e3
    n_points: int = 50


@dataclass(frozen=True)
class OracleSettings:
    lags: str = "0,2e-7,5e-7,1e-6,2e-6,4e-6"
    bin_a: int = 5
    bin_b: int = 5


# section name -> (attribute on RunConfig, settings class, keys owned elsewhere)
SECTIONS: dict[str, tuple[type, frozenset]] = {
    "system": (SystemSettings, frozenset()),
    "electrolyte": (ElectrolyteParams, frozenset({"T"})),
    "diamond": (DiamondParams, frozenset({"T"})),
    "nv": (NVParams, frozenset()),
    "readout": (ReadoutParams, frozenset()),
    "mc": (McConfig, frozenset()),
    "sweep": (SweepSettings, frozenset()),
    "noise": (NoiseModel, frozenset()),
    "stark": (StarkSettings, frozenset()),
    "correlator": (CorrelatorSettings, frozenset()),
    "ramsey": (RamseySettings, frozenset()),
    "sensitivity": (SensitivitySettings, frozenset()),
    "oracle": (OracleSettings, frozenset()),
}


@dataclass(frozen=True)
class RunConfig:
    system: SystemSettings = field(default_factory=SystemSettings)
    electrolyte: ElectrolyteParams = field(default_factory=ElectrolyteParams)
    diamond: DiamondParams = field(default_factory=DiamondParams)
    nv: NVParams = field(default_factory=NVParams)
    readout: ReadoutParams = field(default_factory=ReadoutParams)
    mc: McConfig = field(default_factory=McConfig)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    noise: NoiseModel = field(default_factory=NoiseModel)
    stark: StarkSettings = field(default_factory=StarkSettings)
    correlator: CorrelatorSettings = field(default_factory=CorrelatorSettings)
    ramsey: RamseySettings = field(default_factory=RamseySettings)
    sensitivity: SensitivitySettings = field(default_factory=SensitivitySettings)
    oracle: OracleSettings = field(default_factory=OracleSettings)

    def items(self) -> list[tuple[str, Any]]:
        """All resolved ``section.key`` values in a stable order."""
        out = []
        for section, (cls, skip) in SECTIONS.items():
            obj = getattr(self, section)
            for f in fields(cls):
                if f.name not in skip:
                    out.append((f"{section}.{f.name}", getattr(obj, f.name)))
        return out

    def echo(self) -> str:
        return "".join(f"{k}={_format_value(v)}\n" for k, v in self.items())

    def digest(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()


def _format_value(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _known_keys() -> dict[str, dict[str, Any]]:
    keys = {}
    for section, (cls, skip) in SECTIONS.items():
        defaults = cls()
        keys[section] = {f.name: getattr(defaults, f.name) for f in fields(cls) if f.name not in skip}
    return keys


def _parse_value(key: str, text: str, default: Any) -> Any:
    text = text.strip()
    try:
        if default is None:
            return None if text.lower() in ("none", "") else float(text)
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return int(value)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None
    return text


def parse_lines(lines: Iterable[str], source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> text`` pairs. Blank lines and ``#`` comments are skipped."""
    raw = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        raw[k.strip()] = v.strip()
    return raw


def build_config(raw: dict[str, str]) -> RunConfig:
    """Validate keys, parse values and construct every parameter set."""
    known = _known_keys()
    updates: dict[str, dict[str, Any]] = {s: {} for s in SECTIONS}
    for key, text in raw.items():
        section, _, name = key.partition(".")
        if section not in known or name not in known[section]:
            raise ConfigError(f"unknown config key {key!r}")
        updates[section][name] = _parse_value(key, text, known[section][name])
    T = updates["system"].get("T", SystemSettings().T)
    updates["electrolyte"]["T"] = T
    updates["diamond"]["T"] = T
    if "seed" in updates["mc"] and updates["mc"]["seed"] < 0:
        raise ConfigError("mc.seed must be >= 0")
    nt = updates["noise"].get("t2star_convention")
    if nt is not None and nt not in T2STAR_CONVENTIONS:
        raise ConfigError(f"noise.t2star_convention must be one of {T2STAR_CONVENTIONS}")
    parts = {}
    try:
        for section, (cls, _) in SECTIONS.items():
            parts[section] = cls(**updates[section])
        cfg = RunConfig(**parts)
        _validate(cfg)
    except (ValueError, TypeError, ResolutionError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.noise.species_factor not in (1, 2):
        raise ValueError("noise.species_factor must be 1 or 2")
    if not 0.0 < cfg.sweep.depth < cfg.diamond.z_bulk:
        raise ValueError("sweep.depth must lie inside (0, diamond.z_bulk)")
    if not 0 < cfg.sweep.cb_min <= cfg.sweep.cb_max:
        raise ValueError("need 0 < sweep.cb_min <= sweep.cb_max")
    if cfg.sweep.n_points < 1 or cfg.sweep.workers < 0:
        raise ValueError("sweep.n_points must be >= 1 and sweep.workers >= 0")
    stark_pairs(cfg)
    oracle_lags(cfg)
    if not (0 <= cfg.oracle.bin_a < cfg.mc.n_bins and 0 <= cfg.oracle.bin_b < cfg.mc.n_bins):
        raise ValueError("oracle bins out of range")


def stark_pairs(cfg: RunConfig) -> list[tuple[float, float]]:
    pairs = []
    for item in filter(None, (s.strip() for s in cfg.stark.pairs.split(","))):
        lo, sep, hi = item.partition(":")
        if not sep:
            raise ValueError(f"stark.pairs entry {item!r} must be lo:hi")
        pairs.append((float(lo), float(hi)))
    return pairs


def oracle_lags(cfg: RunConfig) -> list[float]:
    lags = [float(s) for s in cfg.oracle.lags.split(",") if s.strip()]
    if not lags or min(lags) < 0:
        raise ValueError("oracle.lags must be a non-empty list of non-negative times")
    return lags


def load_config(path: str | Path | None = None, overrides: Iterable[str] = (),
                seed: int | None = None) -> RunConfig:
    """File values, then ``--set`` overrides, then ``--seed``."""
    raw: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        raw.update(parse_lines(text.splitlines(), str(path)))
    raw.update(parse_lines(overrides, "--set"))
    if seed is not None:
        raw["mc.seed"] = str(seed)
    return build_config(raw)


def replace_section(cfg: RunConfig, section: str, **changes) -> RunConfig:
    return replace(cfg, **{section: dataclasses.replace(getattr(cfg, section), **changes)})
