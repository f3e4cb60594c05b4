"""Exception hierarchy. Every solver failure derives from ``NVElectroError``."""

from __future__ import annotations


class NVElectroError(Exception):
    """Base class for all package errors."""


class ScreeningRegimeError(NVElectroError):
    """kappa*Delta is too small for the Gouy-Chapman closed form."""


class QuadratureError(NVElectroError):
    """Adaptive integration did not reach the requested tolerance."""


class RadicandNegative(NVElectroError):
    """The first-integral radicand went negative: the target potential lies
    beyond a turning point of the profile."""

    def __init__(self, message: str, turning_point: float | None = None):
        super().__init__(message)
        self.turning_point = turning_point


class NoBracket(NVElectroError):
    """No sign change of the matching residual was found."""


class NonConverged(NVElectroError):
    """Iterative solve hit its iteration limit or a residual discontinuity."""


class DerivativeUnstable(NVElectroError):
    """Finite-difference estimates at two step sizes disagree too much."""


class CarrierOverflow(NVElectroError, OverflowError):
    """A Boltzmann exponent exceeded the safe range."""


class ResolutionError(NVElectroError):
    """Monte Carlo bins are too narrow for the chosen time step."""


class InsufficientPoints(NVElectroError):
    """Too few valid points for a fit."""


class ConfigError(NVElectroError):
    """Invalid or unknown configuration entry."""
