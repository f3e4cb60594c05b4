"""Electrolyte-to-NV-spin sensing model: Gouy-Chapman screening, diamond
space charge, field-noise-induced dephasing and Stark shifts."""

__version__ = "0.1.0"
