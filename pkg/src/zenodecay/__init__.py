"""Decay of an unstable two-level system under indirect, imperfect measurement."""

__version__ = "0.1.0"
