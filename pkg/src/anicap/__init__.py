"""Numerical laboratory for anisotropic p-capacity bounds of star-shaped bodies."""

__version__ = "0.1.0"
