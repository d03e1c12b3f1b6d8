"""Numerical laboratory for two-weight fractional Poincaré-Sobolev inequalities on dyadic grids."""

from .lattice import Cube, DyadicIndex, GridFunction
from .weights import ExponentConfig, ConfigError

__all__ = ["Cube", "DyadicIndex", "GridFunction", "ExponentConfig", "ConfigError"]
__version__ = "0.1.0"
