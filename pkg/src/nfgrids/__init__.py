"""Grids and shapes of deformed lattices of quadratic and cubic number fields."""

__version__ = "0.1.0"
