"""Exponent elimination for x^2 + D = y^n with D an S-unit, S = {2, 3, 5, 7, 11}."""

__version__ = "0.1.0"
