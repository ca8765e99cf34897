"""Pseudospectral liquid-crystal flow and harmonic-map heat flow on the periodic plane."""

__version__ = "0.1.0"
