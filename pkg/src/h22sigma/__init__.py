"""Numerical laboratory for the H^(2|2) supersymmetric hyperbolic sigma model."""

__version__ = "0.1.0"
