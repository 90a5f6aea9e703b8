"""Numerical laboratory for degenerate fully nonlinear free transmission problems."""

__version__ = "0.1.0"
