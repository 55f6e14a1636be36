"""Numerical checks of the fidelity limit for quantum channels."""

__version__ = "0.1.0"
