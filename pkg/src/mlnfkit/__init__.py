"""Numerical checks for the modified Langevin noise formalism."""

__version__ = "0.1.0"
