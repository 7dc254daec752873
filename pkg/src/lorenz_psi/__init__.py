"""Logarithmic psi-series singular solutions of the Lorenz system."""

__version__ = "0.1.0"
