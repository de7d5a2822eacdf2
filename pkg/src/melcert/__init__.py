"""Numerical nonintegrability certificates near resonant periodic orbits."""

__version__ = "0.1.0"
