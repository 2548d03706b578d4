"""Numerical laboratory for cocycles over torus rotations."""
__version__ = "0.1.0"
