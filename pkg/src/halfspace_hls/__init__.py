"""Numerical toolkit for the sharp extension inequality on the upper half space."""
__version__ = "0.1.0"
