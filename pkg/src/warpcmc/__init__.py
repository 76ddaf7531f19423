"""Numerical verification of mean-curvature identities for graphs in warped products."""

__version__ = "0.1.0"
