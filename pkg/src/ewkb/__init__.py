"""Exact WKB toolkit for the periodic potential V(x) = 1 - cos(Nx)."""

__version__ = "0.1.0"
