"""Dimers on contracting square-hexagon lattices."""

__version__ = "0.1.0"
