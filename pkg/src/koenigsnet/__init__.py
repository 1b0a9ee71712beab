"""Discrete Koenigs nets: touching conics, inscribed quadrics, grids and curves."""

__version__ = "0.1.0"
