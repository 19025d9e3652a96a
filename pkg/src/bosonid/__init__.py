"""Partially distinguishable bosons in linear optics."""

__version__ = "0.1.0"
