"""Exact toolkit for period maps of two-parameter toric Calabi-Yau families."""

__version__ = "0.1.0"
