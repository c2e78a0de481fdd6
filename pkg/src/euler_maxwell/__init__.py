"""Pseudospectral 2D Euler-Maxwell simulator and estimates lab."""

__version__ = "0.1.0"
