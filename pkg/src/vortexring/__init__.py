"""Vortex-particle simulation of concentrated axisymmetric vortex rings."""

__version__ = "0.1.0"
