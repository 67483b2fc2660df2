"""Entanglement-spectrum tower-of-states analysis for 2D spin-1/2 lattice models."""

__version__ = "0.1.0"
