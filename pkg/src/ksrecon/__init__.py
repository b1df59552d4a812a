"""Reconstruction toolkit for undersampled multi-coil Cartesian k-space."""

__version__ = "0.1.0"
