"""Geometric model complexity for PCA-reduced Gaussian models and discrete families."""

__version__ = "0.1.0"
