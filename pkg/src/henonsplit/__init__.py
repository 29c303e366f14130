"""Exponentially small splitting of separatrices for the area-preserving Henon map."""

__version__ = "0.1.0"
