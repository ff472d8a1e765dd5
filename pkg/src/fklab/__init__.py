"""Exact finite-volume computations for the spinless Falicov-Kimball model."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
