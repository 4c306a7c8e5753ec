"""Numerical laboratory for doubly nonlinear anisotropic diffusion."""

__version__ = "0.1.0"
