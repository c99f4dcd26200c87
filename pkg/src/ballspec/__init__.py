"""Spectral approximation and spectral-Galerkin solvers on the unit disk and ball."""

__version__ = "0.1.0"
