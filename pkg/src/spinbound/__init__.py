"""Numerical checks of spinorial curvature bounds for maps between Riemannian manifolds."""

__version__ = "0.1.0"
