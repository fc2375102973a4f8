"""Exact-arithmetic analysis of affine variational inequalities over polyhedra."""

__version__ = "0.1.0"
