"""Exact and spectral transition probabilities for isotropic random walks on
rank-2 spherical buildings and on special vertices of C~2 buildings."""

__version__ = "0.1.0"
