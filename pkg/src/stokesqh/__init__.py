"""Stokes data and the quasi-Hamiltonian spaces built from it."""

__version__ = "0.1.0"
