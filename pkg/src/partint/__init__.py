"""Particular integrals of Hamiltonian systems: exact and numeric Poisson
brackets, symplectic integration and the reduced N-body Hamiltonians."""

from partint.expr import Expression, parse

__all__ = ["Expression", "parse"]
__version__ = "0.1.0"
