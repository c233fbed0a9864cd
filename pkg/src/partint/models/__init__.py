"""Catalog of Hamiltonians, charts and coordinate maps."""

from partint.models.base import Model
from partint.models.catalog import CATALOG, build
from partint.models.central import CentralForceModel, central_force
from partint.models.magnetic import magnetic_pair
from partint.models.nbody import (
    JacobiCoordinates,
    inverse_jacobi_transform,
    jacobi_transform,
    nbody_cartesian,
    pair_rho,
    pairs,
)
from partint.models.rho import rho_hamiltonian, rho_model, rho_names
from partint.models.volume import (
    VolumeVector,
    cayley_menger_content2,
    vol_hamiltonian,
    vol_model,
    volume_jacobian,
    volume_variables,
)

__all__ = [
    "CATALOG", "CentralForceModel", "JacobiCoordinates", "Model", "VolumeVector", "build",
    "cayley_menger_content2", "central_force", "inverse_jacobi_transform", "jacobi_transform",
    "magnetic_pair", "nbody_cartesian", "pair_rho", "pairs", "rho_hamiltonian", "rho_model",
    "rho_names", "vol_hamiltonian", "vol_model", "volume_jacobian", "volume_variables",
]
