"""Degenerate quadratic Lagrangians: sigma-splittings, weakly associated
Hamiltonian forms, constraint algorithms and the Koszul-Tate/BRST machinery."""

__version__ = "0.1.0"

from .poly import I, GaussianRational, Polynomial, VariableTable  # noqa: E402
from .quadratic import QuadraticLagrangian, compute_sigma0, kernel_connection, projectors  # noqa: E402
from .hamiltonian import build_H_sigma_gamma, check_weak_association, constrained_hamiltonian, hamiltonian_map  # noqa: E402

__all__ = [
    "I",
    "GaussianRational",
    "Polynomial",
    "VariableTable",
    "QuadraticLagrangian",
    "compute_sigma0",
    "kernel_connection",
    "projectors",
    "build_H_sigma_gamma",
    "check_weak_association",
    "constrained_hamiltonian",
    "hamiltonian_map",
]
