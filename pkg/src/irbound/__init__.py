"""Infrared bounds, reflection positivity and long-range-order certificates for quantum spin systems."""

__version__ = "0.1.0"

from .exceptions import ConfigError, ConvergenceError, DomainError, IRBoundError, ParameterError, ResourceError
from .lattice import CouplingTable, Plane, Torus, epsilon_k, family_from_dict, momenta, rp_check
from .ed import GibbsState, SpinModel, SpinSystem, build_hamiltonian, gibbs, spin_matrices
from .certificates import (
    CertificateInput,
    alpha_free_condition,
    general_lro_bound,
    limit_integrals,
    momentum_sums,
    nn_lro_bounds,
    scan,
)

__all__ = [
    "__version__",
    "IRBoundError",
    "ParameterError",
    "ConvergenceError",
    "ConfigError",
    "ResourceError",
    "DomainError",
    "Torus",
    "CouplingTable",
    "Plane",
    "epsilon_k",
    "family_from_dict",
    "momenta",
    "rp_check",
    "SpinSystem",
    "SpinModel",
    "GibbsState",
    "build_hamiltonian",
    "gibbs",
    "spin_matrices",
    "CertificateInput",
    "alpha_free_condition",
    "general_lro_bound",
    "limit_integrals",
    "momentum_sums",
    "nn_lro_bounds",
    "scan",
]
