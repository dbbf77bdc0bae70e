"""Exact real-time simulation of the Z_n Schwinger model on small open chains."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    ContractViolation,
    DomainError,
    NotEstimable,
    NumericalFailure,
    ZnQedError,
)
from .model import (  # noqa: E402
    FermionConfig,
    GaugeInvariantBasis,
    ModelParams,
    SparseOperator,
    StateVector,
    build_basis,
    build_hamiltonian,
    centered_string_sites,
    dirac_vacuum,
    field_eigenvalue,
    string_state,
)
from .evolve import IntegratorSpec, Method, Trajectory, evolve, step  # noqa: E402
