"""Phase-oscillator associative memory with continuous Hebbian learning."""
from .errors import (ConfigurationError, DegenerateSignalError, DivergenceError, FitDivergenceError,
                     PreconditionError)
from .phase import CouplingMatrix, NetworkTopology, integrate_step, integrate_trace, kuramoto_rhs, wrap_phase

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DegenerateSignalError", "DivergenceError", "FitDivergenceError", "PreconditionError",
    "CouplingMatrix", "NetworkTopology", "integrate_step", "integrate_trace", "kuramoto_rhs", "wrap_phase",
    "__version__",
]
