"""Online sequential ELM ensembles, binary Jaya feature selection and a
classical-model transient stability simulator."""

from eoselm.errors import (
    ConfigurationError,
    EoselmError,
    ExtractionError,
    InputError,
    NumericalError,
    PowerFlowError,
    PreconditionError,
    TopologyError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "EoselmError",
    "ExtractionError",
    "InputError",
    "NumericalError",
    "PowerFlowError",
    "PreconditionError",
    "TopologyError",
]
