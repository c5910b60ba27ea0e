"""Exception hierarchy shared by all subpackages."""


class EoselmError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EoselmError, ValueError):
    """Invalid construction parameters or experiment configuration."""


class InputError(EoselmError, ValueError):
    """Malformed input data (wrong shape, non-finite values, bad file)."""


class PreconditionError(EoselmError, ValueError):
    """An operation was called in a state where it is not defined."""


class NumericalError(EoselmError, ArithmeticError):
    """A computation produced a singular system or non-finite values."""


class TopologyError(EoselmError, ValueError):
    """The network graph is invalid, e.g. split into islands."""


class PowerFlowError(NumericalError):
    """Newton-Raphson power flow failed to converge."""


class ExtractionError(EoselmError, ValueError):
    """A trajectory does not cover the instants a feature needs."""
