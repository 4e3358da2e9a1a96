"""Exception types shared across the package."""


class FsvffError(Exception):
    """Base class for package errors."""


class SizeError(FsvffError, ValueError):
    """Qubit count or matrix dimension outside the supported range."""


class ShapeError(FsvffError, ValueError):
    """Mismatched dimensions between states, circuits or operators."""


class ParseError(FsvffError, ValueError):
    """Malformed bitstring, Hamiltonian file or ansatz file."""


class BindingError(FsvffError, ValueError):
    """A gate parameter could not be resolved from the parameter vector."""


class ChannelError(FsvffError, ValueError):
    """Kraus operators do not form a trace-preserving channel."""


class UnsupportedParameterError(FsvffError, ValueError):
    """Parameter-shift rule requested for a gate it does not cover."""


class ExtractionError(FsvffError, RuntimeError):
    """No measurement peak survived the extraction threshold."""


class UnreliablePhaseError(FsvffError, RuntimeError):
    """Hadamard-test amplitude too small to define a phase."""


class ConfigError(FsvffError, ValueError):
    """Invalid experiment configuration."""


class DivergenceError(FsvffError, RuntimeError):
    """Optimization produced a non-finite or out-of-range cost."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class InconclusiveRankError(FsvffError, RuntimeError):
    """No Gramian determinant dropped below threshold by k_max."""

    def __init__(self, message, determinants=None):
        super().__init__(message)
        self.determinants = list(determinants) if determinants is not None else []


class AmbiguousBranchError(FsvffError, RuntimeError):
    """More than one phase branch is consistent with the measured data."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = list(candidates) if candidates is not None else []
