"""Exception hierarchy shared by all modules."""


class XYLabError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(XYLabError, ValueError):
    """Invalid user-supplied parameters or configuration documents."""


class StructuralError(XYLabError, ValueError):
    """Inputs with inconsistent shapes, index sets or broken symmetry."""


class SizeGuardError(XYLabError, ValueError):
    """A dense many-body object was requested beyond the memory guard."""


class NumericError(XYLabError, RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""


class DegeneracyError(NumericError):
    """Spectrum too close to degenerate for a well-defined spectral projection."""


class StateCorruptionError(NumericError):
    """Correlation matrix eigenvalues left the physical interval [0, 1]."""


class UnderflowError(NumericError):
    """Profile values too small to be fitted on a log scale."""


class EnsembleFailure(XYLabError, RuntimeError):
    """Every realization of an ensemble was rejected."""
