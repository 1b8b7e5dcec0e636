"""Exception types raised across the package."""


class BMCXError(ValueError):
    """Base class for all domain errors raised by bmcx."""


class DegenerateTriple(BMCXError):
    pass


class Indeterminate(BMCXError):
    pass


class OutOfDisk(BMCXError):
    pass


class OutsideDisk(BMCXError):
    """Evaluation point lies outside the estimated disk of convergence."""


class InsufficientSamples(BMCXError):
    pass


class NotRealValued(BMCXError):
    pass


class OutsideDomain(BMCXError):
    pass


class UnsupportedVariant(BMCXError):
    pass


class StencilOutsideDomain(BMCXError):
    pass


class InvalidExponents(BMCXError):
    pass


class CoincidentPoints(BMCXError):
    pass


class PolePoint(BMCXError):
    pass


class OriginPoint(BMCXError):
    pass


class StartOutsideDomain(BMCXError):
    pass


class StartAtOrigin(BMCXError):
    pass


class NumericFailure(RuntimeError):
    """A simulation produced no usable estimate (e.g. every path censored)."""
