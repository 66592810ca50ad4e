"""Exception hierarchy. Every error is a ``ValueError`` so callers that only
care about bad input can catch that."""


class RGGError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(RGGError):
    pass


class InvalidParameterError(RGGError):
    pass


class InvalidRadiusError(RGGError):
    pass


class InvalidKernelError(RGGError):
    pass


class InvalidMeasureError(RGGError):
    pass


class UndefinedMeasureError(InvalidMeasureError):
    """Raised when an empirical measure is requested on an empty graph."""


class DomainError(RGGError):
    """Argument outside the domain of a rate function or solver."""


class DegenerateInputError(RGGError):
    pass
