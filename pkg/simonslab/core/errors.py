"""Exception hierarchy shared by every simonslab module.

A failed identity check is a reported outcome, never an exception; the
classes below are raised only when a computation cannot be carried out.
"""


class SimonsLabError(Exception):
    """Base class for all simonslab errors"""


class DomainError(SimonsLabError, ValueError):
    """Kernel evaluated outside its domain (e.g. at the origin of a singular family)"""


class GeometryError(SimonsLabError, ValueError):
    """Point off the surface, degenerate normal or frame"""


class ParameterError(SimonsLabError, ValueError):
    """Inconsistent numerical parameters"""


class CapabilityError(SimonsLabError):
    """The object does not provide the data an operation needs"""


class UnsupportedOperation(CapabilityError):
    """Operation undefined for this kernel family"""


class IntegrandError(SimonsLabError, ArithmeticError):
    """Non-finite integrand value at a retained quadrature node"""

    def __init__(self, index, point, value):
        self.index = int(index)
        self.point = tuple(float(c) for c in point)
        self.value = value
        super().__init__(
            f"non-finite integrand {value!r} at node {self.index} {self.point}"
        )


class TruncationError(SimonsLabError):
    """A field is supported outside the region a rule covers"""


class DivergentTailError(SimonsLabError):
    """Kernel decay too slow for the surface growth exponent"""


class HypothesisError(SimonsLabError):
    """A hypothesis of the identity under test does not hold"""


class DegenerateGradientError(SimonsLabError):
    """Level-set gradient below the cutoff at the evaluation point"""


class ResolutionError(SimonsLabError):
    """Parameter below what the current discretization can resolve"""


class NumericError(SimonsLabError, ArithmeticError):
    """A finite-difference stencil produced a non-finite value"""

    def __init__(self, message, stencil=None):
        self.stencil = stencil
        super().__init__(message if stencil is None else f"{message}: {stencil}")


class ConfigError(SimonsLabError):
    """Configuration does not match the schema; carries the dotted field path"""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
