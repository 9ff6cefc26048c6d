"""Exception types raised across the package."""


class NFLError(Exception):
    """Base class for all package errors."""


class OutsideCollar(NFLError, ValueError):
    """A point is too far from the boundary for the normal/projection to be defined."""


class NotOnBoundary(NFLError, ValueError):
    pass


class StepOutOfCollar(NFLError, RuntimeError):
    """A reflected-diffusion proposal left the boundary collar; reduce dt."""


class RegimeExceeded(NFLError, ValueError):
    """Exponential-moment bound requested outside its validity window."""


class GridTooCoarse(NFLError, ValueError):
    pass


class NonConvergent(NFLError, RuntimeError):
    pass


class DisconnectedMask(NFLError, ValueError):
    pass


class TooManyAtoms(NFLError, ValueError):
    pass


class DisconnectedSupport(NFLError, ValueError):
    pass


class DegenerateInput(NFLError, ValueError):
    pass


class SingularFit(NFLError, ValueError):
    pass


class ConfigInvalid(NFLError, ValueError):
    pass
