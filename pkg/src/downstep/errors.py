"""Exception and warning hierarchy shared by all modules."""


class DownstepError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(DownstepError):
    """Invalid experiment configuration (CLI exit code 2)."""


class NumericalError(DownstepError):
    """A numerical precondition or postcondition failed (CLI exit code 3)."""


# qcore
class UnresolvedPacket(NumericalError):
    pass


class RegionOutOfGrid(NumericalError):
    pass


# stationary / spectral
class NonpositiveEnergy(NumericalError):
    pass


class NonpositiveWidth(NumericalError):
    pass


class DegenerateInput(NumericalError):
    pass


class EvanescentAsymptote(NumericalError):
    pass


class SliceCountTooSmall(NumericalError):
    pass


class LeftMovingPacket(NumericalError):
    pass


class UnsupportedPotential(NumericalError):
    pass


# tdse
class UnstableStep(NumericalError):
    pass


class PacketsNotSeparated(NumericalError):
    pass


# gamow
class NotContracting(NumericalError):
    pass


class NonDecayRoot(NumericalError):
    pass


# metastable
class GridTooSmall(NumericalError):
    pass


class WallReturn(NumericalError):
    pass


class WallContact(UserWarning):
    """Probability density reached the Dirichlet walls; later results are flagged."""


class OutsideRadius(UserWarning):
    """A fixed point left the ball of radius 1/sqrt(2) where uniqueness is proven."""
