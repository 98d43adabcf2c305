"""Exception hierarchy.

Every error carries a short machine-readable ``category`` used by the CLI
to pick an exit code and label the failure.
"""


class VortexRingError(Exception):
    category = "error"


class KernelDomainError(VortexRingError, ValueError):
    category = "domain"


class QuadratureError(VortexRingError, ArithmeticError):
    category = "quadrature-failure"


class SpecError(VortexRingError, ValueError):
    category = "spec"


class OverlapError(SpecError):
    category = "overlap"


class AxisViolationError(SpecError):
    category = "axis-violation"


class ZeroMassError(VortexRingError, ValueError):
    category = "zero-mass"


class AxisCrossingError(VortexRingError, ArithmeticError):
    """A particle reached r <= 0 during a step.

    ``trajectory`` holds the snapshots recorded before the failure when the
    error escapes from a full run.
    """

    category = "axis-crossing"

    def __init__(self, message, ring=None, index=None, trajectory=None):
        super().__init__(message)
        self.ring = ring
        self.index = index
        self.trajectory = trajectory


class CollisionError(VortexRingError, ArithmeticError):
    category = "collision"

    def __init__(self, message, pair=None, trajectory=None):
        super().__init__(message)
        self.pair = pair
        self.trajectory = trajectory


class ConfigError(VortexRingError, ValueError):
    category = "config-parse"
