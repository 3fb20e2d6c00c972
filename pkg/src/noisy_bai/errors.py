"""Exception types raised across the package."""


class NoisyBAIError(Exception):
    """Base class for all package errors."""


class ChannelError(NoisyBAIError, ValueError):
    """Malformed channel description."""


class SingularChannel(NoisyBAIError):
    """The transition matrix is (numerically) singular and cannot be unmixed."""


class NonIdentifiable(SingularChannel):
    """Best arm cannot be recovered from command-conditioned means."""


class CapExceeded(NoisyBAIError):
    """A combinatorial object would exceed its configured size cap."""


class NotIndependent(NoisyBAIError, ValueError):
    """A vertex set claimed to be independent has an edge inside it."""


class InvalidOutput(NoisyBAIError, ValueError):
    """A channel output that no admissible input could have produced."""


class ZeroErrorViolation(NoisyBAIError):
    """A decoder returned something other than the transmitted message."""


class CodeTooSmall(NoisyBAIError, ValueError):
    pass


class PacketTooSmall(NoisyBAIError, ValueError):
    pass


class UncoveredArm(NoisyBAIError, ValueError):
    pass


class RunawayRun(NoisyBAIError):
    """A run hit its hard round cap before stopping."""


class UnknownCriterion(NoisyBAIError, KeyError):
    pass
