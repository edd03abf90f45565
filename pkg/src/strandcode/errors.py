"""Package exception hierarchy."""


class StrandcodeError(Exception):
    """Base class for all package-specific failures."""


class InfeasibleParameters(StrandcodeError):
    """Requested parameters fail a derive-time feasibility check."""


class LayoutError(StrandcodeError):
    """Input does not match the structural layout it claims to have."""


class DecodeFailure(StrandcodeError):
    """No codeword within the allowed error budget explains the input."""


class SearchExhausted(StrandcodeError):
    """A randomized constructive search ran out of attempts."""
