"""Exception taxonomy shared by all omniex modules."""


class OmniexError(Exception):
    """Base class for every library-specific error."""


class ZeroInverse(OmniexError):
    """Multiplicative inverse of zero was requested."""


class DimensionMismatch(OmniexError):
    """Matrix or vector shapes (or moduli) are incompatible."""


class TooLarge(OmniexError):
    """Instance exceeds the cap of an exhaustive routine."""


class NegativeWeight(OmniexError):
    """A cost vector entry is negative (or not finite)."""


class ConstraintViolation(OmniexError):
    """An argument violates a structural precondition (e.g. j not in A)."""


class NonConvergence(OmniexError):
    """An iterative solver exhausted its iteration budget."""


class NonTermination(OmniexError):
    """The sum-rate iteration exceeded its guaranteed bound; the entropy
    oracle is likely violating submodularity or purity."""


class UnitMismatch(OmniexError):
    """Quantities in different entropy units were mixed."""


class InfeasibleBeta(OmniexError):
    """The requested total rate is below the minimum achievable sum rate."""


class InvalidN(OmniexError):
    """Block length n must be a positive integer."""


class NonIntegerRates(OmniexError):
    """n * R_i is not an integer for some user."""


class InfeasibleRates(OmniexError):
    """The rate vector violates a cut constraint."""


class FieldTooSmall(OmniexError):
    """Code construction needs a field with more than m elements."""


class ConstructionFailed(OmniexError):
    """No valid transmission scheme was found within the retry budget."""


class UnknownReceiver(OmniexError):
    """Receiver index is outside the user set."""


class InconsistentObservations(OmniexError):
    """Received symbols are inconsistent with the transmission scheme."""


class ValidationError(OmniexError):
    """An input document is malformed or fails source validation."""
