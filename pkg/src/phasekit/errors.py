"""Exception hierarchy shared by all phasekit modules."""


class PhasekitError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ParseError(PhasekitError):
    exit_code = 2


class DomainError(PhasekitError):
    """Raised when an input lies outside the region where an operation is defined."""

    exit_code = 3


class ToleranceError(PhasekitError):
    exit_code = 4


# lattice
class SingularSeifert(DomainError):
    pass


class SpectrumMismatch(ToleranceError):
    pass


class NotVanishing(DomainError):
    pass


# opcalc
class NotRootOfUnity(DomainError):
    pass


class ZeroBase(DomainError):
    pass


class SingularPairing(DomainError):
    pass


# polylog
class OrderTooLarge(DomainError):
    pass


class PathTooClose(DomainError):
    pass


class AmbiguousCrossing(DomainError):
    pass


# periods / phase
class ZeroLambda(DomainError):
    pass


class OutsideDomain(DomainError):
    pass


class DegenerateRatio(DomainError):
    pass


class NotInteger(ToleranceError):
    pass


class PathInvalid(DomainError):
    pass


class StepTooLarge(DomainError):
    pass


# continuation
class NearDiscriminant(DomainError):
    pass


class StiffnessFailure(PhasekitError):
    pass


class MultipleRoot(DomainError):
    pass


class NonSemisimplePoint(DomainError):
    pass


# fock
class TruncationOverflow(DomainError):
    pass


class ZeroNormalOrderedTerm(DomainError):
    pass


class RegularizationFailure(ToleranceError):
    pass
