"""Exception hierarchy shared by every module."""


class LinkCalcError(Exception):
    """Base class for all errors raised by linkcalc."""


class ValidationError(LinkCalcError):
    """Input failed a structural or dimensional check."""


class DSLSyntaxError(ValidationError):
    def __init__(self, message, offset, expected=None):
        self.offset = offset
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at byte {offset}{hint}")


class UnknownIdentifier(ValidationError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"unknown identifier {name!r}{where}")


class PeriodicityViolation(ValidationError):
    def __init__(self, map_name, factor, deviation):
        self.map_name = map_name
        self.factor = factor
        self.deviation = deviation
        super().__init__(
            f"map {map_name!r} is not periodic in circle factor {factor!r} "
            f"(max deviation {deviation:.3g})"
        )


class DimensionError(ValidationError):
    """Declared dimensions are incompatible with the requested operation."""


class NotALinkMap(ValidationError):
    """Component images that should be disjoint come too close."""


class EndpointNotLink(NotALinkMap):
    pass


class DomainError(LinkCalcError):
    """Evaluation left the domain of sqrt or division."""


class NonTransverse(LinkCalcError):
    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class BoundaryProximity(NonTransverse):
    """A zero sits on (or within tolerance of) a boundary stratum."""


class ResolutionUnstable(LinkCalcError):
    pass


class StepCollapse(LinkCalcError):
    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class MethodDisagreement(LinkCalcError):
    pass


class InvariantFailure(LinkCalcError):
    """An internal consistency check failed."""
