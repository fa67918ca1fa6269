"""Exception hierarchy shared by all rank1lab modules."""


class Rank1LabError(Exception):
    """Base class for all errors raised by this package."""


class SpecError(Rank1LabError):
    """A transformation spec, preset parameter, or run config is invalid."""


class DepthError(Rank1LabError):
    """An operation needs columns beyond the built depth of the tower."""


class StabilizationError(DepthError):
    """A shifted level set did not stabilize within the built depth."""

    def __init__(self, message: str, *, shift: int | None = None, last_stage: int | None = None):
        super().__init__(message)
        self.shift = shift
        self.last_stage = last_stage


class ResourceCapError(Rank1LabError):
    """An enumeration exceeded its configured resource cap."""

    def __init__(self, message: str, *, cap: int | None = None):
        super().__init__(message)
        self.cap = cap


class UnresolvedMassError(Rank1LabError):
    """Strict mode: an operation left positive measure unresolved."""
