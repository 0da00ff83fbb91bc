"""Exception taxonomy shared by the whole package.

The CLI maps these onto its exit codes: data errors -> 1, structural
errors -> 2, internal consistency errors -> 3.
"""


class JcskitError(Exception):
    """Base class for all package errors."""


class ParseError(JcskitError):
    """Malformed input file. Carries a line/offset hint when available."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line})"
        elif offset is not None:
            loc = f" (offset {offset})"
        super().__init__(message + loc)
        self.line = line
        self.offset = offset


class UnsupportedFormatError(JcskitError):
    """Keypoint-set id is not in the format registry."""


class StructuralError(JcskitError):
    """Input violates a structural invariant (joint counts, bone tree, ...)."""


class DegenerateFrameError(JcskitError):
    """Frame construction inputs are (near-)parallel or (near-)zero."""


class ReconstructionGapError(JcskitError):
    """Angle vector or bone lengths are missing pieces the chain needs."""

    def __init__(self, message: str, blocking: list[str] | None = None):
        super().__init__(message)
        self.blocking = blocking or []


class DomainError(JcskitError):
    """An angle value lies outside its documented domain."""


class InternalConsistencyError(JcskitError):
    """A self-check failed; indicates a convention bug, not bad data."""
