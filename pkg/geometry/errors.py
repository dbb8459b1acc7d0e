"""Exception hierarchy shared by the geometry modules and the CLI.

Every class carries the process exit code the CLI returns for it.
"""


class BSplineError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ParseError(BSplineError):
    """Malformed input file or document."""

    exit_code = 2


class DomainError(BSplineError, ValueError):
    """Parameter or value outside the domain an operation accepts."""

    exit_code = 3


class PreconditionError(BSplineError, ValueError):
    """Inputs violate an operation's preconditions (sizes, ranges, indices)."""

    exit_code = 3


class DegenerateContourError(PreconditionError):
    """Contour with zero area or otherwise unusable for moment computation."""


class RankDeficiencyError(BSplineError):
    """Collocation matrix without full column rank."""

    exit_code = 4

    def __init__(self, message: str, rank: int = -1, required: int = -1):
        super().__init__(message)
        self.rank = rank
        self.required = required


class PipelineInsufficiencyError(BSplineError):
    """Not enough classified data to build a surface."""

    exit_code = 5
