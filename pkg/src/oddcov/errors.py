"""Exception hierarchy shared across the package.

Exit-code mapping lives in the CLI: SpecError and its subclasses (bad
configuration, bad constraint expressions, hash mismatches) map to exit 1,
DataError (unreadable or structurally broken datasets) to exit 2.
"""


class OddCovError(Exception):
    """Base class for all errors raised by this package."""


class SpecError(OddCovError):
    """The ODD specification document is invalid or inconsistent."""


class ExprError(SpecError):
    """A constraint expression failed to lex or parse.

    `offset` is the byte offset into the expression source at which the
    problem was detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(OddCovError):
    """A constraint expression hit a domain error (division by zero,
    logarithm of a non-positive value) during evaluation.

    Never swallowed: a constraint that cannot be evaluated aborts the run
    instead of silently excluding combinations.
    """

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        # index into the evaluated batch; the caller rewrites it into a
        # combination index before the error reaches the user
        self.position = position


class DataError(OddCovError):
    """A scenario dataset cannot be read or violates the expected format."""


class SpecHashMismatch(OddCovError):
    """Two artifacts (covered set, spec) were produced from different specs."""
