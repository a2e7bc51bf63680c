"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class CapExceededError(EngineError):
    """A configured resource cap would be exceeded by an exact computation.

    Distinct from a negative result: the question was not answered.
    """

    def __init__(self, what: str, needed: int, cap: int):
        super().__init__(f"{what} needs {needed} but cap is {cap}")
        self.what = what
        self.needed = needed
        self.cap = cap


class SearchExhaustedError(EngineError):
    """The solver ran out of its node budget before finishing the search.

    Callers must not present this as "no answer set exists".
    """


class NoAnswerSetError(EngineError):
    """A jump target is inconsistent: the auxiliary program has no answer set.

    The overall program may still be consistent.
    """


class UnfoundedOverflowError(EngineError):
    """Tracking all unfounded sets of a state would exceed the configured cap."""


class NotApplicableError(EngineError):
    """A specialised algorithm was called outside its fragment."""


class ParseError(EngineError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class UnsafeRuleError(ParseError):
    def __init__(self, variable: str, line: int, column: int):
        super().__init__(f"unsafe variable {variable}", line, column)
        self.variable = variable


class GroundingError(EngineError):
    pass


class GroundingLimitError(GroundingError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"grounding produced more than {cap} instances ({count}+)")
        self.cap = cap


class UnknownRuleError(EngineError):
    pass


class UnknownNodeError(EngineError):
    pass


class CyclicGraphError(EngineError):
    def __init__(self, cycle):
        super().__init__(f"graph has a cycle: {cycle}")
        self.cycle = tuple(cycle)


class PreconditionError(EngineError):
    pass


class SessionFormatError(EngineError):
    pass


class DesynchronizedError(EngineError):
    """The session's source was edited after stepping started."""
