"""Exception hierarchy shared by every module of the package."""


class SilentStabError(Exception):
    """Base class for all errors raised by this package."""


class NetworkError(SilentStabError):
    """The node/edge/parent description does not form a spanning forest."""


class SchemaError(SilentStabError):
    """An algorithm description is not well-formed."""


class ReadViolation(SilentStabError):
    """A guard or statement touched a variable outside its declared reads."""


class DomainError(SilentStabError):
    """A value is outside its declared domain (including int64 overflow)."""


class StepError(SilentStabError):
    """An illegal daemon selection was handed to the step semantics."""


class SchedulingError(StepError):
    """A scripted schedule asked for a pair that is not enabled."""


class ExplorationLimit(SilentStabError):
    """Exhaustive exploration hit its state budget."""


class OrderError(SilentStabError):
    """A priority order is not a topological order of the causality graph."""
