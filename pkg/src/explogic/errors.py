"""Exception hierarchy shared across the package.

Error families map onto distinct CLI exit codes, so keep them coarse:
``DomainError`` for violated preconditions on values, ``FormatError`` for
unreadable or inconsistent files, ``TrainingError`` for diverged optimization.
"""


class ExplogicError(Exception):
    """Base class for all package errors."""


class DomainError(ExplogicError):
    """An argument lies outside its documented domain (bad probability,
    dimension mismatch, out-of-range class id, empty selection, ...)."""


class FormatError(ExplogicError):
    """A file is malformed: bad magic, wrong schema version, unknown field,
    dangling node index, truncated payload, inconsistent counts."""


class TrainingError(ExplogicError):
    """Optimization produced a non-finite loss or otherwise diverged."""
