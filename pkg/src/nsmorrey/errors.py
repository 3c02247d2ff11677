"""Exception hierarchy.

Contract and domain problems derive from :class:`NSMorreyError`; the CLI maps
them to exit code 1.  File-format problems derive from :class:`FieldFileError`
(an ``OSError``) and map to exit code 2.
"""


class NSMorreyError(Exception):
    pass


class DomainError(NSMorreyError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(NSMorreyError, ValueError):
    pass


class ContractError(NSMorreyError):
    """Inputs violate a documented precondition (e.g. support of a cutoff)."""


class ResolutionError(NSMorreyError):
    """The requested radius or time window is below what the grid resolves."""

    def __init__(self, message, min_radius=None):
        super().__init__(message)
        self.min_radius = min_radius


class FieldFileError(OSError):
    pass
