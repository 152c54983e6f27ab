"""
Exception hierarchy for chainlab.

Validation problems with a chain are *reported* (see ``ValidationReport``),
not raised; the exceptions below cover broken preconditions, malformed
input files and internal construction faults.
"""

from typing import Optional


class ChainlabError(Exception):
    """Base class for every error raised by chainlab."""


class ContractViolation(ChainlabError, ValueError):
    """An operation was called outside its documented domain."""


class MalformedWitnessError(ContractViolation):
    """An equivalence witness references positions that do not exist."""


class BoundDomainError(ContractViolation):
    """A bound formula was evaluated outside the range where it is defined."""


class ConstructionError(ChainlabError):
    """A constructor produced something that is not a chain (internal fault)."""


class BoundDependencyError(ChainlabError):
    """A bound needs an ingredient (iota(n), a measured filler) that was not supplied."""


class DataIntegrityError(ChainlabError):
    """A known-values table disagrees with a proven search result."""


class ConfigError(ChainlabError):
    """Invalid configuration file or option value."""


class ChainFileError(ChainlabError):
    """A chain file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class TableParseError(ChainlabError):
    """A known-values table line is malformed."""

    def __init__(self, message: str, line_no: int, source: str = "<table>"):
        self.line_no = line_no
        self.source = source
        super().__init__(f"{source}:{line_no}: {message}")
