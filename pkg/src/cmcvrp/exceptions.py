"""Exception hierarchy shared by every module of the package."""


class CmcVrpError(Exception):
    """Base class for all package errors."""


class DomainError(CmcVrpError, ValueError):
    """An argument lies outside the domain of the operation."""


class CvrpParseError(CmcVrpError, ValueError):
    """A CVRPLIB document is malformed.

    ``section`` names the offending section (if any) and ``line`` the
    1-based line number where parsing stopped.
    """

    def __init__(self, message, *, section=None, line=None):
        self.section = section
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleInstanceError(CmcVrpError, ValueError):
    """A customer demand exceeds the vehicle capacity."""


class UnknownInstanceError(CmcVrpError, LookupError):
    """No best-known solution is registered for the instance."""


class SolutionParseError(CmcVrpError, ValueError):
    """A CVRPLIB solution text is malformed."""


class TuningError(CmcVrpError, RuntimeError):
    """The penalty schedule was exhausted without reaching demand balance.

    ``best_partition`` holds the most balanced bipartition seen and
    ``best_mu`` the penalty at which it was obtained.
    """

    def __init__(self, message, best_partition=None, best_mu=None):
        super().__init__(message)
        self.best_partition = best_partition
        self.best_mu = best_mu


class IntegrationError(CmcVrpError, RuntimeError):
    """Sub-solutions could not be merged into a master solution."""
