"""Exception hierarchy shared across the package."""


class TeamSpectraError(Exception):
    """Base class for all package errors."""


# ingest
class SchemaError(TeamSpectraError, ValueError):
    """A document is missing a required field or has a field of the wrong type."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class CardinalityError(TeamSpectraError, ValueError):
    """A team does not have exactly five players (or a match not two teams)."""


class DomainError(TeamSpectraError, ValueError):
    """Argument outside the domain of a numeric operation."""


# client
class CrawlError(TeamSpectraError):
    pass


class AuthError(CrawlError):
    """The server rejected the API token (401/403)."""


class NotFound(CrawlError):
    """The requested resource does not exist (404)."""


class TransportError(CrawlError):
    """Request kept failing after the configured number of retries."""


# teamgraph
class UndefinedForEmptyGraph(TeamSpectraError, ValueError):
    """Centralization needs at least one assist (A > 0)."""


# analytics
class MissingGraph(TeamSpectraError, KeyError):
    pass


class DegenerateMatrix(TeamSpectraError, ValueError):
    pass


class SingularCorrelation(TeamSpectraError, ValueError):
    pass


class NonConvergence(TeamSpectraError, RuntimeError):
    pass


class AmbiguousPattern(TeamSpectraError, ValueError):
    """Factor loadings do not single out one factor per label."""


# learn
class KTooLarge(TeamSpectraError, ValueError):
    pass


class AmbiguousLabeling(TeamSpectraError, ValueError):
    pass


# cli
class StageError(TeamSpectraError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: str | BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class ConfigError(TeamSpectraError, ValueError):
    pass
