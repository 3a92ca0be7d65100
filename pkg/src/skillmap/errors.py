"""Exception hierarchy shared across the pipeline."""


class SkillmapError(Exception):
    """Base class for all package errors."""


class IngestError(SkillmapError):
    """An export file or member directory could not be read."""


class BudgetError(SkillmapError):
    """Prompt overhead exceeds the effective context budget."""


class ConfigurationError(SkillmapError):
    """Invalid or incomplete run configuration (bad paths, missing env vars)."""


class CredentialError(SkillmapError):
    """A provider rejected the supplied credentials."""


class ProviderError(SkillmapError):
    """A provider request failed after exhausting retries."""

    def __init__(self, message: str, status_code: int | None = None, retryable: bool = False):
        super().__init__(message)
        self.status_code = status_code
        self.retryable = retryable


class ResponseParseError(SkillmapError):
    """A model response could not be parsed into knowledge items."""


class StoreError(SkillmapError):
    """Document persistence failed."""


class NotFoundError(StoreError):
    """The requested document does not exist."""


class MetricError(SkillmapError):
    """A metric is undefined for the given input (usually: no pairs)."""


class ReportError(SkillmapError):
    """A report could not be assembled from the available inputs."""
