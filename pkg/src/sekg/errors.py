"""Exception hierarchy shared by all pipeline stages.

Exit-code mapping for the CLI lives in :mod:`sekg.cli`; the classes here
only encode the *kind* of failure (configuration, provider transport,
bad data) so callers can decide what is fatal and what is quarantinable.
"""


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(PipelineError):
    """Invalid or missing configuration: bad config values, absent files
    referenced by config, missing API keys, missing prompt assets."""


class ProviderError(PipelineError):
    """A remote provider (completion or embedding endpoint) failed.

    ``retryable`` distinguishes transport failures that exhausted the
    retry budget from hard protocol violations.
    """

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class ProviderContractError(ProviderError):
    """The provider answered, but outside its contract (e.g. embedding
    vectors of inconsistent length)."""

    def __init__(self, message: str):
        super().__init__(message, retryable=False)


class DataError(PipelineError):
    """Malformed or contract-violating input data."""


class ThreadStructureError(DataError):
    """A thread tree violates its structural invariants (duplicate ids,
    dangling parent references)."""


class FaersFormatError(DataError):
    """A registry summary file failed to parse; carries the 1-based line
    number of the offending row when known."""

    def __init__(self, message: str, *, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ResponseFormatError(DataError):
    """A completion response could not be parsed into relations; carries
    the offending response text."""

    def __init__(self, message: str, *, response_text: str = ""):
        super().__init__(message)
        self.response_text = response_text


class BrandWhitelistError(DataError):
    """A medication name fell outside the closed brand whitelist."""


class OverrideCycleError(ConfigurationError):
    """The override file contains a cyclic chain of renames."""
