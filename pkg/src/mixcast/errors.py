"""Exception hierarchy shared by every mixcast module.

Everything user-facing derives from MixcastError so the CLI can map
"our" failures to exit code 1 and anything else to exit code 2.
"""

from __future__ import annotations


class MixcastError(Exception):
    """Base class for all errors raised on purpose by mixcast."""


class RankError(MixcastError):
    """A tensor has (or would get) an unsupported rank."""


class DimensionError(MixcastError):
    """Shapes are rank-compatible but extents disagree."""


class ParameterError(MixcastError):
    """A scalar argument is outside its documented domain."""


class ConfigurationError(MixcastError):
    """A config object is internally inconsistent or unsupported."""


class ContractError(MixcastError):
    """An API was called in a way that violates its call contract."""


class StateError(MixcastError):
    """Saved state does not match the data it is being applied to."""


class DataError(MixcastError):
    """Raw input data is malformed (ragged rows, bad literals, NaNs)."""


class SchemaError(MixcastError):
    """A column-role schema does not match the data it describes."""


class FormatError(MixcastError):
    """A serialized artifact has a bad magic, version, or layout."""


class MetricError(MixcastError):
    """A metric is undefined for the given inputs (e.g. flat history)."""


class NumericError(MixcastError):
    """A computation produced non-finite values from finite inputs."""
