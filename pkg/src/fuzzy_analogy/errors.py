"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (bad input data, exit code 1
in the CLI) and :class:`ConfigError` (bad configuration, exit code 2).
"""

from __future__ import annotations


class FuzzyAnalogyError(Exception):
    """Base class for every error raised by this package."""


class DataError(FuzzyAnalogyError, ValueError):
    """Input data is malformed or violates an invariant."""


class ConfigError(FuzzyAnalogyError, ValueError):
    """Configuration or parameters are invalid."""


# dataset
class ArffError(DataError):
    pass


class MissingSection(ArffError):
    pass


class AttributeMismatch(ArffError):
    pass


class UnknownToken(ArffError):
    pass


class NonPositiveNumeric(ArffError):
    pass


class EmptyDataset(DataError):
    pass


class UnknownProject(DataError):
    pass


class InvalidBounds(ConfigError):
    pass


# fuzzy
class InvalidParameters(ConfigError):
    pass


class BadConfig(ConfigError):
    pass


class UnknownTerm(DataError):
    pass


class AllZeroCurve(FuzzyAnalogyError, ValueError):
    """No rule fired, so there is nothing to defuzzify."""


# similarity
class TermMismatch(DataError):
    pass


class ZeroWeightVector(ConfigError):
    pass


# estimation
class EmptyCasebase(DataError):
    pass


class EmptyAnalogySet(DataError):
    pass


class UnknownDriver(DataError):
    pass


class UnknownRating(DataError):
    pass


class InvalidParams(ConfigError):
    pass


# evaluation
class NonPositiveActual(DataError):
    pass


class EmptyList(DataError):
    pass


class DatasetTooSmall(DataError):
    pass
