"""Fuzzy analogy-based software effort estimation."""

from .dataset import DRIVERS, Dataset, ProjectRecord, RatingLevel, load_arff, parse_arff
from .errors import ConfigError, DataError, FuzzyAnalogyError

__version__ = "0.1.0"

__all__ = [
    "DRIVERS",
    "ConfigError",
    "DataError",
    "Dataset",
    "FuzzyAnalogyError",
    "ProjectRecord",
    "RatingLevel",
    "load_arff",
    "parse_arff",
]
