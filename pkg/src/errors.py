"""
Exception hierarchy for the THANOS toolkit.
Every error knows the process exit code the experiment driver reports for it.
"""

from typing import Any, Dict, List, Optional, Sequence


class ThanosError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class DimensionError(ThanosError, ValueError):
    """Matrix shapes do not fit the operation."""


class ParameterError(ThanosError, ValueError):
    """A numeric parameter is outside its admissible range."""


class SingularityError(ThanosError):
    """A matrix that must have full column rank does not."""


class ConfigurationError(ThanosError):
    """A problem or experiment cannot be built from the given settings."""

    exit_code = 2


class ConfigError(ConfigurationError):
    """
    Experiment-file validation failure.

    Collects every violation so the user can fix the file in one pass.
    """

    def __init__(self, violations: Sequence[str], path: Optional[str] = None):
        self.violations: List[str] = list(violations)
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"{len(self.violations)} config error(s){where}: " + "; ".join(self.violations))


class ConnectivityError(ConfigurationError):
    """The communication graph is not connected."""


class IngestionError(ThanosError):
    """A data file could not be parsed. Rows and columns are 1-based."""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None,
                 row: Optional[int] = None, col: Optional[int] = None):
        self.path = path
        self.row = row
        self.col = col
        location = ""
        if row is not None and col is not None:
            location = f" at ({row},{col})"
        elif row is not None:
            location = f" at row {row}"
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}{message}{location}")


class StorageError(ThanosError):
    """Writing a log or matrix file failed."""

    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DivergenceError(ThanosError):
    """An iterate became non-finite."""

    exit_code = 4

    def __init__(self, k: int, agent_id: int, records: Optional[List[Any]] = None):
        self.k = k
        self.agent_id = agent_id
        self.records = records if records is not None else []
        super().__init__(f"non-finite iterate at k={k}, agent {agent_id}")

    def to_dict(self) -> Dict[str, Any]:
        return {'k': self.k, 'agent_id': self.agent_id, 'records_kept': len(self.records)}


class OracleScaleError(ThanosError):
    """The brute-force oracle was asked for a grid it cannot enumerate."""
