"""
Plain matrix CSV files: data matrices (features x samples) and cached
reference solutions. No header unless asked for; 17 significant digits.
"""

import csv
import logging
import math
import os
from typing import List

import numpy as np

from src.errors import IngestionError, StorageError

logger = logging.getLogger(__name__)


def load_matrix_csv(path: str, header: bool = False) -> np.ndarray:
    """
    Read a rectangular numeric CSV into a 2-D array.

    Args:
        path: CSV file
        header: skip the first line

    Raises:
        IngestionError naming the 1-based (row, col) of the first bad cell
    """
    if not os.path.isfile(path):
        raise IngestionError("file not found", path=path)

    rows: List[List[float]] = []
    width = None
    try:
        with open(path, newline='', encoding='utf-8') as f:
            for row_no, row in enumerate(csv.reader(f), 1):
                if header and row_no == 1:
                    continue
                if not row or all(not cell.strip() for cell in row):
                    continue
                if width is None:
                    width = len(row)
                elif len(row) != width:
                    raise IngestionError(f"ragged row: expected {width} columns, found {len(row)}",
                                         path=path, row=row_no)
                values = []
                for col_no, cell in enumerate(row, 1):
                    try:
                        value = float(cell)
                    except ValueError:
                        raise IngestionError(f"non-numeric cell {cell.strip()!r}",
                                             path=path, row=row_no, col=col_no) from None
                    if not math.isfinite(value):
                        raise IngestionError(f"non-finite cell {cell.strip()!r}",
                                             path=path, row=row_no, col=col_no)
                    values.append(value)
                rows.append(values)
    except UnicodeDecodeError as e:
        raise IngestionError(f"not valid UTF-8 text: {e.reason} at byte {e.start}", path=path) from e
    except OSError as e:
        raise IngestionError(f"cannot read file: {e}", path=path) from e

    if not rows:
        raise IngestionError("no numeric rows", path=path)
    logger.debug("loaded %d x %d matrix from %s", len(rows), width, path)
    return np.array(rows, dtype=float)


def save_matrix_csv(matrix: np.ndarray, path: str):
    """Write a 2-D array with 17 significant digits so it reloads bit-exactly."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            for row in matrix:
                writer.writerow([format(value, '.17g') for value in row])
    except OSError as e:
        raise StorageError(f"cannot write matrix: {e}", path) from e
