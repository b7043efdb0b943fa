"""
CSV run log: one row per RunRecord, flushed as soon as it is written so an
aborted run keeps every completed round.
"""

import csv
import logging
import os
from typing import Iterable, List, Optional

from src.errors import IngestionError, StorageError
from src.metrics.records import RECORD_FIELDS, RunRecord

logger = logging.getLogger(__name__)


def _format(value: Optional[float]) -> str:
    if value is None:
        return ''
    return format(value, '.17g')


class RunLogWriter:
    """
    Single-writer sink for run records.

    Usage:
        with RunLogWriter(path) as log:
            run(..., on_record=log.write)
    """

    def __init__(self, path: str):
        self.path = path
        self.rows_written = 0
        self._file = None
        self._writer = None

    def open(self):
        try:
            directory = os.path.dirname(self.path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            self._file = open(self.path, 'w', newline='')
            self._writer = csv.writer(self._file, lineterminator='\n')
            self._writer.writerow(RECORD_FIELDS)
            self._file.flush()
        except OSError as e:
            raise StorageError(f"cannot open run log: {e}", self.path) from e
        return self

    def write(self, rec: RunRecord):
        if self._writer is None:
            raise StorageError("run log is not open", self.path)
        try:
            self._writer.writerow([
                str(rec.k),
                _format(rec.dist),
                _format(rec.feas),
                _format(rec.consensus),
                _format(rec.stat_residual),
                _format(rec.sigma),
                _format(rec.eta),
            ])
            self._file.flush()
        except OSError as e:
            raise StorageError(f"cannot append to run log: {e}", self.path) from e
        self.rows_written += 1

    def close(self):
        if self._file is not None:
            self._file.close()
            self._file = None
            self._writer = None
            logger.debug("closed run log %s after %d rows", self.path, self.rows_written)

    def __enter__(self):
        return self.open()

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False


def write_csv(records: Iterable[RunRecord], path: str) -> int:
    """Write a record stream to path; returns the number of rows written."""
    with RunLogWriter(path) as log:
        for rec in records:
            log.write(rec)
        return log.rows_written


def read_csv(path: str) -> List[RunRecord]:
    """Parse a run log back into records (empty dist -> None)."""
    if not os.path.isfile(path):
        raise IngestionError("run log not found", path=path)
    try:
        with open(path, newline='', encoding='utf-8') as f:
            lines = f.readlines()
    except UnicodeDecodeError as e:
        raise IngestionError(f"not valid UTF-8 text: {e.reason} at byte {e.start}", path=path) from e
    except OSError as e:
        raise IngestionError(f"cannot read run log: {e}", path=path) from e

    records = []
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != RECORD_FIELDS:
        raise IngestionError(f"unexpected header {header!r}", path=path, row=1)
    for row_no, row in enumerate(reader, 2):
        if len(row) != len(RECORD_FIELDS):
            raise IngestionError(f"expected {len(RECORD_FIELDS)} fields, found {len(row)}", path=path, row=row_no)
        try:
            records.append(RunRecord(
                k=int(row[0]),
                dist=float(row[1]) if row[1] else None,
                feas=float(row[2]),
                consensus=float(row[3]),
                stat_residual=float(row[4]),
                sigma=float(row[5]),
                eta=float(row[6]),
            ))
        except ValueError:
            raise IngestionError("non-numeric field", path=path, row=row_no) from None
    return records
