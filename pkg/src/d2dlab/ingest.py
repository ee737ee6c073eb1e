"""Access-log ingestion: parse CSV logs, deduplicate accesses, rank contents.

Input format is UTF-8 CSV with header ``user_id,content_id,region_id[,timestamp]``.
Repeated accesses by the same user to the same content collapse into a
single unique access; contents are then ranked by distinct-user count.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .popularity import EmpiricalDistribution

__all__ = [
    "AccessRecord",
    "LogFormatError",
    "ParseResult",
    "UniqueAccessSet",
    "parse_log",
    "dedup_unique",
    "to_empirical",
]

_REQUIRED_COLUMNS = ("user_id", "content_id", "region_id")


class LogFormatError(Exception):
    """The input is not in the documented CSV log format."""


@dataclass(frozen=True)
class AccessRecord:
    user_id: str
    content_id: str
    region_id: int
    timestamp: int | None = None


@dataclass
class ParseResult:
    """Parsed records plus a row-accounting report."""

    records: list[AccessRecord]
    rows: int
    malformed: int


def parse_log(source) -> ParseResult:
    """Parse an access log from a path or text stream.

    Malformed rows (wrong arity, empty user/content id, non-integer region
    or timestamp) are counted in the result, never silently dropped.
    Raises LogFormatError when the header is missing or wrong.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_stream(fh)
    if isinstance(source, (bytes, bytearray)):
        return _parse_stream(io.StringIO(source.decode("utf-8")))
    return _parse_stream(source)


def _parse_stream(stream) -> ParseResult:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise LogFormatError("empty input: missing header row") from None
    header = [h.strip() for h in header]
    has_timestamp = tuple(header) == (*_REQUIRED_COLUMNS, "timestamp")
    if not has_timestamp and tuple(header) != _REQUIRED_COLUMNS:
        raise LogFormatError(
            f"bad header {header!r}; expected user_id,content_id,region_id[,timestamp]"
        )
    width = 4 if has_timestamp else 3

    records: list[AccessRecord] = []
    rows = 0
    malformed = 0
    for row in reader:
        if not row:
            continue
        rows += 1
        if len(row) != width:
            malformed += 1
            continue
        user_id = row[0].strip()
        content_id = row[1].strip()
        if not user_id or not content_id:
            malformed += 1
            continue
        try:
            region_id = int(row[2])
        except ValueError:
            malformed += 1
            continue
        timestamp: int | None = None
        if has_timestamp and row[3].strip():
            try:
                timestamp = int(row[3])
            except ValueError:
                malformed += 1
                continue
        records.append(AccessRecord(user_id, content_id, region_id, timestamp))
    return ParseResult(records=records, rows=rows, malformed=malformed)


@dataclass
class UniqueAccessSet:
    """Distinct (user, content) pairs and per-content distinct-user counts."""

    pairs: set[tuple[str, str]]
    per_content_counts: dict[str, int]

    @property
    def n_unique(self) -> int:
        return len(self.pairs)

    @property
    def n_users(self) -> int:
        return len({u for u, _ in self.pairs})

    @property
    def n_contents(self) -> int:
        return len(self.per_content_counts)


def dedup_unique(records: list[AccessRecord]) -> UniqueAccessSet:
    """Collapse repeated accesses by one user to one content into one pair.

    Timestamps are ignored: within the log's window, every repeat of the
    same (user, content) pair counts as the same unique access.
    """
    pairs = {(r.user_id, r.content_id) for r in records}
    counts = Counter(content for _, content in pairs)
    return UniqueAccessSet(pairs=pairs, per_content_counts=dict(counts))


def to_empirical(unique: UniqueAccessSet) -> EmpiricalDistribution:
    """Rank contents by descending distinct-user count.

    Ties break by content_id lexicographic order so the ranking is
    deterministic regardless of input order.
    """
    if not unique.pairs:
        raise ValueError("cannot rank an empty access set")
    ranked = sorted(unique.per_content_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    counts = np.array([c for _, c in ranked], dtype=np.float64)
    return EmpiricalDistribution(counts=counts)
