"""Parsers for delimiter-separated interaction logs."""

import os
from dataclasses import dataclass
from datetime import datetime, timezone

from .data import Event, InteractionLog
from .errors import DataError

EPOCH_SECONDS = "epoch-seconds"
ISO_8601 = "iso-8601"
TIME_FORMATS = (EPOCH_SECONDS, ISO_8601)


@dataclass(frozen=True)
class FormatSpec:
    """Column layout of a delimiter-separated log file."""

    delimiter: str = "\t"
    user_col: int = 0
    item_col: int = 1
    time_col: int = 2
    time_format: str = EPOCH_SECONDS
    skip_header: bool = False

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")
        cols = (self.user_col, self.item_col, self.time_col)
        if len(set(cols)) != 3:
            raise ValueError(f"column indices must be pairwise distinct, got {cols}")
        if min(cols) < 0:
            raise ValueError("column indices must be >= 0")
        if self.time_format not in TIME_FORMATS:
            raise ValueError(
                f"time_format must be one of {TIME_FORMATS}, got {self.time_format!r}"
            )


# Canonical interchange format: user<TAB>item<TAB>epoch_seconds, one event
# per line, UTF-8, LF endings, no trailing delimiter.
CANONICAL_SPEC = FormatSpec()


def _parse_timestamp(field: str, time_format: str) -> int:
    if time_format == EPOCH_SECONDS:
        return int(field)
    s = field.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_events(
    path: str | os.PathLike, spec: FormatSpec = CANONICAL_SPEC, strict: bool = False
) -> tuple[InteractionLog, int]:
    """Parse a log file into an InteractionLog.

    Malformed lines (too few columns, empty user/item, bad or negative
    timestamp) are skipped and counted; with strict=True the first one
    raises a DataError naming the line number. Returns (log, skip tally).
    """
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    max_col = max(spec.user_col, spec.item_col, spec.time_col)
    events = []
    skipped = 0
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            if lineno == 1 and spec.skip_header:
                continue
            line = raw.rstrip("\r\n")
            fields = line.split(spec.delimiter)
            try:
                if len(fields) <= max_col:
                    raise ValueError(f"expected at least {max_col + 1} columns")
                ts = _parse_timestamp(fields[spec.time_col], spec.time_format)
                events.append(Event(fields[spec.user_col], fields[spec.item_col], ts))
            except (ValueError, OverflowError) as exc:
                if strict:
                    raise DataError(f"{path}:{lineno}: malformed line: {exc}") from exc
                skipped += 1
    return InteractionLog(events), skipped


def write_canonical_tsv(log: InteractionLog, path: str | os.PathLike) -> None:
    """Write a log in the canonical 3-column TSV format (bit-exact)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in log:
            if "\t" in e.user or "\n" in e.user or "\t" in e.item or "\n" in e.item:
                raise DataError(
                    f"id contains a delimiter character: {e.user!r}/{e.item!r}"
                )
            fh.write(f"{e.user}\t{e.item}\t{e.timestamp}\n")
