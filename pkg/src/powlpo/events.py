"""Event log ingestion from XES and CSV, plus timestamp coarsening."""
from __future__ import annotations

import csv
import enum
import io
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import IO, Mapping

from dateutil.parser import isoparse

from .errors import ConfigError, EmptyInputError, InputError, ParseError, ValidationError

log = logging.getLogger(__name__)

LIFECYCLE_START = "start"
LIFECYCLE_COMPLETE = "complete"


@dataclass(frozen=True)
class Event:
    case_id: str
    label: str
    timestamp: datetime
    lifecycle: str | None = None
    seq_no: int = 0


@dataclass
class SourceMeta:
    format: str
    records_read: int = 0
    records_skipped: int = 0
    distinct_cases: int = 0
    distinct_labels: int = 0


@dataclass(frozen=True)
class EventLog:
    events: tuple
    source_meta: SourceMeta = field(default_factory=lambda: SourceMeta("memory"))

    def __len__(self) -> int:
        return len(self.events)

    @classmethod
    def from_events(cls, events, fmt: str = "memory", read: int | None = None, skipped: int = 0) -> "EventLog":
        ordered = tuple(sorted(events, key=lambda e: (e.timestamp, e.seq_no)))
        meta = SourceMeta(
            format=fmt,
            records_read=len(ordered) + skipped if read is None else read,
            records_skipped=skipped,
            distinct_cases=len({e.case_id for e in ordered}),
            distinct_labels=len({e.label for e in ordered}),
        )
        return cls(ordered, meta)


class Granularity(str, enum.Enum):
    NONE = "none"
    SECOND = "second"
    MINUTE = "minute"
    HOUR = "hour"
    DAY = "day"


def to_utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_iso(value: str) -> datetime:
    return to_utc(isoparse(value.strip()))


def normalize_lifecycle(value: str | None) -> str | None:
    if value is None:
        return None
    value = value.strip().lower()
    return value or None


def _read_bytes(source: bytes | IO[bytes]) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    return source.read()


# -- XES --------------------------------------------------------------------


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attributes(elem: ET.Element) -> dict:
    out = {}
    for child in elem:
        key = child.get("key")
        if key is not None and _local(child.tag) != "trace" and _local(child.tag) != "event":
            out[key] = child.get("value")
    return out


def parse_xes(source: bytes | IO[bytes], strict: bool = False) -> EventLog:
    """Read an XES document (log > trace > event).

    With ``strict`` off, events lacking a label or a usable timestamp are
    skipped and counted; with it on, the first such event raises.
    """
    data = _read_bytes(source)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML: {exc.msg}", line, col) from None
    if _local(root.tag) != "log":
        raise ParseError(f"expected <log> root element, found <{_local(root.tag)}>")

    events: list[Event] = []
    read = skipped = 0
    seq = 0
    for t_idx, trace in enumerate(el for el in root if _local(el.tag) == "trace"):
        case_id = _attributes(trace).get("concept:name")
        for e_idx, ev in enumerate(el for el in trace if _local(el.tag) == "event"):
            read += 1
            attrs = _attributes(ev)
            label = attrs.get("concept:name")
            raw_ts = attrs.get("time:timestamp")
            problem = None
            if case_id is None:
                problem = "trace has no concept:name"
            elif not label:
                problem = "missing concept:name"
            elif raw_ts is None:
                problem = "missing time:timestamp"
            else:
                try:
                    ts = parse_iso(raw_ts)
                except (ValueError, OverflowError):
                    problem = f"unparseable time:timestamp {raw_ts!r}"
            if problem is not None:
                if strict:
                    raise ValidationError(f"trace {case_id or t_idx!r}, event {e_idx}: {problem}")
                skipped += 1
                continue
            events.append(Event(case_id, label, ts, normalize_lifecycle(attrs.get("lifecycle:transition")), seq))
            seq += 1
    if not events:
        raise EmptyInputError("XES log contains no usable events")
    if skipped:
        log.warning("skipped %d of %d XES events", skipped, read)
    return EventLog.from_events(events, "xes", read, skipped)


# -- CSV --------------------------------------------------------------------

CSV_KEYS = ("case", "activity", "timestamp", "start_timestamp", "lifecycle")


def _parse_ts(value: str, fmt: str | None) -> datetime:
    value = value.strip()
    if not value:
        raise ValueError("empty timestamp")
    if fmt is None or fmt == "iso":
        return parse_iso(value)
    return to_utc(datetime.strptime(value, fmt))


def parse_csv(
    source: bytes | IO[bytes],
    mapping: Mapping[str, str],
    timestamp_format: str | None = None,
    delimiter: str = ",",
) -> EventLog:
    """Read a CSV log with a header row.

    ``mapping`` maps the roles ``case``, ``activity``, ``timestamp`` and
    optionally ``start_timestamp`` / ``lifecycle`` to column names.
    ``timestamp_format`` is a ``strptime`` pattern; ``None`` or ``"iso"``
    means ISO-8601. When ``start_timestamp`` is mapped each row yields a
    start event and a complete event.
    """
    unknown = set(mapping) - set(CSV_KEYS)
    if unknown:
        raise ConfigError(f"unknown CSV mapping keys: {sorted(unknown)}")
    for required in ("case", "activity", "timestamp"):
        if required not in mapping:
            raise ConfigError(f"CSV mapping lacks required key {required!r}")
    try:
        text = _read_bytes(source).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise InputError(f"CSV input is not valid UTF-8: {exc}") from None
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    headers = reader.fieldnames or []
    missing = [col for col in mapping.values() if col not in headers]
    if missing:
        raise ConfigError(f"CSV columns {missing} not found; available headers: {headers}")

    case_col, act_col, ts_col = mapping["case"], mapping["activity"], mapping["timestamp"]
    start_col, life_col = mapping.get("start_timestamp"), mapping.get("lifecycle")
    events: list[Event] = []
    read = skipped = 0
    seq = 0
    for row in reader:
        case_id, label = (row.get(case_col) or "").strip(), (row.get(act_col) or "").strip()
        if start_col is not None:
            read += 1
            try:
                if not case_id or not label:
                    raise ValueError("missing case or activity")
                start = _parse_ts(row.get(start_col) or "", timestamp_format)
            except ValueError:
                skipped += 1
            else:
                events.append(Event(case_id, label, start, LIFECYCLE_START, seq))
                seq += 1
        read += 1
        try:
            if not case_id or not label:
                raise ValueError("missing case or activity")
            ts = _parse_ts(row.get(ts_col) or "", timestamp_format)
        except ValueError:
            skipped += 1
            continue
        if start_col is not None:
            lifecycle = LIFECYCLE_COMPLETE
        else:
            lifecycle = normalize_lifecycle(row.get(life_col)) if life_col else None
        events.append(Event(case_id, label, ts, lifecycle, seq))
        seq += 1
    if skipped:
        log.warning("skipped %d of %d CSV records", skipped, read)
    return EventLog.from_events(events, "csv", read, skipped)


# -- timestamp abstraction --------------------------------------------------


def floor_timestamp(ts: datetime, g: Granularity) -> datetime:
    g = Granularity(g)
    ts = to_utc(ts)
    if g is Granularity.NONE:
        return ts
    ts = ts.replace(microsecond=0)
    if g is Granularity.SECOND:
        return ts
    ts = ts.replace(second=0)
    if g is Granularity.MINUTE:
        return ts
    ts = ts.replace(minute=0)
    if g is Granularity.HOUR:
        return ts
    return ts.replace(hour=0)


def abstract_timestamps(log: EventLog, g: Granularity | str) -> EventLog:
    """Floor every timestamp to the start of its UTC second/minute/hour/day."""
    g = Granularity(g)
    if g is Granularity.NONE:
        return log
    events = [replace(e, timestamp=floor_timestamp(e.timestamp, g)) for e in log.events]
    events.sort(key=lambda e: (e.timestamp, e.seq_no))
    return EventLog(tuple(events), log.source_meta)
