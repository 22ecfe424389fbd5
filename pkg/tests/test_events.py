from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from powlpo.errors import ConfigError, EmptyInputError, InputError, ParseError, ValidationError
from powlpo.events import Event, EventLog, Granularity, abstract_timestamps, floor_timestamp, parse_csv, parse_xes

UTC = timezone.utc


def xes(*traces: str) -> bytes:
    body = "".join(traces)
    return f'<?xml version="1.0"?><log xmlns="http://www.xes-standard.org/">{body}</log>'.encode()


def trace(case: str, *events: str) -> str:
    return f'<trace><string key="concept:name" value="{case}"/>{"".join(events)}</trace>'


def event(label=None, ts=None, lifecycle=None) -> str:
    parts = []
    if label is not None:
        parts.append(f'<string key="concept:name" value="{label}"/>')
    if ts is not None:
        parts.append(f'<date key="time:timestamp" value="{ts}"/>')
    if lifecycle is not None:
        parts.append(f'<string key="lifecycle:transition" value="{lifecycle}"/>')
    return "<event>" + "".join(parts) + "</event>"


def test_xes_start_complete_pair():
    log = parse_xes(xes(trace("c1", event("A", "2024-01-01T10:00:00", "start"), event("A", "2024-01-01T10:05:00", "complete"))))
    assert len(log) == 2
    assert {e.case_id for e in log.events} == {"c1"}
    assert [e.lifecycle for e in log.events] == ["start", "complete"]
    assert log.events[0].timestamp == datetime(2024, 1, 1, 10, 0, tzinfo=UTC)
    assert log.source_meta.format == "xes"


def test_xes_missing_timestamp_is_skipped():
    log = parse_xes(xes(trace("c1", event("A", "2024-01-01T10:00:00"), event("B"))))
    assert len(log) == 1
    assert log.source_meta.records_skipped == 1
    assert log.source_meta.records_read == 2


def test_xes_strict_raises_on_bad_event():
    with pytest.raises(ValidationError):
        parse_xes(xes(trace("c1", event("A", "2024-01-01T10:00:00"), event("B"))), strict=True)


def test_xes_out_of_order_events_are_sorted():
    stamps = ["2024-01-01T10:04:00", "2024-01-01T10:01:00", "2024-01-01T10:03:00", "2024-01-01T10:01:00", "2024-01-01T10:00:00"]
    log = parse_xes(xes(trace("c1", *(event(f"e{i}", ts) for i, ts in enumerate(stamps)))))
    # by hand: 10:00 e4, then the two 10:01 events in file order, then 10:03, 10:04
    assert [e.label for e in log.events] == ["e4", "e1", "e3", "e2", "e0"]
    assert [e.seq_no for e in log.events] == [4, 1, 3, 2, 0]


def test_xes_timezones_normalized_to_utc():
    log = parse_xes(xes(trace("c1", event("A", "2024-01-01T12:00:00+02:00"))))
    assert log.events[0].timestamp == datetime(2024, 1, 1, 10, 0, tzinfo=UTC)


def test_xes_malformed_reports_position():
    with pytest.raises(ParseError) as info:
        parse_xes(b"<log>\n<trace>\n</log>")
    assert info.value.line == 3


def test_xes_without_events_is_empty_input():
    with pytest.raises(EmptyInputError):
        parse_xes(xes(trace("c1")))


def test_xes_fixture_reads(fixtures):
    log = parse_xes((fixtures / "hospital.xes").read_bytes())
    assert log.source_meta.distinct_cases == 4
    assert log.source_meta.distinct_labels == 5
    assert len(log) == 18


MAPPING = {"case": "case", "activity": "act", "timestamp": "ts"}


def test_csv_start_timestamp_expands_to_two_events():
    data = b"case,act,ts,st\nc1,A,2024-01-01 10:05,2024-01-01 10:00\n"
    log = parse_csv(data, {**MAPPING, "start_timestamp": "st"})
    assert [(e.label, e.case_id, e.timestamp.strftime("%H:%M"), e.lifecycle) for e in log.events] == [
        ("A", "c1", "10:00", "start"),
        ("A", "c1", "10:05", "complete"),
    ]


def test_csv_bad_timestamp_row_is_skipped():
    log = parse_csv(b"case,act,ts\nc1,A,not-a-date\nc1,B,2024-01-01 10:00\n", MAPPING)
    assert [e.label for e in log.events] == ["B"]
    assert log.source_meta.records_skipped == 1


def test_csv_without_lifecycle_column():
    data = b"case,act,ts\nc1,A,2024-01-01 10:00\nc1,B,2024-01-01 10:01\nc2,A,2024-01-01 10:02\n"
    log = parse_csv(data, MAPPING)
    assert len(log) == 3
    assert all(e.lifecycle is None for e in log.events)


def test_csv_lifecycle_is_normalized():
    data = b"case,act,ts,life\nc1,A,2024-01-01 10:00, START \nc1,A,2024-01-01 10:01,Complete\n"
    log = parse_csv(data, {**MAPPING, "lifecycle": "life"})
    assert [e.lifecycle for e in log.events] == ["start", "complete"]


def test_csv_custom_format_and_delimiter():
    log = parse_csv(b"case;act;ts\nc1;A;01/02/2024 10:00\n", MAPPING, "%d/%m/%Y %H:%M", ";")
    assert log.events[0].timestamp == datetime(2024, 2, 1, 10, 0, tzinfo=UTC)


def test_csv_missing_column_lists_headers():
    with pytest.raises(ConfigError, match="available headers"):
        parse_csv(b"case,activity,ts\n", MAPPING)


def test_csv_mapping_needs_required_keys():
    with pytest.raises(ConfigError):
        parse_csv(b"case,act\n", {"case": "case", "activity": "act"})


def test_csv_rejects_invalid_utf8():
    with pytest.raises(InputError):
        parse_csv(b"case,act,ts\nc1,\xff,2024-01-01\n", MAPPING)


def test_floor_to_day():
    ts = datetime(2024, 5, 1, 13, 45, 21, 500000, tzinfo=UTC)
    assert floor_timestamp(ts, Granularity.DAY) == datetime(2024, 5, 1, tzinfo=UTC)


def test_granularity_none_is_identity():
    log = parse_csv(b"case,act,ts\nc1,A,2024-01-01 10:00:01.250\n", MAPPING)
    assert abstract_timestamps(log, "none") == log


def test_minute_floor_ties_follow_seq_no():
    log = parse_csv(b"case,act,ts\nc1,B,2024-01-01 10:00:59\nc1,A,2024-01-01 10:00:01\n", MAPPING)
    assert [e.label for e in log.events] == ["A", "B"]
    coarse = abstract_timestamps(log, Granularity.MINUTE)
    assert {e.timestamp for e in coarse.events} == {datetime(2024, 1, 1, 10, 0, tzinfo=UTC)}
    assert [e.label for e in coarse.events] == ["B", "A"]


stamps = st.datetimes(min_value=datetime(1990, 1, 1), max_value=datetime(2090, 1, 1)).map(
    lambda d: d.replace(tzinfo=UTC)
)


@given(stamps, st.sampled_from(list(Granularity)))
def test_floor_is_idempotent(ts, g):
    once = floor_timestamp(ts, g)
    assert floor_timestamp(once, g) == once
    assert once <= ts


@given(stamps, stamps, st.sampled_from(list(Granularity)))
def test_floor_is_monotone(t1, t2, g):
    lo, hi = min(t1, t2), max(t1, t2)
    assert floor_timestamp(lo, g) <= floor_timestamp(hi, g)


@given(st.lists(st.tuples(st.sampled_from("ab"), st.sampled_from(["x", "y"]), st.one_of(stamps.map(str), st.just("bogus")))))
def test_csv_lossless_modulo_skips(rows):
    text = "case,act,ts\n" + "".join(f"{c},{a},{t}\n" for c, a, t in rows)
    log = parse_csv(text.encode(), MAPPING)
    meta = log.source_meta
    assert meta.records_read == len(log) + meta.records_skipped == len(rows)


@given(st.lists(stamps, min_size=1, max_size=8), st.sampled_from(list(Granularity)))
def test_abstraction_idempotent_on_logs(times, g):
    log = EventLog.from_events(Event("c", "a", t, None, i) for i, t in enumerate(times))
    once = abstract_timestamps(log, g)
    assert abstract_timestamps(once, g) == once
    assert [e.timestamp for e in once.events] == sorted(e.timestamp for e in once.events)
