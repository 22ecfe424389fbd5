"""FIFO matching of start/complete events into interval events."""
from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from datetime import datetime

from .events import LIFECYCLE_COMPLETE, LIFECYCLE_START, EventLog

log = logging.getLogger(__name__)

MATCHED = "matched"
ATOMIC = "atomic"


@dataclass(frozen=True)
class IntervalEvent:
    label: str
    case_id: str
    start: datetime
    end: datetime
    origin: str = MATCHED
    seq_no: int = 0  # file position of the event that opened the interval

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"interval for {self.label!r} ends before it starts")


@dataclass(frozen=True)
class IntervalStats:
    matched: int = 0
    atomic: int = 0
    unmatched_starts: int = 0
    unmatched_completes: int = 0


@dataclass(frozen=True)
class IntervalLog:
    intervals: tuple
    stats: IntervalStats = field(default_factory=IntervalStats)

    @property
    def cases(self) -> frozenset:
        return frozenset(iv.case_id for iv in self.intervals)

    def by_case(self) -> dict[str, list[IntervalEvent]]:
        out: dict[str, list[IntervalEvent]] = {}
        for iv in self.intervals:
            out.setdefault(iv.case_id, []).append(iv)
        return out


def _canonical(iv: IntervalEvent):
    return (iv.case_id, iv.start, iv.end, iv.label, iv.seq_no)


def build_interval_log(event_log: EventLog) -> IntervalLog:
    """Pair starts with completes per (case, label), oldest start first.

    Completes without a pending start, events whose lifecycle is neither
    start nor complete, and starts left over at the end all become atomic
    intervals at their own timestamp.
    """
    queues: dict[tuple[str, str], deque] = defaultdict(deque)
    out: list[IntervalEvent] = []
    matched = atomic = unmatched_completes = 0
    for ev in event_log.events:
        key = (ev.case_id, ev.label)
        if ev.lifecycle == LIFECYCLE_START:
            queues[key].append(ev)
        elif ev.lifecycle == LIFECYCLE_COMPLETE and queues[key]:
            start = queues[key].popleft()
            out.append(IntervalEvent(ev.label, ev.case_id, start.timestamp, ev.timestamp, MATCHED, start.seq_no))
            matched += 1
        else:
            if ev.lifecycle == LIFECYCLE_COMPLETE:
                unmatched_completes += 1
            out.append(IntervalEvent(ev.label, ev.case_id, ev.timestamp, ev.timestamp, ATOMIC, ev.seq_no))
            atomic += 1
    leftover = 0
    for queue in queues.values():
        for ev in queue:
            out.append(IntervalEvent(ev.label, ev.case_id, ev.timestamp, ev.timestamp, ATOMIC, ev.seq_no))
            leftover += 1
    if leftover:
        log.warning("%d start events had no matching complete; kept as atomic intervals", leftover)
    out.sort(key=_canonical)
    stats = IntervalStats(matched, atomic + leftover, leftover, unmatched_completes)
    return IntervalLog(tuple(out), stats)
