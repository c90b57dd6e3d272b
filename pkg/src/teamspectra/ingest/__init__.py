"""Canonical data model, JSON parsing, dataset filters and per-minute metrics."""

from .corpus import (
    MIN_DURATION_S,
    filter_corpus,
    load_corpus,
    per_minute,
    per_minute_metrics,
    write_corpus,
    zscore,
)
from .model import (
    RANKED_QUEUES,
    Division,
    EventKind,
    Frame,
    MatchRecord,
    PerMinuteMetrics,
    PlayerRow,
    QueueKind,
    Rank,
    Role,
    TeamSide,
    Tier,
    Timeline,
    TimelineEvent,
    team_participants,
)
from .schema import parse_match, parse_timeline, serialize_match, serialize_timeline

__all__ = [
    "MIN_DURATION_S",
    "RANKED_QUEUES",
    "Division",
    "EventKind",
    "Frame",
    "MatchRecord",
    "PerMinuteMetrics",
    "PlayerRow",
    "QueueKind",
    "Rank",
    "Role",
    "TeamSide",
    "Tier",
    "Timeline",
    "TimelineEvent",
    "filter_corpus",
    "load_corpus",
    "parse_match",
    "parse_timeline",
    "per_minute",
    "per_minute_metrics",
    "serialize_match",
    "serialize_timeline",
    "team_participants",
    "write_corpus",
    "zscore",
]
