"""Dataset filters, per-minute scaling and corpus loading."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from ..errors import DomainError
from .model import RANKED_QUEUES, MatchRecord, PerMinuteMetrics, PlayerRow, QueueKind, Rank, Timeline
from .schema import parse_match, parse_timeline, serialize_match, serialize_timeline
from .vendor import from_vendor_match, from_vendor_timeline, is_vendor_match, rank_from_entries

logger = logging.getLogger(__name__)

MIN_DURATION_S = 23 * 60


def filter_corpus(
    records: Iterable[MatchRecord],
    ranked: Iterable[QueueKind] = RANKED_QUEUES,
    min_duration_s: int = MIN_DURATION_S,
) -> list[MatchRecord]:
    """Keep full-length ranked 5v5 matches, first occurrence of each match id.

    Relative order of the survivors is preserved. Filtering never raises.
    """
    ranked = frozenset(ranked)
    seen: set[str] = set()
    out = []
    for rec in records:
        if rec.match_id in seen:
            continue
        if (
            rec.queue_kind in ranked
            and rec.duration_s >= min_duration_s
            and not rec.ended_early
            and len(rec.teams) == 2
            and all(team.is_full for team in rec.teams)
        ):
            seen.add(rec.match_id)
            out.append(rec)
    return out


def per_minute(raw: float, duration_s: int) -> float:
    if duration_s <= 0:
        raise DomainError(f"duration_s must be positive, got {duration_s}")
    return raw * 60 / duration_s


def per_minute_metrics(player: PlayerRow, duration_s: int) -> PerMinuteMetrics:
    return PerMinuteMetrics(
        gold_pm=per_minute(player.gold, duration_s),
        xp_pm=per_minute(player.experience, duration_s),
        vision_pm=per_minute(player.vision_score, duration_s),
        assists_pm=per_minute(player.assists, duration_s),
        minions_pm=per_minute(player.minion_kills, duration_s),
    )


def zscore(values: np.ndarray) -> np.ndarray:
    """Column-wise standardization with population sd; constant columns map to 0."""
    values = np.asarray(values, dtype=float)
    mean = values.mean(axis=0)
    sd = values.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (values - mean) / sd


# --- on-disk corpora -------------------------------------------------------
#
#   <root>/matches/<match_id>.json     canonical or vendor match document
#   <root>/timelines/<match_id>.json   canonical or vendor timeline document
#   <root>/ranks/<puuid>.json          vendor league entries (optional)


def _read_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_match(path: Path, ranks: dict[str, Rank | None] | None = None) -> MatchRecord:
    doc = _read_json(path)
    if is_vendor_match(doc):
        return from_vendor_match(doc, ranks)
    return parse_match(doc)


def load_timeline(path: Path) -> Timeline:
    doc = _read_json(path)
    if is_vendor_match(doc):
        return from_vendor_timeline(doc)
    return parse_timeline(doc)


def load_ranks(root: Path) -> dict[str, Rank | None]:
    ranks: dict[str, Rank | None] = {}
    rank_dir = Path(root) / "ranks"
    if rank_dir.is_dir():
        for path in sorted(rank_dir.glob("*.json")):
            ranks[path.stem] = rank_from_entries(_read_json(path))
    return ranks


def load_corpus(root: str | Path) -> tuple[list[MatchRecord], dict[str, Timeline]]:
    """Load every match under ``root`` (sorted by file name) plus available timelines."""
    root = Path(root)
    ranks = load_ranks(root)
    matches = []
    for path in sorted((root / "matches").glob("*.json")):
        try:
            matches.append(load_match(path, ranks))
        except (ValueError, KeyError) as exc:
            logger.warning("skipping %s: %s", path.name, exc)
    timelines = {}
    tl_dir = root / "timelines"
    for rec in matches:
        path = tl_dir / f"{rec.match_id}.json"
        if path.exists():
            timelines[rec.match_id] = load_timeline(path)
    return matches, timelines


def write_corpus(root: str | Path, matches: Iterable[MatchRecord], timelines: dict[str, Timeline]) -> None:
    root = Path(root)
    (root / "matches").mkdir(parents=True, exist_ok=True)
    (root / "timelines").mkdir(parents=True, exist_ok=True)
    for rec in matches:
        (root / "matches" / f"{rec.match_id}.json").write_text(serialize_match(rec), encoding="utf-8")
        tl = timelines.get(rec.match_id)
        if tl is not None:
            (root / "timelines" / f"{rec.match_id}.json").write_text(serialize_timeline(tl), encoding="utf-8")
