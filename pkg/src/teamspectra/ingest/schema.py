"""Canonical match/timeline JSON encoding.

Match documents::

    {"match_id": str, "queue": "ranked_solo"|"ranked_flex"|"other",
     "duration_s": int, "ended_early": bool, "region": str,
     "teams": [{"won": bool, "players": [PLAYER x5]} x2]}

Timeline documents::

    {"match_id": str,
     "events": [{"t_ms": int, "kind": str, "killer": int, "victim": int|null,
                 "assisters": [int], "pos": [int, int]|null}],
     "frames": [{"t_ms": int, "positions": [[int, int]|null x10]}]}

``frames`` is optional on input. Encoding is deterministic, so
``dumps(load(dumps(x))) == dumps(x)`` byte for byte.
"""

from __future__ import annotations

import json
from typing import Any

from ..errors import CardinalityError, SchemaError
from .model import (
    Division,
    EventKind,
    Frame,
    MatchRecord,
    PlayerRow,
    QueueKind,
    Rank,
    Role,
    TeamSide,
    Tier,
    Timeline,
    TimelineEvent,
)

_PLAYER_INTS = (
    "gold",
    "experience",
    "vision_score",
    "kills",
    "deaths",
    "assists",
    "tower_kills",
    "elite_kills",
    "minion_kills",
)


def _load(raw: Any) -> Any:
    if isinstance(raw, (str, bytes, bytearray)):
        return json.loads(raw)
    return raw


def _get(obj: Any, key: str, kind: type | tuple[type, ...], where: str, optional: bool = False):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object", field=where)
    if key not in obj:
        if optional:
            return None
        raise SchemaError(f"{where}: missing required field {key!r}", field=key)
    value = obj[key]
    if value is None and optional:
        return None
    # bool is an int subclass; never accept it where an int is expected
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{where}.{key}: expected int, got bool", field=key)
    if not isinstance(value, kind):
        raise SchemaError(
            f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
            field=key,
        )
    return value


def _non_negative(value: int, key: str, where: str) -> int:
    if value < 0:
        raise SchemaError(f"{where}.{key}: must be non-negative", field=key)
    return value


def _enum(enum_cls, value: str, key: str, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        raise SchemaError(f"{where}.{key}: unknown value {value!r}", field=key) from None


def _parse_rank(obj: Any, where: str) -> Rank | None:
    if obj is None:
        return None
    tier_name = _get(obj, "tier", str, where)
    try:
        tier = Tier[tier_name.capitalize()]
    except KeyError:
        raise SchemaError(f"{where}.tier: unknown tier {tier_name!r}", field="tier") from None
    division_name = _get(obj, "division", str, where, optional=True)
    division = None if division_name is None else _enum(Division, division_name, "division", where)
    lp = _get(obj, "lp", int, where)
    try:
        return Rank(tier, division, lp)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}", field="rank") from None


def _parse_player(obj: Any, where: str) -> PlayerRow:
    values = {k: _non_negative(_get(obj, k, int, where), k, where) for k in _PLAYER_INTS}
    return PlayerRow(
        player_id=_get(obj, "player_id", str, where),
        role=_enum(Role, _get(obj, "role", str, where), "role", where),
        rank=_parse_rank(obj.get("rank"), f"{where}.rank"),
        **values,
    )


def parse_match(raw: Any) -> MatchRecord:
    """Build a :class:`MatchRecord` from a canonical match document.

    Unknown fields are ignored. Raises :class:`SchemaError` for missing or
    mistyped fields and :class:`CardinalityError` when a team does not have
    exactly five players.
    """
    doc = _load(raw)
    match_id = _get(doc, "match_id", str, "match")
    where = f"match[{match_id}]"
    queue = _enum(QueueKind, _get(doc, "queue", str, where), "queue", where)
    duration = _non_negative(_get(doc, "duration_s", int, where), "duration_s", where)
    ended_early = _get(doc, "ended_early", bool, where)
    region = doc.get("region", "")
    if not isinstance(region, str):
        raise SchemaError(f"{where}.region: expected str", field="region")
    teams_raw = _get(doc, "teams", list, where)
    if len(teams_raw) != 2:
        raise CardinalityError(f"{where}: expected 2 teams, got {len(teams_raw)}")
    teams = []
    for t, team in enumerate(teams_raw):
        twhere = f"{where}.teams[{t}]"
        won = _get(team, "won", bool, twhere)
        players_raw = _get(team, "players", list, twhere)
        if len(players_raw) != 5:
            raise CardinalityError(f"{twhere}: expected 5 players, got {len(players_raw)}")
        players = tuple(_parse_player(p, f"{twhere}.players[{i}]") for i, p in enumerate(players_raw))
        if len({p.role for p in players}) != 5:
            raise SchemaError(f"{twhere}: roles must be unique within a team", field="role")
        teams.append(TeamSide(won=won, players=players))
    if teams[0].won == teams[1].won:
        raise SchemaError(f"{where}: exactly one team must have won", field="won")
    if duration == 0:
        raise SchemaError(f"{where}.duration_s: must be positive", field="duration_s")
    return MatchRecord(
        match_id=match_id,
        queue_kind=queue,
        duration_s=duration,
        ended_early=ended_early,
        teams=(teams[0], teams[1]),
        region=region,
    )


def _rank_doc(rank: Rank | None) -> dict | None:
    if rank is None:
        return None
    return {
        "tier": rank.tier.name.upper(),
        "division": None if rank.division is None else rank.division.value,
        "lp": rank.league_points,
    }


def match_to_doc(record: MatchRecord) -> dict:
    return {
        "match_id": record.match_id,
        "queue": record.queue_kind.value,
        "duration_s": record.duration_s,
        "ended_early": record.ended_early,
        "region": record.region,
        "teams": [
            {
                "won": team.won,
                "players": [
                    {
                        "player_id": p.player_id,
                        "role": p.role.value,
                        **{k: getattr(p, k) for k in _PLAYER_INTS},
                        "rank": _rank_doc(p.rank),
                    }
                    for p in team.players
                ],
            }
            for team in record.teams
        ],
    }


def serialize_match(record: MatchRecord) -> str:
    return json.dumps(match_to_doc(record), separators=(",", ":"))


def _int_pair(value: Any, key: str, where: str) -> tuple[int, int]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise SchemaError(f"{where}.{key}: expected [int, int]", field=key)
    return (value[0], value[1])


def parse_timeline(raw: Any) -> Timeline:
    doc = _load(raw)
    match_id = _get(doc, "match_id", str, "timeline")
    where = f"timeline[{match_id}]"
    events = []
    for i, ev in enumerate(_get(doc, "events", list, where)):
        ewhere = f"{where}.events[{i}]"
        kind = _enum(EventKind, _get(ev, "kind", str, ewhere), "kind", ewhere)
        assisters = _get(ev, "assisters", list, ewhere)
        if not all(isinstance(a, int) and not isinstance(a, bool) for a in assisters):
            raise SchemaError(f"{ewhere}.assisters: expected list of int", field="assisters")
        pos = _get(ev, "pos", list, ewhere, optional=True)
        try:
            events.append(
                TimelineEvent(
                    timestamp_ms=_non_negative(_get(ev, "t_ms", int, ewhere), "t_ms", ewhere),
                    kind=kind,
                    killer_id=_get(ev, "killer", int, ewhere),
                    victim_id=_get(ev, "victim", int, ewhere, optional=True),
                    assister_ids=tuple(assisters),
                    position=None if pos is None else _int_pair(pos, "pos", ewhere),
                )
            )
        except ValueError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"{ewhere}: {exc}") from None
    frames = []
    for i, fr in enumerate(doc.get("frames") or []):
        fwhere = f"{where}.frames[{i}]"
        positions = _get(fr, "positions", list, fwhere)
        if len(positions) != 10:
            raise CardinalityError(f"{fwhere}: expected 10 positions, got {len(positions)}")
        frames.append(
            Frame(
                timestamp_ms=_non_negative(_get(fr, "t_ms", int, fwhere), "t_ms", fwhere),
                positions=tuple(None if p is None else _int_pair(p, "positions", fwhere) for p in positions),
            )
        )
    return Timeline(match_id=match_id, events=tuple(events), frames=tuple(frames))


def timeline_to_doc(timeline: Timeline) -> dict:
    doc = {
        "match_id": timeline.match_id,
        "events": [
            {
                "t_ms": e.timestamp_ms,
                "kind": e.kind.value,
                "killer": e.killer_id,
                "victim": e.victim_id,
                "assisters": list(e.assister_ids),
                "pos": None if e.position is None else list(e.position),
            }
            for e in timeline.events
        ],
    }
    if timeline.frames:
        doc["frames"] = [
            {"t_ms": f.timestamp_ms, "positions": [None if p is None else list(p) for p in f.positions]}
            for f in timeline.frames
        ]
    return doc


def serialize_timeline(timeline: Timeline) -> str:
    return json.dumps(timeline_to_doc(timeline), separators=(",", ":"))
