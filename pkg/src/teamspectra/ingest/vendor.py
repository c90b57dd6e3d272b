"""Adapter between the vendor's match-v5 / timeline-v5 shapes and the canonical model.

Only the subset of vendor fields the pipeline needs is read; everything else
is ignored. The reverse direction (``to_vendor_*``) exists so the stub server
can serve canonical fixtures in the vendor shape.
"""

from __future__ import annotations

import bisect
from typing import Any, Mapping

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
from .schema import _get, _load

QUEUE_IDS = {420: QueueKind.RankedSolo, 440: QueueKind.RankedFlex}
_QUEUE_TO_ID = {QueueKind.RankedSolo: 420, QueueKind.RankedFlex: 440, QueueKind.Other: 400}

_POSITIONS = {
    "TOP": Role.Top,
    "MIDDLE": Role.Mid,
    "BOTTOM": Role.Bottom,
    "JUNGLE": Role.Jungle,
    "UTILITY": Role.Support,
}
_ROLE_TO_POSITION = {v: k for k, v in _POSITIONS.items()}

_EVENT_TYPES = {
    "CHAMPION_KILL": EventKind.ChampionKill,
    "BUILDING_KILL": EventKind.BuildingKill,
    "ELITE_MONSTER_KILL": EventKind.EliteMonsterKill,
}
_KIND_TO_TYPE = {v: k for k, v in _EVENT_TYPES.items()}

RANK_QUEUE_TYPES = {QueueKind.RankedSolo: "RANKED_SOLO_5x5", QueueKind.RankedFlex: "RANKED_FLEX_SR"}


def is_vendor_match(doc: Mapping) -> bool:
    return isinstance(doc, Mapping) and "metadata" in doc and "info" in doc


def rank_from_entries(entries: list[dict], queue: QueueKind = QueueKind.RankedSolo) -> Rank | None:
    """Pick the rank for ``queue`` from a league ``entries/by-summoner`` response."""
    wanted = RANK_QUEUE_TYPES.get(queue, "RANKED_SOLO_5x5")
    for entry in entries:
        if entry.get("queueType") != wanted:
            continue
        tier = Tier[str(entry["tier"]).capitalize()]
        division = Division(entry["rank"]) if tier.has_divisions else None
        lp = int(entry.get("leaguePoints", 0))
        if tier.has_divisions:
            lp = min(max(lp, 0), 100)
        return Rank(tier, division, lp)
    return None


def from_vendor_match(raw: Any, ranks: Mapping[str, Rank | None] | None = None) -> MatchRecord:
    """Map a match-v5 document to a :class:`MatchRecord`.

    ``ranks`` maps puuid to the player's rank (looked up separately through
    the league endpoint); missing players get ``rank=None``.
    """
    doc = _load(raw)
    metadata = _get(doc, "metadata", dict, "vendor")
    info = _get(doc, "info", dict, "vendor")
    match_id = _get(metadata, "matchId", str, "vendor.metadata")
    where = f"vendor[{match_id}]"
    participants = _get(info, "participants", list, f"{where}.info")
    by_team: dict[int, list[dict]] = {100: [], 200: []}
    for p in participants:
        team_id = _get(p, "teamId", int, f"{where}.participant")
        by_team.setdefault(team_id, []).append(p)
    teams = []
    ranks = ranks or {}
    for team_id in (100, 200):
        members = sorted(by_team.get(team_id, []), key=lambda p: p.get("participantId", 0))
        if len(members) != 5:
            raise CardinalityError(f"{where}: team {team_id} has {len(members)} players")
        rows = []
        for p in members:
            pw = f"{where}.participant[{p.get('participantId')}]"
            position = _get(p, "teamPosition", str, pw)
            if position not in _POSITIONS:
                raise SchemaError(f"{pw}.teamPosition: unknown value {position!r}", field="teamPosition")
            puuid = _get(p, "puuid", str, pw)
            rows.append(
                PlayerRow(
                    player_id=puuid,
                    role=_POSITIONS[position],
                    gold=_get(p, "goldEarned", int, pw),
                    experience=_get(p, "champExperience", int, pw),
                    vision_score=_get(p, "visionScore", int, pw),
                    kills=_get(p, "kills", int, pw),
                    deaths=_get(p, "deaths", int, pw),
                    assists=_get(p, "assists", int, pw),
                    tower_kills=_get(p, "turretKills", int, pw),
                    elite_kills=int(p.get("dragonKills", 0)) + int(p.get("baronKills", 0)),
                    minion_kills=_get(p, "totalMinionsKilled", int, pw),
                    rank=ranks.get(puuid),
                )
            )
        won = bool(members[0].get("win", False))
        teams.append(TeamSide(won=won, players=tuple(rows)))
    if teams[0].won == teams[1].won:
        raise SchemaError(f"{where}: exactly one team must have won", field="win")
    duration = _get(info, "gameDuration", int, f"{where}.info")
    # pre-2021 documents reported milliseconds
    if duration > 20_000:
        duration //= 1000
    return MatchRecord(
        match_id=match_id,
        queue_kind=QUEUE_IDS.get(_get(info, "queueId", int, f"{where}.info"), QueueKind.Other),
        duration_s=duration,
        ended_early=any(bool(p.get("gameEndedInEarlySurrender", False)) for p in participants),
        teams=(teams[0], teams[1]),
        region=str(info.get("platformId", "")),
    )


def match_participants(raw: Any) -> list[dict]:
    """(puuid, summonerId) pairs for every participant of a vendor match document."""
    doc = _load(raw)
    out = []
    for p in doc.get("info", {}).get("participants", []):
        out.append({"puuid": p.get("puuid"), "summonerId": p.get("summonerId", p.get("puuid"))})
    return out


def from_vendor_timeline(raw: Any) -> Timeline:
    doc = _load(raw)
    match_id = _get(_get(doc, "metadata", dict, "vendor-timeline"), "matchId", str, "vendor-timeline.metadata")
    frames_raw = _get(_get(doc, "info", dict, "vendor-timeline"), "frames", list, "vendor-timeline.info")
    frames = []
    events = []
    for fr in frames_raw:
        pframes = fr.get("participantFrames") or {}
        positions = []
        for i in range(1, 11):
            pos = (pframes.get(str(i)) or {}).get("position")
            positions.append(None if pos is None else (int(pos["x"]), int(pos["y"])))
        if pframes:
            frames.append(Frame(timestamp_ms=int(fr.get("timestamp", 0)), positions=tuple(positions)))
        for ev in fr.get("events", []):
            kind = _EVENT_TYPES.get(ev.get("type"))
            killer = int(ev.get("killerId", 0))
            # killerId 0 = minion / turret / monster credit, not a player
            if kind is None or not 1 <= killer <= 10:
                continue
            pos = ev.get("position")
            victim = ev.get("victimId")
            assisters = tuple(a for a in ev.get("assistingParticipantIds", []) if a != killer and 1 <= a <= 10)
            events.append(
                TimelineEvent(
                    timestamp_ms=int(ev["timestamp"]),
                    kind=kind,
                    killer_id=killer,
                    victim_id=int(victim) if victim and 1 <= int(victim) <= 10 else None,
                    assister_ids=assisters,
                    position=None if pos is None else (int(pos["x"]), int(pos["y"])),
                )
            )
    events.sort(key=lambda e: e.timestamp_ms)
    return Timeline(match_id=match_id, events=tuple(events), frames=tuple(frames))


def to_vendor_match(record: MatchRecord) -> dict:
    participants = []
    for t, team in enumerate(record.teams):
        for s, p in enumerate(team.players):
            participants.append(
                {
                    "participantId": 5 * t + s + 1,
                    "puuid": p.player_id,
                    "summonerId": f"s-{p.player_id}",
                    "teamId": 100 * (t + 1),
                    "teamPosition": _ROLE_TO_POSITION[p.role],
                    "win": team.won,
                    "goldEarned": p.gold,
                    "champExperience": p.experience,
                    "visionScore": p.vision_score,
                    "kills": p.kills,
                    "deaths": p.deaths,
                    "assists": p.assists,
                    "turretKills": p.tower_kills,
                    "dragonKills": p.elite_kills,
                    "baronKills": 0,
                    "totalMinionsKilled": p.minion_kills,
                    "gameEndedInEarlySurrender": record.ended_early,
                }
            )
    return {
        "metadata": {"matchId": record.match_id, "participants": [p["puuid"] for p in participants]},
        "info": {
            "gameDuration": record.duration_s,
            "queueId": _QUEUE_TO_ID[record.queue_kind],
            "platformId": record.region,
            "participants": participants,
            "teams": [{"teamId": 100 * (t + 1), "win": team.won} for t, team in enumerate(record.teams)],
        },
    }


def to_vendor_rank_entries(rank: Rank | None, summoner_id: str) -> list[dict]:
    if rank is None:
        return []
    return [
        {
            "queueType": "RANKED_SOLO_5x5",
            "summonerId": summoner_id,
            "tier": rank.tier.name.upper(),
            "rank": rank.division.value if rank.division else "I",
            "leaguePoints": rank.league_points,
        }
    ]


def to_vendor_timeline(timeline: Timeline) -> dict:
    frames = [
        {
            "timestamp": f.timestamp_ms,
            "participantFrames": {
                str(i + 1): {"position": {"x": p[0], "y": p[1]}} for i, p in enumerate(f.positions) if p is not None
            },
            "events": [],
        }
        for f in timeline.frames
    ] or [{"timestamp": 0, "participantFrames": {}, "events": []}]
    stamps = [f["timestamp"] for f in frames]
    for e in timeline.events:
        slot = max(bisect.bisect_right(stamps, e.timestamp_ms) - 1, 0)
        ev = {
            "type": _KIND_TO_TYPE[e.kind],
            "timestamp": e.timestamp_ms,
            "killerId": e.killer_id,
            "assistingParticipantIds": list(e.assister_ids),
        }
        if e.victim_id is not None:
            ev["victimId"] = e.victim_id
        if e.position is not None:
            ev["position"] = {"x": e.position[0], "y": e.position[1]}
        frames[slot]["events"].append(ev)
    return {"metadata": {"matchId": timeline.match_id}, "info": {"frames": frames}}
