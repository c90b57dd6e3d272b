"""Canonical match and timeline records."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class QueueKind(enum.Enum):
    RankedSolo = "ranked_solo"
    RankedFlex = "ranked_flex"
    Other = "other"


RANKED_QUEUES = frozenset({QueueKind.RankedSolo, QueueKind.RankedFlex})


class Role(enum.Enum):
    Top = "top"
    Mid = "mid"
    Bottom = "bottom"
    Jungle = "jungle"
    Support = "support"


class Tier(enum.IntEnum):
    Iron = 0
    Bronze = 1
    Silver = 2
    Gold = 3
    Platinum = 4
    Emerald = 5
    Diamond = 6
    Master = 7
    Grandmaster = 8
    Challenger = 9

    @property
    def has_divisions(self) -> bool:
        return self < Tier.Master


class Division(enum.Enum):
    IV = "IV"
    III = "III"
    II = "II"
    I = "I"  # noqa: E741


class EventKind(enum.Enum):
    ChampionKill = "champion_kill"
    BuildingKill = "building_kill"
    EliteMonsterKill = "elite_monster_kill"


@dataclass(frozen=True)
class Rank:
    tier: Tier
    division: Division | None
    league_points: int

    def __post_init__(self):
        if self.tier.has_divisions:
            if self.division is None:
                raise ValueError(f"{self.tier.name} requires a division")
            if not 0 <= self.league_points <= 100:
                raise ValueError(f"league points {self.league_points} outside 0..100")
        elif self.division is not None:
            raise ValueError(f"{self.tier.name} has no divisions")


@dataclass(frozen=True)
class PlayerRow:
    player_id: str
    role: Role
    gold: int
    experience: int
    vision_score: int
    kills: int
    deaths: int
    assists: int
    tower_kills: int
    elite_kills: int
    minion_kills: int
    rank: Rank | None = None


@dataclass(frozen=True)
class TeamSide:
    won: bool
    players: tuple[PlayerRow, ...]

    @property
    def is_full(self) -> bool:
        return len(self.players) == 5


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    queue_kind: QueueKind
    duration_s: int
    ended_early: bool
    teams: tuple[TeamSide, TeamSide]
    region: str = ""

    @property
    def winner(self) -> int:
        return 0 if self.teams[0].won else 1

    def participant(self, index: int) -> PlayerRow:
        """Player for a 1-based participant index (1-5 first team, 6-10 second)."""
        team, slot = divmod(index - 1, 5)
        return self.teams[team].players[slot]


def team_participants(team: int) -> tuple[int, ...]:
    """Participant indices belonging to team 0 or team 1."""
    start = 5 * team + 1
    return tuple(range(start, start + 5))


@dataclass(frozen=True)
class TimelineEvent:
    timestamp_ms: int
    kind: EventKind
    killer_id: int
    victim_id: int | None = None
    assister_ids: tuple[int, ...] = ()
    position: tuple[int, int] | None = None

    def __post_init__(self):
        if self.killer_id in self.assister_ids:
            raise ValueError("killer cannot also be listed as an assister")
        for p in (self.killer_id, *self.assister_ids):
            if not 1 <= p <= 10:
                raise ValueError(f"participant index {p} outside 1..10")
        if self.victim_id is not None and not 1 <= self.victim_id <= 10:
            raise ValueError(f"participant index {self.victim_id} outside 1..10")


@dataclass(frozen=True)
class Frame:
    """Participant positions sampled at one instant; ``positions[i]`` is participant i+1."""

    timestamp_ms: int
    positions: tuple[tuple[int, int] | None, ...]

    def position_of(self, participant: int) -> tuple[int, int] | None:
        return self.positions[participant - 1]


@dataclass(frozen=True)
class Timeline:
    match_id: str
    events: tuple[TimelineEvent, ...] = ()
    frames: tuple[Frame, ...] = field(default=())


@dataclass(frozen=True)
class PerMinuteMetrics:
    gold_pm: float
    xp_pm: float
    vision_pm: float
    assists_pm: float
    minions_pm: float
