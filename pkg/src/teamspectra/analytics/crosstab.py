"""Win-rate tables across team and player cluster labels."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping

TEAM_LABELS = ("cooperative", "non_cooperative", "average")
PLAYER_LABELS = ("acquiring", "sharing", "average")
MAJORITY = 3

# player-type unions used for the consolidated comparison
LOW_SKILL = frozenset({"average", "sharing"})
HIGH_SKILL = frozenset({"average", "acquiring"})


def _name(label) -> str:
    return str(getattr(label, "value", label))


def _rate(wins: int, games: int) -> float | None:
    return wins / games if games else None


@dataclass(frozen=True)
class RateRow:
    level: str
    label: str
    games: int
    wins: int

    @property
    def losses(self) -> int:
        return self.games - self.wins

    @property
    def win_rate(self) -> float | None:
        return _rate(self.wins, self.games)


@dataclass(frozen=True)
class CrossCell:
    team_label: str
    player_type: str
    matches: int
    wins: int

    @property
    def win_rate(self) -> float | None:
        return _rate(self.wins, self.matches)


@dataclass(frozen=True)
class HeadToHead:
    games: int
    cooperative_wins: int

    @property
    def non_cooperative_wins(self) -> int:
        return self.games - self.cooperative_wins

    @property
    def cooperative_share(self) -> float | None:
        return _rate(self.cooperative_wins, self.games)


@dataclass(frozen=True)
class WinRateTable:
    marginals: tuple[RateRow, ...]
    cells: tuple[CrossCell, ...]
    consolidated: tuple[RateRow, ...]
    head_to_head: HeadToHead

    def cell(self, team_label: str, player_type: str) -> CrossCell:
        for c in self.cells:
            if c.team_label == _name(team_label) and c.player_type == _name(player_type):
                return c
        raise KeyError((team_label, player_type))

    def marginal(self, level: str, label: str) -> RateRow:
        for r in self.marginals:
            if r.level == level and r.label == _name(label):
                return r
        raise KeyError((level, label))


def majority_type(types: list[str]) -> str | None:
    """The player type held by at least three of the five players, if any."""
    label, count = Counter(types).most_common(1)[0]
    return label if count >= MAJORITY else None


def crosstab(
    team_clusters: Mapping[tuple[str, int], object],
    player_clusters: Mapping[tuple[str, int, int], object],
    outcomes: Mapping[tuple[str, int], bool],
) -> WinRateTable:
    """Marginal win rates, team-label x majority-player-type cross tabulation,
    the consolidated low-skill-cooperative vs high-skill-non-cooperative
    comparison and its head-to-head subset."""
    members: dict[tuple[str, int], list[str]] = defaultdict(list)
    for (match_id, team, _), label in sorted(player_clusters.items()):
        members[(match_id, team)].append(_name(label))

    team_games = Counter()
    team_wins = Counter()
    player_games = Counter()
    player_wins = Counter()
    cell_games = Counter()
    cell_wins = Counter()
    cons_games = Counter()
    cons_wins = Counter()
    flavour: dict[tuple[str, int], str] = {}
    for key in sorted(team_clusters):
        tl = _name(team_clusters[key])
        won = bool(outcomes[key])
        team_games[tl] += 1
        team_wins[tl] += won
        types = members.get(key, [])
        for pt in types:
            player_games[pt] += 1
            player_wins[pt] += won
        if len(types) != 5:
            continue
        maj = majority_type(types)
        if maj is not None:
            cell_games[(tl, maj)] += 1
            cell_wins[(tl, maj)] += won
        counts = Counter(types)
        if tl == "cooperative" and sum(counts[t] for t in LOW_SKILL) >= MAJORITY:
            flavour[key] = "cooperative+low_skill"
        elif tl == "non_cooperative" and sum(counts[t] for t in HIGH_SKILL) >= MAJORITY:
            flavour[key] = "non_cooperative+high_skill"
        if key in flavour:
            cons_games[flavour[key]] += 1
            cons_wins[flavour[key]] += won

    marginals = [RateRow("team", lab, team_games[lab], team_wins[lab]) for lab in TEAM_LABELS]
    marginals.append(RateRow("team", "overall", sum(team_games.values()), sum(team_wins.values())))
    marginals += [RateRow("player", lab, player_games[lab], player_wins[lab]) for lab in PLAYER_LABELS]
    marginals.append(RateRow("player", "overall", sum(player_games.values()), sum(player_wins.values())))

    cells = tuple(
        CrossCell(tl, pt, cell_games[(tl, pt)], cell_wins[(tl, pt)]) for tl in TEAM_LABELS for pt in PLAYER_LABELS
    )
    consolidated = tuple(
        RateRow("team", f, cons_games[f], cons_wins[f]) for f in ("cooperative+low_skill", "non_cooperative+high_skill")
    )

    h2h_games = h2h_coop = 0
    matches = sorted({m for m, _ in team_clusters})
    for m in matches:
        f0, f1 = flavour.get((m, 0)), flavour.get((m, 1))
        if {f0, f1} == {"cooperative+low_skill", "non_cooperative+high_skill"}:
            coop_side = 0 if f0 == "cooperative+low_skill" else 1
            h2h_games += 1
            h2h_coop += bool(outcomes[(m, coop_side)])
    return WinRateTable(tuple(marginals), cells, consolidated, HeadToHead(h2h_games, h2h_coop))
