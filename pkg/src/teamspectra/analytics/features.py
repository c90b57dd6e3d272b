"""Individual and collective feature matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import MissingGraph
from ..ingest.corpus import per_minute_metrics, zscore
from ..ingest.model import MatchRecord
from ..teamgraph import GraphMetrics, cap_disconnected
from .efa import Level

INDIVIDUAL_COLUMNS = ("vision_pm", "gold_pm", "xp_pm", "player_in_degree", "player_out_degree")
COLLECTIVE_COLUMNS = (
    "avg_gold_pm",
    "avg_vision_pm",
    "avg_xp_pm",
    "team_in_centrality",
    "team_out_centrality",
    "egr",
)

# centralization of an assist-free team: treated as fully centralized
EMPTY_GRAPH_CENTRALIZATION = 1.0


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    level: Level
    label: np.ndarray
    keys: tuple[tuple, ...]
    raw: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def _graph(graphs: Mapping, match_id: str, team: int) -> GraphMetrics:
    try:
        return graphs[(match_id, team)]
    except KeyError:
        raise MissingGraph(f"no graph metrics for match {match_id} team {team}") from None


def assemble_features(
    corpus: Sequence[MatchRecord],
    graphs: Mapping[tuple[str, int], GraphMetrics],
    level: Level | str,
    standardize: bool = True,
    egr_cap_percentile: float = 99.0,
) -> FeatureMatrix:
    """One row per player (individual) or per team (collective).

    Disconnected EGR values are replaced by the corpus percentile cap before
    standardization. Values are z-scored with the population sd.
    """
    level = Level(level)
    rows, keys, labels = [], [], []
    if level is Level.Individual:
        for m in corpus:
            for t, team in enumerate(m.teams):
                g = _graph(graphs, m.match_id, t)
                for s, p in enumerate(team.players):
                    pm = per_minute_metrics(p, m.duration_s)
                    rows.append((pm.vision_pm, pm.gold_pm, pm.xp_pm, g.in_degree[s], g.out_degree[s]))
                    keys.append((m.match_id, t, s))
                    labels.append(team.won)
        columns = INDIVIDUAL_COLUMNS
        raw = np.array(rows, dtype=float).reshape(-1, len(columns))
    else:
        egrs = []
        for m in corpus:
            for t, team in enumerate(m.teams):
                g = _graph(graphs, m.match_id, t)
                pms = [per_minute_metrics(p, m.duration_s) for p in team.players]
                c_in = g.team_in_centrality
                c_out = g.team_out_centrality
                rows.append(
                    (
                        np.mean([x.gold_pm for x in pms]),
                        np.mean([x.vision_pm for x in pms]),
                        np.mean([x.xp_pm for x in pms]),
                        EMPTY_GRAPH_CENTRALIZATION if c_in is None else c_in,
                        EMPTY_GRAPH_CENTRALIZATION if c_out is None else c_out,
                        0.0,
                    )
                )
                egrs.append(g.egr)
                keys.append((m.match_id, t))
                labels.append(team.won)
        columns = COLLECTIVE_COLUMNS
        raw = np.array(rows, dtype=float).reshape(-1, len(columns))
        if egrs:
            raw[:, -1], _ = cap_disconnected(egrs, egr_cap_percentile)
    values = zscore(raw) if standardize and raw.shape[0] else raw.copy()
    return FeatureMatrix(
        values=values,
        columns=columns,
        level=level,
        label=np.array(labels, dtype=bool),
        keys=tuple(keys),
        raw=raw,
    )


def team_tier(match: MatchRecord, team: int, how: str = "mean") -> int | None:
    """Team rank tier ordinal for grouping: rounded mean (or mode) of player tiers."""
    tiers = [int(p.rank.tier) for p in match.teams[team].players if p.rank is not None]
    if not tiers:
        return None
    if how == "mode":
        values, counts = np.unique(tiers, return_counts=True)
        return int(values[np.argmax(counts)])
    # round half up, so 2.5 -> 3 deterministically
    return int(np.floor(np.mean(tiers) + 0.5))
