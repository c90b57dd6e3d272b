"""Per-team assist graphs and their degree, centralization and resistance metrics.

Each team is a 5-node directed graph. ``W[i, j]`` counts assists given by
team-local node ``i`` to node ``j``; every assist form (kill, tower, elite
monster, positional map pressure) carries unit weight.
"""

from __future__ import annotations

import bisect
import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import UndefinedForEmptyGraph
from .ingest.model import EventKind, MatchRecord, Timeline, TimelineEvent, team_participants

N_NODES = 5
DEFAULT_PRESSURE_RADIUS = 2000.0
DEFAULT_ZERO_TOL = 1e-9


class Direction(enum.Enum):
    In = "in"
    Out = "out"


class AssistKind(enum.Enum):
    KillAssist = "kill"
    TowerAssist = "tower"
    EliteAssist = "elite"
    MapPressure = "pressure"


_EXPLICIT_KIND = {
    EventKind.ChampionKill: AssistKind.KillAssist,
    EventKind.BuildingKill: AssistKind.TowerAssist,
    EventKind.EliteMonsterKill: AssistKind.EliteAssist,
}


class MissingPositionWarning(UserWarning):
    """Champion kills without usable positions were skipped for map-pressure detection."""


class _Disconnected:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DISCONNECTED"

    def __reduce__(self):
        return (_Disconnected, ())


DISCONNECTED = _Disconnected()
"""Returned by :func:`egr` when the symmetrized graph has more than one component."""


@dataclass(frozen=True)
class AssistEdgeEvent:
    giver: int
    receiver: int
    kind: AssistKind
    timestamp_ms: int = 0

    def __post_init__(self):
        if self.giver == self.receiver:
            raise ValueError("an assist edge cannot be a self-loop")
        if not (0 <= self.giver < N_NODES and 0 <= self.receiver < N_NODES):
            raise ValueError("node index outside 0..4")


@dataclass(frozen=True, eq=False)
class TeamGraph:
    W: np.ndarray

    @property
    def total(self) -> float:
        """A, the total assist weight in the team."""
        return float(self.W.sum())


@dataclass(frozen=True)
class GraphMetrics:
    in_degree: np.ndarray
    out_degree: np.ndarray
    team_in_centrality: float | None  # None when A == 0
    team_out_centrality: float | None
    egr: float | _Disconnected
    laplacian_eigenvalues: np.ndarray = field(repr=False)
    total: float = 0.0

    @property
    def disconnected(self) -> bool:
        return self.egr is DISCONNECTED


def _frame_lookup(timeline: Timeline):
    stamps = [f.timestamp_ms for f in timeline.frames]

    def at(t_ms: int):
        i = bisect.bisect_right(stamps, t_ms) - 1
        return timeline.frames[i] if i >= 0 else None

    return at


def extract_assists(
    timeline: Timeline | Sequence[TimelineEvent],
    team: Iterable[int],
    pressure_radius: float | None = DEFAULT_PRESSURE_RADIUS,
) -> list[AssistEdgeEvent]:
    """Assist edges (giver -> killer) for one team.

    Listed assisters yield kill/tower/elite edges. For champion kills, every
    other teammate whose position at the nearest frame at or before the kill
    lies within ``pressure_radius`` of the kill yields a map-pressure edge.
    ``pressure_radius=None`` disables pressure detection. Kills lacking a kill
    position or a frame are still counted for explicit assists; they are
    reported through a single :class:`MissingPositionWarning`.
    """
    members = sorted(team)
    if len(members) != N_NODES:
        raise ValueError(f"a team needs exactly {N_NODES} participants, got {len(members)}")
    node = {p: i for i, p in enumerate(members)}
    if isinstance(timeline, Timeline):
        events = timeline.events
        frame_at = _frame_lookup(timeline)
    else:
        events = tuple(timeline)
        frame_at = lambda t: None  # noqa: E731
    r2 = None if pressure_radius is None else float(pressure_radius) ** 2
    edges = []
    missing = 0
    for ev in events:
        receiver = node.get(ev.killer_id)
        if receiver is None:
            continue
        kind = _EXPLICIT_KIND[ev.kind]
        listed = set()
        for a in ev.assister_ids:
            giver = node.get(a)
            if giver is not None and giver != receiver:
                listed.add(giver)
                edges.append(AssistEdgeEvent(giver, receiver, kind, ev.timestamp_ms))
        if r2 is None or ev.kind is not EventKind.ChampionKill:
            continue
        frame = frame_at(ev.timestamp_ms) if ev.position is not None else None
        if frame is None:
            missing += 1
            continue
        kx, ky = ev.position
        for p in members:
            giver = node[p]
            if giver == receiver or giver in listed:
                continue
            pos = frame.position_of(p)
            if pos is None:
                continue
            dx, dy = pos[0] - kx, pos[1] - ky
            if dx * dx + dy * dy <= r2:
                edges.append(AssistEdgeEvent(giver, receiver, AssistKind.MapPressure, ev.timestamp_ms))
    if missing:
        warnings.warn(
            f"{missing} champion kill(s) without positions skipped for map pressure",
            MissingPositionWarning,
            stacklevel=2,
        )
    return edges


def build_graph(events: Iterable[AssistEdgeEvent]) -> TeamGraph:
    W = np.zeros((N_NODES, N_NODES))
    for e in events:
        W[e.giver, e.receiver] += 1.0
    return TeamGraph(W)


def degree(g: TeamGraph, node: int, direction: Direction) -> float:
    if direction is Direction.In:
        return float(g.W[:, node].sum())
    return float(g.W[node, :].sum())


def _degrees(g: TeamGraph, direction: Direction) -> np.ndarray:
    return g.W.sum(axis=0) if direction is Direction.In else g.W.sum(axis=1)


def centralization(g: TeamGraph, direction: Direction) -> float:
    """sum_i (d_max - d_i) / ((N - 1) A) over in- or out-degrees."""
    A = g.total
    if A <= 0:
        raise UndefinedForEmptyGraph("centralization is undefined for a graph without assists")
    d = _degrees(g, direction)
    c = float((d.max() - d).sum() / ((N_NODES - 1) * A))
    # exact value lies in [0, 1]; a single hub can round to 1 + ulp
    return min(max(c, 0.0), 1.0)


def laplacian_spectrum(g: TeamGraph) -> np.ndarray:
    """Ascending eigenvalues of the Laplacian of W + W^T."""
    S = g.W + g.W.T
    L = np.diag(S.sum(axis=1)) - S
    return np.linalg.eigvalsh(L)


def _egr_from_spectrum(mu: np.ndarray, zero_tol: float) -> float | _Disconnected:
    scale = max(float(mu[-1]), 0.0)
    tol = zero_tol * scale
    if scale == 0.0 or int((mu <= tol).sum()) > 1:
        return DISCONNECTED
    return float(len(mu) * np.sum(1.0 / mu[1:]))


def egr(g: TeamGraph, zero_tol: float = DEFAULT_ZERO_TOL) -> float | _Disconnected:
    """Effective graph resistance N * sum(1/mu) over the nonzero Laplacian eigenvalues.

    ``zero_tol`` is relative to the largest eigenvalue. Returns
    :data:`DISCONNECTED` when more than one eigenvalue is numerically zero.
    """
    return _egr_from_spectrum(laplacian_spectrum(g), zero_tol)


def graph_metrics(g: TeamGraph, zero_tol: float = DEFAULT_ZERO_TOL) -> GraphMetrics:
    mu = laplacian_spectrum(g)
    A = g.total
    return GraphMetrics(
        in_degree=_degrees(g, Direction.In),
        out_degree=_degrees(g, Direction.Out),
        team_in_centrality=centralization(g, Direction.In) if A > 0 else None,
        team_out_centrality=centralization(g, Direction.Out) if A > 0 else None,
        egr=_egr_from_spectrum(mu, zero_tol),
        laplacian_eigenvalues=mu,
        total=A,
    )


def match_graphs(
    match: MatchRecord,
    timeline: Timeline,
    pressure_radius: float | None = DEFAULT_PRESSURE_RADIUS,
) -> tuple[TeamGraph, TeamGraph]:
    """Graphs for team 0 (participants 1-5) and team 1 (participants 6-10)."""
    if timeline.match_id != match.match_id:
        raise ValueError(f"timeline {timeline.match_id} does not belong to match {match.match_id}")
    return tuple(build_graph(extract_assists(timeline, team_participants(t), pressure_radius)) for t in (0, 1))


def cap_disconnected(
    values: Sequence[float | _Disconnected], percentile: float = 99.0
) -> tuple[np.ndarray, np.ndarray]:
    """Replace disconnected EGR with the given percentile of the finite values.

    Finite values above the cap are winsorized to it as well. Returns the
    capped array and the boolean disconnect flags.
    """
    flags = np.array([v is DISCONNECTED for v in values], dtype=bool)
    finite = np.array([float(v) for v, f in zip(values, flags) if not f])
    if finite.size == 0:
        return np.zeros(len(values)), flags
    cap = float(np.percentile(finite, percentile))
    out = np.array([cap if f else min(float(v), cap) for v, f in zip(values, flags)])
    return out, flags
