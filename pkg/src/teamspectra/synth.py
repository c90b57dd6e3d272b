"""Seeded generator of synthetic ranked matches with planted cooperation and skill.

Each team gets a cooperation level c in [0, 1] and each player a skill s.
Team A wins with probability

    p_A = logistic(beta_coop * (c_A - c_B) + beta_skill * (mean(s_A) - mean(s_B)))

Assist edges are drawn from a categorical over the 20 ordered teammate
pairs that mixes a uniform component (weight c) with a single-receiver
component (weight 1 - c), so centralization falls and the assist graph
densifies as c grows. Rank tiers follow c through a Gaussian copula.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .ingest.model import (
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

ROLES = (Role.Top, Role.Jungle, Role.Mid, Role.Bottom, Role.Support)
STYLES = ("cooperative", "non_cooperative", "average")
STYLE_RANGES = {"cooperative": (0.75, 1.0), "non_cooperative": (0.0, 0.25), "average": (0.35, 0.65)}
PLAYER_TYPES = ("acquiring", "sharing", "average")
# P(type | role) for top, jungle, mid, bottom, support
_TYPE_BY_ROLE = np.array(
    [
        [0.45, 0.15, 0.40],
        [0.35, 0.35, 0.30],
        [0.55, 0.10, 0.35],
        [0.60, 0.05, 0.35],
        [0.05, 0.75, 0.20],
    ]
)
# share of ranked players per tier, Iron..Challenger
TIER_SHARES = (0.05, 0.15, 0.20, 0.20, 0.15, 0.12, 0.08, 0.03, 0.015, 0.005)
_PAIRS = [(g, r) for g in range(5) for r in range(5) if g != r]
_DIVISIONS = (Division.IV, Division.III, Division.II, Division.I)
_MAP = 15000


@dataclass(frozen=True)
class SynthConfig:
    n_matches: int = 1000
    seed: int = 0
    beta_coop: float = 8.0
    beta_skill: float = 1.0
    rank_coop_correlation: float = 0.5
    # cooperation sampling: "styles" draws cooperative / non-cooperative /
    # average teams, "uniform" draws c ~ U(0, 1) independently per team
    coop_distribution: str = "styles"
    style_weights: tuple[float, float, float] = (0.45, 0.43, 0.12)
    pairing_contrast: float = 0.8
    # concentration weight on the single-receiver component is (1 - c) ** coop_concentration
    coop_concentration: float = 1.0
    # share of the hub's incoming assists that come from its main feeder when c = 0
    feeder_share: float = 0.95
    assists_per_30min: float = 25.0
    # relative change in assist volume per unit of c, centred on c = 0.5
    assist_coop_boost: float = 1.0
    champion_kill_share: float = 0.7
    building_kill_share: float = 0.15
    map_pressure_share: float = 0.2
    pressure_radius: float = 2000.0
    min_duration_s: int = 1380
    max_duration_s: int = 2700
    skill_sd: float = 1.0
    gold_noise: float = 30.0
    xp_noise: float = 30.0
    vision_noise: float = 0.15
    # per-minute gain of a fully cooperative team over c = 0, applied to every player
    coop_gold: float = 60.0
    coop_xp: float = 60.0
    coop_vision: float = 0.4
    # sd of the shared per-team economy shock, in per-minute units
    econ_gold: float = 40.0
    econ_xp: float = 35.0
    econ_vision: float = 0.2
    region: str = "EUW1"
    # > 0: player ids are drawn from a shared pool of this size, so players recur across matches
    player_pool: int = 0
    queue: QueueKind = QueueKind.RankedSolo

    def __post_init__(self):
        if self.n_matches < 1:
            raise ValueError("n_matches must be at least 1")
        if not -1.0 <= self.rank_coop_correlation <= 1.0:
            raise ValueError("rank_coop_correlation must lie in [-1, 1]")
        if self.coop_distribution not in ("styles", "uniform"):
            raise ValueError(f"unknown coop_distribution {self.coop_distribution!r}")
        for name in ("pairing_contrast", "champion_kill_share", "building_kill_share", "map_pressure_share"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.champion_kill_share + self.building_kill_share > 1.0:
            raise ValueError("event-kind shares exceed 1")
        if any(w < 0 for w in self.style_weights) or sum(self.style_weights) <= 0:
            raise ValueError("style_weights must be non-negative with positive sum")
        if self.player_pool and self.player_pool < 10:
            raise ValueError("player_pool must be 0 or at least 10")
        if not 0 < self.min_duration_s <= self.max_duration_s:
            raise ValueError("need 0 < min_duration_s <= max_duration_s")


@dataclass(frozen=True, eq=False)
class SynthGroundTruth:
    match_ids: tuple[str, ...]
    coop: np.ndarray  # (n, 2)
    skill: np.ndarray  # (n, 10), participant order
    p_a: np.ndarray  # (n,)
    styles: tuple[tuple[str, str], ...] = field(default=(), repr=False)
    player_types: tuple[tuple[str, ...], ...] = field(default=(), repr=False)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["match_id", "c_a", "c_b", "style_a", "style_b", "p_a"] + [f"skill_{i}" for i in range(1, 11)])
            for i, mid in enumerate(self.match_ids):
                style = self.styles[i] if self.styles else ("", "")
                w.writerow(
                    [mid, repr(float(self.coop[i, 0])), repr(float(self.coop[i, 1])), *style, repr(float(self.p_a[i]))]
                    + [repr(float(s)) for s in self.skill[i]]
                )


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _tier_cutpoints() -> list[float]:
    nd = NormalDist()
    cum = np.cumsum(TIER_SHARES)[:-1]
    return [nd.inv_cdf(float(q)) for q in cum]


_CUTS = _tier_cutpoints()
_ND = NormalDist()


def _coop_levels(cfg: SynthConfig, rng: np.random.Generator) -> tuple[list[float], list[str]]:
    if cfg.coop_distribution == "uniform":
        return [float(rng.random()), float(rng.random())], ["", ""]
    if rng.random() < cfg.pairing_contrast:
        styles = ["cooperative", "non_cooperative"]
        if rng.random() < 0.5:
            styles.reverse()
    else:
        w = np.asarray(cfg.style_weights, dtype=float)
        styles = [STYLES[i] for i in rng.choice(3, size=2, p=w / w.sum())]
    levels = [float(rng.uniform(*STYLE_RANGES[s])) for s in styles]
    return levels, styles


def _edge_probs(c: float, hub: int, feeder: int, cfg: SynthConfig) -> np.ndarray:
    """Categorical over the 20 ordered (giver, receiver) pairs."""
    conc = np.zeros(len(_PAIRS))
    for j, (g, r) in enumerate(_PAIRS):
        if r == hub:
            conc[j] = cfg.feeder_share if g == feeder else (1.0 - cfg.feeder_share) / 3.0
    w = (1.0 - c) ** cfg.coop_concentration
    return w * conc / conc.sum() + (1.0 - w) / len(_PAIRS)


def _rank(z: float, rng: np.random.Generator) -> Rank:
    tier = Tier(int(np.searchsorted(_CUTS, z)))
    if tier.has_divisions:
        return Rank(tier, _DIVISIONS[int(rng.integers(4))], int(rng.integers(0, 101)))
    return Rank(tier, None, int(rng.integers(0, 1000)))


def _match(cfg: SynthConfig, index: int):
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    match_id = f"SYN_{cfg.seed}_{index:07d}"
    duration = int(rng.integers(cfg.min_duration_s, cfg.max_duration_s + 1))
    minutes = duration / 60.0
    coop, styles = _coop_levels(cfg, rng)
    skill = rng.normal(0.0, cfg.skill_sd, size=10)
    types = [int(rng.choice(3, p=_TYPE_BY_ROLE[slot])) for _ in range(2) for slot in range(5)]
    z = cfg.beta_coop * (coop[0] - coop[1]) + cfg.beta_skill * (skill[:5].mean() - skill[5:].mean())
    p_a = _logistic(z)
    a_wins = bool(rng.random() < p_a)

    # assist edges per team, each realized as one event
    R = cfg.pressure_radius
    raw_events = []  # (kind, killer, giver, pressure)
    for t in range(2):
        s = skill[5 * t : 5 * t + 5]
        ty = types[5 * t : 5 * t + 5]
        hub = int(np.argmax(s + 1.0 * np.array([x == 0 for x in ty])))
        feed_score = np.array([x == 1 for x in ty], dtype=float) + 0.01 * s
        feed_score[hub] = -np.inf
        feeder = int(np.argmax(feed_score))
        probs = _edge_probs(coop[t], hub, feeder, cfg)
        n_edges = int(
            rng.poisson(cfg.assists_per_30min * minutes / 30.0 * (1.0 + cfg.assist_coop_boost * (coop[t] - 0.5)))
        )
        picks = rng.choice(len(_PAIRS), size=n_edges, p=probs)
        kinds = rng.random(n_edges)
        pressure = rng.random(n_edges)
        for j, u, v in zip(picks, kinds, pressure):
            g, r = _PAIRS[j]
            if u < cfg.champion_kill_share:
                kind = EventKind.ChampionKill
            elif u < cfg.champion_kill_share + cfg.building_kill_share:
                kind = EventKind.BuildingKill
            else:
                kind = EventKind.EliteMonsterKill
            is_pressure = kind is EventKind.ChampionKill and v < cfg.map_pressure_share
            raw_events.append((kind, 5 * t + r + 1, 5 * t + g + 1, is_pressure))

    n_ev = len(raw_events)
    stamps = np.sort(rng.choice(duration * 1000 - 60_000, size=n_ev, replace=False) + 60_000)
    order = rng.permutation(n_ev)
    raw_events = [raw_events[k] for k in order.tolist()]
    # geometry for every event in one batch; columns 0-4 are the killing team, 5-9 its opponents
    rows = np.arange(n_ev)
    killer_col = np.array([(ev[1] - 1) % 5 for ev in raw_events], dtype=int)
    giver_col = np.array([(ev[2] - 1) % 5 for ev in raw_events], dtype=int)
    victim_col = 5 + rng.integers(5, size=n_ev)
    spots = rng.uniform(4000, 11000, size=(n_ev, 2))
    lo = np.tile(np.array([1.5 * R] * 5 + [0.0] * 5), (n_ev, 1))
    hi = np.tile(np.array([2.0 * R] * 5 + [0.0] * 5), (n_ev, 1))
    lo[rows, killer_col], hi[rows, killer_col] = 0.0, 400.0
    lo[rows, giver_col], hi[rows, giver_col] = 100.0, 0.8 * R
    hi[rows, victim_col] = 200.0
    dist = lo + rng.random((n_ev, 10)) * (hi - lo)
    angle = rng.uniform(0.0, 2.0 * math.pi, size=(n_ev, 10))
    xy = spots[:, None, :] + dist[..., None] * np.stack([np.cos(angle), np.sin(angle)], axis=-1)
    xy = np.rint(np.clip(xy, 0, _MAP)).astype(int)
    scatter = rng.integers(0, _MAP + 1, size=(n_ev, 10, 2))
    free = np.zeros((n_ev, 10), dtype=bool)
    free[:, 5:] = True
    free[rows, victim_col] = False
    xy[free] = scatter[free]
    spot_int = np.rint(spots).astype(int).tolist()
    xy = xy.tolist()

    events, frames = [], []
    kills = np.zeros(10, dtype=int)
    deaths = np.zeros(10, dtype=int)
    assists = np.zeros(10, dtype=int)
    towers = np.zeros(10, dtype=int)
    elites = np.zeros(10, dtype=int)
    for e, ts in enumerate(stamps.tolist()):
        kind, killer, giver, is_pressure = raw_events[e]
        if kind is not EventKind.ChampionKill:
            (towers if kind is EventKind.BuildingKill else elites)[killer - 1] += 1
            events.append(TimelineEvent(ts, kind, killer, None, (giver,)))
            continue
        team = (killer - 1) // 5
        victim = 5 * (1 - team) + int(victim_col[e]) - 4
        pts = [tuple(v) for v in xy[e]]
        positions = pts if team == 0 else pts[5:] + pts[:5]
        kills[killer - 1] += 1
        deaths[victim - 1] += 1
        if not is_pressure:
            assists[giver - 1] += 1
        listed = () if is_pressure else (giver,)
        events.append(TimelineEvent(ts, kind, killer, victim, listed, tuple(spot_int[e])))
        frames.append(Frame(ts, tuple(positions)))

    # end-of-game aggregates; a team-wide economy shock moves all resource stats together
    econ = rng.normal(0.0, 1.0, size=2)
    team_ranks_z = []
    for t in range(2):
        q = min(max(coop[t] if cfg.coop_distribution == "uniform" else _coop_quantile(coop[t], cfg), 1e-6), 1 - 1e-6)
        rho = cfg.rank_coop_correlation
        team_ranks_z.append(rho * _ND.inv_cdf(q) + math.sqrt(1.0 - rho * rho) * float(rng.normal()))
    teams = []
    for t in range(2):
        players = []
        for slot in range(5):
            i = 5 * t + slot
            ty = types[i]
            s = skill[i]
            c = coop[t]
            kpm = kills[i] / minutes
            gold_pm = (
                330
                + 35 * s
                + 60 * (ty == 0)
                - 20 * (ty == 1)
                + cfg.coop_gold * c
                + 100 * kpm
                + cfg.econ_gold * econ[t]
                + rng.normal(0, cfg.gold_noise)
            )
            xp_pm = (
                400 + 30 * s + 30 * (ty == 0) + cfg.coop_xp * c + cfg.econ_xp * econ[t] + rng.normal(0, cfg.xp_noise)
            )
            vision_pm = (
                0.9
                + 0.1 * s
                + 0.6 * (ty == 1)
                + cfg.coop_vision * c
                + cfg.econ_vision * econ[t]
                + rng.normal(0, cfg.vision_noise)
            )
            cs_pm = 6.5 if ROLES[slot] in (Role.Bottom, Role.Mid, Role.Top) else (4.5 if slot == 1 else 1.2)
            zp = 0.9 * team_ranks_z[t] + 0.25 * s / cfg.skill_sd + 0.357 * float(rng.normal())
            players.append(
                PlayerRow(
                    player_id=f"{match_id}-p{i + 1}",
                    role=ROLES[slot],
                    gold=int(round(max(gold_pm, 50.0) * minutes)),
                    experience=int(round(max(xp_pm, 50.0) * minutes)),
                    vision_score=int(round(max(vision_pm, 0.05) * minutes)),
                    kills=int(kills[i]),
                    deaths=int(deaths[i]),
                    assists=int(assists[i]),
                    tower_kills=int(towers[i]),
                    elite_kills=int(elites[i]),
                    minion_kills=int(rng.poisson(cs_pm * minutes)),
                    rank=_rank(zp, rng),
                )
            )
        won = a_wins if t == 0 else not a_wins
        teams.append(TeamSide(won, tuple(players)))
    if cfg.player_pool:
        pool_ids = rng.choice(cfg.player_pool, size=10, replace=False)
        teams = [
            TeamSide(
                team.won,
                tuple(replace(p, player_id=f"P{int(pool_ids[5 * t + s]):06d}") for s, p in enumerate(team.players)),
            )
            for t, team in enumerate(teams)
        ]
    record = MatchRecord(match_id, cfg.queue, duration, False, (teams[0], teams[1]), cfg.region)
    timeline = Timeline(match_id, tuple(events), tuple(frames))
    return record, timeline, coop, skill, p_a, styles, [PLAYER_TYPES[x] for x in types]


def _coop_quantile(c: float, cfg: SynthConfig) -> float:
    """CDF of the marginal cooperation distribution at c (style mixture)."""
    w = np.asarray(cfg.style_weights, dtype=float)
    w = w / w.sum()
    pc = cfg.pairing_contrast
    mix = {
        "cooperative": 0.5 * pc + (1 - pc) * w[0],
        "non_cooperative": 0.5 * pc + (1 - pc) * w[1],
        "average": (1 - pc) * w[2],
    }
    total = 0.0
    for style, (lo, hi) in STYLE_RANGES.items():
        total += mix[style] * min(max((c - lo) / (hi - lo), 0.0), 1.0)
    return total


def generate(config: SynthConfig | None = None):
    """Returns ``(matches, timelines, ground_truth)``; timelines keyed by match id."""
    cfg = config or SynthConfig()
    matches, timelines = [], {}
    ids, coops, skills, pas, styles, ptypes = [], [], [], [], [], []
    for m in range(cfg.n_matches):
        rec, tl, coop, skill, p_a, st, pt = _match(cfg, m)
        matches.append(rec)
        timelines[rec.match_id] = tl
        ids.append(rec.match_id)
        coops.append(coop)
        skills.append(skill)
        pas.append(p_a)
        styles.append(tuple(st))
        ptypes.append(tuple(pt))
    truth = SynthGroundTruth(tuple(ids), np.array(coops), np.array(skills), np.array(pas), tuple(styles), tuple(ptypes))
    return matches, timelines, truth
