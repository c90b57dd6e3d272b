"""End-to-end pipeline: corpus -> filter -> graphs -> features -> EFA -> train/cluster -> tables.

Every stage reads its inputs from, and writes its outputs to, flat CSV files
under the output directory, so any stage can be re-run on its own. The
corpus itself (JSON documents) is the one non-CSV artifact.

Layout of ``out_dir``::

    corpus/                  synthetic or fetched corpus (unless corpus_dir is given)
    intermediate/*.csv       stage hand-off tables
    intermediate/meta_*.json per-stage warnings and notes
    table1_loadings.csv ... fig7_rank_metrics.csv, kw_tests.csv
    run_manifest.json
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import os
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from . import svg
from .analytics import (
    AUTO,
    COLLECTIVE_COLUMNS,
    INDIVIDUAL_COLUMNS,
    FactorLabel,
    Level,
    assemble_features,
    crosstab,
    efa,
    kmo,
    kruskal_wallis,
    label_factors,
    team_tier,
    vif,
)
from .errors import ConfigError, StageError
from .ingest import (
    RANKED_QUEUES,
    Division,
    MatchRecord,
    PlayerRow,
    QueueKind,
    Rank,
    Role,
    TeamSide,
    Tier,
    filter_corpus,
    load_corpus,
    write_corpus,
)
from .ingest.corpus import load_timeline
from .learn import KINDS, Dataset, elbow, evaluate, kmeans, label_clusters, stratified_kfold, train
from .synth import SynthConfig, generate
from .ingest.model import Timeline, team_participants
from .teamgraph import (
    DEFAULT_PRESSURE_RADIUS,
    DISCONNECTED,
    GraphMetrics,
    build_graph,
    extract_assists,
    graph_metrics,
    match_graphs,
)

logger = logging.getLogger(__name__)

STAGES = ("ingest", "filter", "graphs", "features", "efa", "train", "cluster", "crosstab", "kwtest", "report")
DEPENDS = {
    "ingest": (),
    "filter": ("ingest",),
    "graphs": ("ingest", "filter"),
    "features": ("filter", "graphs"),
    "efa": ("features",),
    "train": ("efa",),
    "cluster": ("efa",),
    "crosstab": ("filter", "cluster"),
    "kwtest": ("filter", "features"),
    "report": (),
}
SOURCES = ("synth", "corpus", "fetch")
REPORT_TABLES = (
    "table1_loadings.csv",
    "table2_eval.csv",
    "table3_winrates.csv",
    "table4_crosstab.csv",
    "table5_consolidated.csv",
    "fig3_importances.csv",
    "fig6_h2h.csv",
    "fig7_rank_metrics.csv",
)
KW_METRICS = (("egr", "egr"), ("team_in_centrality", "c_in"), ("team_out_centrality", "c_out"))
LEVELS = (Level.Individual, Level.Collective)


# --- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: Path
    source: str = "synth"
    corpus_dir: Path | None = None
    seed: int | None = 0
    stages: tuple[str, ...] = STAGES
    report_svg: bool = False
    synth: Mapping[str, Any] = field(default_factory=dict)
    fetch: Mapping[str, Any] = field(default_factory=dict)
    ranked_queues: tuple[QueueKind, ...] = tuple(sorted(RANKED_QUEUES, key=lambda q: q.value))
    min_duration_s: int = 23 * 60
    pressure_radius: float | None = DEFAULT_PRESSURE_RADIUS
    egr_cap_percentile: float = 99.0
    n_factors: int | str = 2
    rotation: str | None = "varimax"
    efa_strict: bool = False
    efa_max_iter: int = 200
    efa_tol: float = 1e-6
    algorithms: tuple[str, ...] = KINDS
    test_fraction: float = 0.2
    cv_folds: int = 0
    classifier_params: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    train_seed: int | None = None
    k: int = 3
    n_init: int = 10
    run_elbow: bool = False
    k_max: int = 10
    cluster_seed: int | None = None
    tier_rule: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.corpus_dir is not None:
            object.__setattr__(self, "corpus_dir", Path(self.corpus_dir))
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ConfigError(f"unknown stage(s) {unknown}; expected names from {STAGES}")
        object.__setattr__(self, "stages", tuple(s for s in STAGES if s in self.stages))
        bad = [a for a in self.algorithms if a not in KINDS]
        if bad:
            raise ConfigError(f"unknown algorithm(s) {bad}; expected names from {KINDS}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.rotation not in (None, "varimax"):
            raise ConfigError(f"rotation must be 'none' or 'varimax', got {self.rotation!r}")
        if self.tier_rule not in ("mean", "mode"):
            raise ConfigError("tier_rule must be 'mean' or 'mode'")
        if self.k < 1 or self.n_init < 1:
            raise ConfigError("k and n_init must be positive")
        if self.source == "corpus" and self.corpus_dir is None:
            raise ConfigError("source = corpus needs corpus_dir")
        try:
            self.synth_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[synth]: {exc}") from exc

    # seeds: a stage-specific seed wins over the pipeline seed
    def stage_seed(self, stage: str) -> int:
        specific = {"train": self.train_seed, "cluster": self.cluster_seed}.get(stage)
        if specific is not None:
            return int(specific)
        if stage == "ingest" and "seed" in self.synth:
            return int(self.synth["seed"])
        if self.seed is None:
            raise ConfigError(f"stage {stage!r} is stochastic and no seed is configured")
        return int(self.seed)

    @property
    def corpus_root(self) -> Path:
        return self.corpus_dir if self.corpus_dir is not None else self.out_dir / "corpus"

    def synth_config(self) -> SynthConfig:
        kw = dict(self.synth)
        kw.setdefault("seed", self.seed if self.seed is not None else 0)
        return SynthConfig(**kw)

    def validate(self, stages: tuple[str, ...] | None = None) -> None:
        """Seeds present for stochastic stages; input paths exist."""
        stages = self.stages if stages is None else stages
        stochastic = {"train", "cluster"}
        if self.source in ("synth", "fetch"):
            stochastic.add("ingest")
        for s in stages:
            if s in stochastic:
                self.stage_seed(s)
        if self.source == "corpus" and "ingest" in stages and not (self.corpus_root / "matches").is_dir():
            raise ConfigError(f"corpus_dir {self.corpus_root} has no matches/ directory")
        if self.source == "fetch" and "ingest" in stages:
            for key in ("base_url", "seeds"):
                if not self.fetch.get(key):
                    raise ConfigError(f"[fetch] {key} is required when source = fetch")

    def to_dict(self) -> dict:
        """Everything that influences the outputs, as plain JSON values."""
        d = {}
        for f in dataclasses.fields(self):
            if f.name == "out_dir":
                continue
            v = getattr(self, f.name)
            if f.name == "corpus_dir":
                v = str(v) if (v is not None and self.source == "corpus") else None
            elif f.name == "ranked_queues":
                v = [q.value for q in v]
            elif f.name == "fetch":
                v = {k: x for k, x in dict(v).items() if k != "api_token"}
            elif f.name == "classifier_params":
                v = {k: dict(p) for k, p in sorted(dict(v).items())}
            elif isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, Mapping):
                v = dict(v)
            d[f.name] = v
        return json.loads(json.dumps(d, sort_keys=True, default=str))

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        sections = {s: dict(parser.items(s)) for s in parser.sections()}
        return cls.from_sections(sections, base_dir=path.parent)

    @classmethod
    def from_sections(cls, sections: Mapping[str, Mapping[str, str]], base_dir: str | Path = ".") -> "PipelineConfig":
        """Build from ``{section: {key: value}}``; values may be strings or already typed."""
        base = Path(base_dir)
        known = {"pipeline", "stages", "synth", "fetch", "ingest", "graphs", "efa", "train", "cluster", "kwtest"}
        extra = set(sections) - known
        if extra:
            raise ConfigError(f"unknown config section(s) {sorted(extra)}")
        for name, keys in _KNOWN_KEYS.items():
            unknown = sorted(k for k in sections.get(name, {}) if k not in keys and not (name == "train" and "." in k))
            if unknown:
                raise ConfigError(f"[{name}] unknown key(s) {unknown}")
        sec = {name: _Section(name, sections.get(name, {})) for name in known}
        try:
            p = sec["pipeline"]
            out_dir = p.path("out_dir", base, "report")
            corpus_dir = p.path("corpus_dir", base, None)
            stages = list(STAGES)
            if "stages" in p.values:
                listed = p.list("stages")
                stages = list(STAGES) if listed == ["all"] else listed
            for name in sec["stages"].values:
                if name not in STAGES:
                    raise ConfigError(f"[stages] unknown stage {name!r}")
                enabled = sec["stages"].bool(name)
                if enabled and name not in stages:
                    stages.append(name)
                if not enabled and name in stages:
                    stages.remove(name)
            synth = {k: _coerce_synth(k, v) for k, v in sec["synth"].values.items()}
            fetch = dict(sec["fetch"].values)
            params: dict[str, dict] = defaultdict(dict)
            t = sec["train"]
            for key, value in t.values.items():
                if "." in key:
                    kind, name = key.split(".", 1)
                    if kind not in KINDS:
                        raise ConfigError(f"[train] {key}: unknown algorithm {kind!r}")
                    params[kind][name] = _number(value, f"[train] {key}")
            g = sec["graphs"]
            radius = g.values.get("pressure_radius", DEFAULT_PRESSURE_RADIUS)
            if isinstance(radius, str) and radius.strip().lower() in ("none", "off", ""):
                radius = None
            e = sec["efa"]
            nf = e.values.get("n_factors", 2)
            nf = AUTO if str(nf).strip().lower() == AUTO else e.int("n_factors", 2)
            rotation = str(e.values.get("rotation", "varimax")).strip().lower()
            c = sec["cluster"]
            ing = sec["ingest"]
            queues = tuple(QueueKind(q) for q in ing.list("ranked_queues")) if "ranked_queues" in ing.values else None
            kw = dict(
                out_dir=out_dir,
                source=p.str("source", "synth"),
                corpus_dir=corpus_dir,
                seed=p.int("seed", None),
                stages=tuple(stages),
                report_svg=p.bool("report_svg", False),
                synth=synth,
                fetch=fetch,
                min_duration_s=ing.int("min_duration_s", 23 * 60),
                pressure_radius=None if radius is None else float(radius),
                egr_cap_percentile=g.float("egr_cap_percentile", 99.0),
                n_factors=nf,
                rotation=None if rotation in ("none", "") else rotation,
                efa_strict=e.bool("strict", False),
                efa_max_iter=e.int("max_iter", 200),
                efa_tol=e.float("tol", 1e-6),
                algorithms=tuple(t.list("algorithms")) if "algorithms" in t.values else KINDS,
                test_fraction=t.float("test_fraction", 0.2),
                cv_folds=t.int("cv_folds", 0),
                classifier_params={k: dict(v) for k, v in params.items()},
                train_seed=t.int("seed", None),
                k=c.int("k", 3),
                n_init=c.int("n_init", 10),
                run_elbow=c.bool("elbow", False),
                k_max=c.int("k_max", 10),
                cluster_seed=c.int("seed", None),
                tier_rule=sec["kwtest"].str("tier_rule", "mean"),
            )
            if queues is not None:
                kw["ranked_queues"] = queues
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        return cls(**kw)


# [stages] and [synth] are checked against the stage names and SynthConfig fields;
# [train] additionally accepts "<algorithm>.<param>" keys
_KNOWN_KEYS = {
    "pipeline": {"out_dir", "source", "corpus_dir", "seed", "stages", "report_svg"},
    "fetch": {
        "base_url",
        "seeds",
        "rate",
        "n_recent_seed",
        "n_recent_discovered",
        "max_retries",
        "backoff_base_s",
        "backoff_cap_s",
        "timeout_s",
        "fetch_ranks",
        "output_dir",
    },
    "ingest": {"ranked_queues", "min_duration_s"},
    "graphs": {"pressure_radius", "egr_cap_percentile"},
    "efa": {"n_factors", "rotation", "strict", "max_iter", "tol"},
    "train": {"algorithms", "test_fraction", "cv_folds", "seed"},
    "cluster": {"k", "n_init", "elbow", "k_max", "seed"},
    "kwtest": {"tier_rule"},
}


class _Section:
    def __init__(self, name: str, values: Mapping[str, Any]):
        self.name = name
        self.values = {k.strip(): v for k, v in dict(values).items()}

    def _raw(self, key, default):
        v = self.values.get(key, default)
        return default if (isinstance(v, str) and v.strip() == "") else v

    def str(self, key, default=None):
        v = self._raw(key, default)
        return None if v is None else str(v).strip()

    def int(self, key, default=None):
        v = self._raw(key, default)
        if v is None:
            return None
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be an integer, got {v!r}") from None

    def float(self, key, default=None):
        v = self._raw(key, default)
        if v is None:
            return None
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a number, got {v!r}") from None

    def bool(self, key, default=False):
        v = self._raw(key, default)
        if isinstance(v, bool):
            return v
        s = str(v).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{self.name}] {key} must be a boolean, got {v!r}")

    def list(self, key):
        v = self.values.get(key, "")
        if isinstance(v, (list, tuple)):
            return [str(x).strip() for x in v]
        return [x.strip() for x in str(v).split(",") if x.strip()]

    def path(self, key, base: Path, default):
        v = self._raw(key, default)
        if v is None:
            return None
        v = Path(os.path.expanduser(str(v).strip()))
        return v if v.is_absolute() else base / v


def _number(value, where: str):
    if isinstance(value, (int, float)):
        return value
    s = str(value).strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"{where} must be a number, got {value!r}") from None


_SYNTH_FIELDS = {f.name: f for f in dataclasses.fields(SynthConfig)}


def _coerce_synth(key: str, value):
    if key not in _SYNTH_FIELDS:
        raise ConfigError(f"[synth] unknown key {key!r}")
    if not isinstance(value, str):
        return value
    default = _SYNTH_FIELDS[key].default
    s = value.strip()
    if isinstance(default, QueueKind):
        return QueueKind(s)
    if isinstance(default, tuple):
        return tuple(float(x) for x in s.split(","))
    if isinstance(default, bool):
        return s.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(s)
    if isinstance(default, float):
        return float(s)
    return s


# --- flat CSV helpers ------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(getattr(v, "value", v))


def write_csv(path: Path, header, rows) -> int:
    """Write atomically; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            n += 1
    os.replace(tmp, path)
    return n


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _opt_float(s: str) -> float | None:
    return None if s == "" else float(s)


def _truthy(s: str) -> bool:
    return s == "true"


PLAYER_COLUMNS = (
    "match_id",
    "queue",
    "duration_s",
    "ended_early",
    "region",
    "team",
    "slot",
    "won",
    "player_id",
    "role",
    "gold",
    "experience",
    "vision_score",
    "kills",
    "deaths",
    "assists",
    "tower_kills",
    "elite_kills",
    "minion_kills",
    "tier",
    "division",
    "league_points",
)
_INT_FIELDS = (
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


def write_players(path: Path, matches) -> int:
    def rows():
        for m in matches:
            for t, team in enumerate(m.teams):
                for s, p in enumerate(team.players):
                    r = p.rank
                    yield (
                        m.match_id,
                        m.queue_kind,
                        m.duration_s,
                        m.ended_early,
                        m.region,
                        t,
                        s,
                        team.won,
                        p.player_id,
                        p.role,
                        *(getattr(p, f) for f in _INT_FIELDS),
                        None if r is None else r.tier.name.lower(),
                        None if r is None or r.division is None else r.division.value,
                        None if r is None else r.league_points,
                    )

    return write_csv(path, PLAYER_COLUMNS, rows())


def read_players(path: Path) -> list[MatchRecord]:
    """Rebuild match records from the flat one-row-per-player table."""
    by_match: dict[str, list[dict]] = {}
    for row in read_csv(path):
        by_match.setdefault(row["match_id"], []).append(row)
    matches = []
    for mid, rows in by_match.items():
        teams = []
        for t in (0, 1):
            members = sorted((r for r in rows if int(r["team"]) == t), key=lambda r: int(r["slot"]))
            players = []
            for r in members:
                rank = None
                if r["tier"]:
                    rank = Rank(
                        Tier[r["tier"].capitalize()],
                        Division(r["division"]) if r["division"] else None,
                        int(r["league_points"]),
                    )
                players.append(PlayerRow(r["player_id"], Role(r["role"]), *(int(r[f]) for f in _INT_FIELDS), rank=rank))
            teams.append(TeamSide(_truthy(members[0]["won"]) if members else False, tuple(players)))
        first = rows[0]
        matches.append(
            MatchRecord(
                mid,
                QueueKind(first["queue"]),
                int(first["duration_s"]),
                _truthy(first["ended_early"]),
                tuple(teams),
                first["region"],
            )
        )
    return matches


GRAPH_COLUMNS = (
    ("match_id", "team", "A")
    + tuple(f"in_deg_{i}" for i in range(5))
    + tuple(f"out_deg_{i}" for i in range(5))
    + ("c_in", "c_out", "egr", "disconnected")
    + tuple(f"mu_{i}" for i in range(5))
)


def write_graphs(path: Path, graphs: Mapping[tuple[str, int], GraphMetrics]) -> int:
    def rows():
        for (mid, t), g in graphs.items():
            yield (
                mid,
                t,
                g.total,
                *g.in_degree,
                *g.out_degree,
                g.team_in_centrality,
                g.team_out_centrality,
                None if g.disconnected else g.egr,
                g.disconnected,
                *g.laplacian_eigenvalues,
            )

    return write_csv(path, GRAPH_COLUMNS, rows())


def read_graphs(path: Path) -> dict[tuple[str, int], GraphMetrics]:
    out = {}
    for r in read_csv(path):
        out[(r["match_id"], int(r["team"]))] = GraphMetrics(
            in_degree=np.array([float(r[f"in_deg_{i}"]) for i in range(5)]),
            out_degree=np.array([float(r[f"out_deg_{i}"]) for i in range(5)]),
            team_in_centrality=_opt_float(r["c_in"]),
            team_out_centrality=_opt_float(r["c_out"]),
            egr=DISCONNECTED if _truthy(r["disconnected"]) else float(r["egr"]),
            laplacian_eigenvalues=np.array([float(r[f"mu_{i}"]) for i in range(5)]),
            total=float(r["A"]),
        )
    return out


def graphs_from_timelines(
    timelines: Iterable[Timeline], pressure_radius: float | None = DEFAULT_PRESSURE_RADIUS
) -> dict[tuple[str, int], GraphMetrics]:
    """Metrics for both teams of every timeline, ordered by match id.

    Team membership follows participant numbering (1-5 and 6-10), so no
    match document is needed.
    """
    out = {}
    for tl in sorted(timelines, key=lambda t: t.match_id):
        for t in (0, 1):
            edges = extract_assists(tl, team_participants(t), pressure_radius)
            out[(tl.match_id, t)] = graph_metrics(build_graph(edges))
    return out


def _key_columns(level: Level) -> tuple[str, ...]:
    return ("match_id", "team", "slot") if level is Level.Individual else ("match_id", "team")


def _parse_key(row: Mapping[str, str], level: Level) -> tuple:
    if level is Level.Individual:
        return (row["match_id"], int(row["team"]), int(row["slot"]))
    return (row["match_id"], int(row["team"]))


def _read_table(path: Path, level: Level, columns) -> tuple[list[tuple], np.ndarray, np.ndarray]:
    rows = read_csv(path)
    keys = [_parse_key(r, level) for r in rows]
    X = np.array([[float(r[c]) for c in columns] for r in rows], dtype=float).reshape(len(rows), len(columns))
    won = np.array([_truthy(r["won"]) for r in rows], dtype=bool)
    return keys, X, won


def _level_columns(level: Level) -> tuple[str, ...]:
    return INDIVIDUAL_COLUMNS if level is Level.Individual else COLLECTIVE_COLUMNS


def _factor_names(level: Level) -> tuple[str, str]:
    if level is Level.Individual:
        return (FactorLabel.Acquiring.value, FactorLabel.Sharing.value)
    return (FactorLabel.Cooperative.value, FactorLabel.NonCooperative.value)


# --- run -------------------------------------------------------------------


class _Run:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = cfg.out_dir
        self.mid = cfg.out_dir / "intermediate"
        self.cache: dict[str, Any] = {}

    def p(self, name: str) -> Path:
        return self.out / name

    def i(self, name: str) -> Path:
        return self.mid / name

    def save_meta(self, stage: str, meta: Mapping) -> None:
        self.mid.mkdir(parents=True, exist_ok=True)
        self.i(f"meta_{stage}.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n", encoding="utf-8")

    def corpus(self):
        if "corpus" not in self.cache:
            self.cache["corpus"] = load_corpus(self.cfg.corpus_root)
        return self.cache["corpus"]

    def matches(self) -> list[MatchRecord]:
        if "matches" not in self.cache:
            self.cache["matches"] = read_players(self.i("players.csv"))
        return self.cache["matches"]


def _stage_outputs(run: _Run) -> dict[str, tuple[Path, ...]]:
    i, p = run.i, run.p
    return {
        "ingest": (run.cfg.corpus_root / "matches",),
        "filter": (i("players.csv"),),
        "graphs": (i("graphs.csv"),),
        "features": (i("features_individual.csv"), i("features_collective.csv")),
        "efa": (i("scores_individual.csv"), i("scores_collective.csv"), p("table1_loadings.csv")),
        "train": (p("table2_eval.csv"), p("fig3_importances.csv")),
        "cluster": (i("clusters_individual.csv"), i("clusters_collective.csv")),
        "crosstab": tuple(
            p(n) for n in ("table3_winrates.csv", "table4_crosstab.csv", "table5_consolidated.csv", "fig6_h2h.csv")
        ),
        "kwtest": (p("fig7_rank_metrics.csv"), p("kw_tests.csv"), i("rank_metrics.csv")),
        "report": (p("run_manifest.json"),),
    }


def _check_dependencies(run: _Run, stages: tuple[str, ...]) -> None:
    outputs = _stage_outputs(run)
    for stage in stages:
        for dep in DEPENDS[stage]:
            if dep in stages:
                continue
            missing = [str(x) for x in outputs[dep] if not x.exists()]
            if missing:
                raise StageError(
                    stage,
                    f"missing dependency: stage {dep!r} is disabled and its outputs are absent ({missing[0]})",
                )


def _ingest(run: _Run) -> dict:
    cfg = run.cfg
    meta: dict[str, Any] = {"source": cfg.source}
    if cfg.source == "synth":
        sc = cfg.synth_config()
        matches, timelines, truth = generate(sc)
        if cfg.corpus_dir is None:
            # the default corpus location belongs to this pipeline; drop leftovers of earlier runs
            for sub in ("matches", "timelines"):
                for old in (cfg.corpus_root / sub).glob("*.json"):
                    old.unlink()
        write_corpus(cfg.corpus_root, matches, timelines)
        run.mid.mkdir(parents=True, exist_ok=True)
        truth.write_csv(run.i("ground_truth.csv"))
        run.cache["corpus"] = (matches, timelines)
        meta.update(n_matches=len(matches), synth_seed=sc.seed)
    elif cfg.source == "fetch":
        from .client import crawl

        ledger = crawl(crawl_config(cfg, cfg.corpus_root), resume=True)
        meta.update(n_matches=len(ledger.fetched_match_ids), missing_seeds=sorted(ledger.missing_seeds))
    else:
        meta["n_matches"] = len(run.corpus()[0])
    return meta


def crawl_config(cfg: PipelineConfig, output_dir: Path):
    """CrawlConfig from the [fetch] section; the token comes from the environment."""
    from .client import CrawlConfig

    f = dict(cfg.fetch)
    for key in ("base_url", "seeds"):
        if not f.get(key):
            raise ConfigError(f"[fetch] {key} is required")
    kw: dict[str, Any] = {
        "base_url": f["base_url"],
        "seeds": tuple(s.strip() for s in str(f["seeds"]).split(",") if s.strip()),
        "output_dir": output_dir,
        "jitter_seed": cfg.stage_seed("ingest"),
    }
    try:
        for name in ("n_recent_seed", "n_recent_discovered", "max_retries"):
            if name in f:
                kw[name] = int(f[name])
        for name in ("backoff_base_s", "backoff_cap_s", "timeout_s"):
            if name in f:
                kw[name] = float(f[name])
        if "fetch_ranks" in f:
            kw["fetch_ranks"] = _Section("fetch", f).bool("fetch_ranks")
        if "rate" in f:
            kw["rate"] = parse_rates(str(f["rate"]))
        return CrawlConfig(**kw).with_env_token()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[fetch]: {exc}") from exc


def parse_rates(text: str) -> tuple[tuple[int, float], ...]:
    """``"20/1, 100/120"`` -> ((20, 1.0), (100, 120.0))."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        count, _, window = part.partition("/")
        try:
            out.append((int(count), float(window)))
        except ValueError:
            raise ConfigError(f"rate entry {part!r} is not of the form count/seconds") from None
    if not out:
        raise ConfigError("rate needs at least one count/seconds pair")
    return tuple(out)


def _filter(run: _Run) -> dict:
    matches, timelines = run.corpus()
    kept = filter_corpus(matches, run.cfg.ranked_queues, run.cfg.min_duration_s)
    with_tl = [m for m in kept if m.match_id in timelines]
    write_players(run.i("players.csv"), with_tl)
    run.cache["matches"] = with_tl
    return {
        "loaded": len(matches),
        "passed_filters": len(kept),
        "dropped_without_timeline": len(kept) - len(with_tl),
        "kept": len(with_tl),
    }


def _graphs(run: _Run) -> dict:
    matches = run.matches()
    timelines = run.cache["corpus"][1] if "corpus" in run.cache else None
    graphs = {}
    for m in matches:
        tl = (
            timelines[m.match_id]
            if timelines is not None
            else load_timeline(run.cfg.corpus_root / "timelines" / f"{m.match_id}.json")
        )
        for t, g in enumerate(match_graphs(m, tl, run.cfg.pressure_radius)):
            graphs[(m.match_id, t)] = graph_metrics(g)
    write_graphs(run.i("graphs.csv"), graphs)
    return {"teams": len(graphs), "disconnected": sum(g.disconnected for g in graphs.values())}


def _features(run: _Run) -> dict:
    matches = run.matches()
    graphs = read_graphs(run.i("graphs.csv"))
    meta = {}
    for level in LEVELS:
        fm = assemble_features(matches, graphs, level, egr_cap_percentile=run.cfg.egr_cap_percentile)
        header = _key_columns(level) + ("won",) + tuple(f"raw_{c}" for c in fm.columns) + fm.columns
        rows = (tuple(k) + (w,) + tuple(r) + tuple(z) for k, w, r, z in zip(fm.keys, fm.label, fm.raw, fm.values))
        meta[level.value] = write_csv(run.i(f"features_{level.value}.csv"), header, rows)
    return meta


def _efa(run: _Run) -> dict:
    cfg = run.cfg
    loading_rows, scree_rows, diag_rows = [], [], []
    meta = {}
    for level in LEVELS:
        cols = _level_columns(level)
        keys, X, won = _read_table(run.i(f"features_{level.value}.csv"), level, cols)
        model = efa(
            X,
            cfg.n_factors,
            cols,
            rotation=cfg.rotation,
            tol=cfg.efa_tol,
            max_iter=cfg.efa_max_iter,
            strict=cfg.efa_strict,
        )
        model = label_factors(model, level)
        labels = [lab.value for lab in model.factor_labels]
        for j, lab in enumerate(labels):
            for f, name in enumerate(cols):
                loading_rows.append((level, j + 1, lab, name, model.loadings[f, j], model.communalities[f]))
        scree_rows += [(level, i + 1, ev) for i, ev in enumerate(model.eigenvalues)]
        k_val = kmo(X)
        diag_rows += [(level, name, v, k_val) for name, v in zip(cols, vif(X))]
        names = _factor_names(level)
        order = [labels.index(n) for n in names]
        write_csv(
            run.i(f"scores_{level.value}.csv"),
            _key_columns(level) + ("won",) + names,
            (tuple(k) + (w,) + tuple(s[order]) for k, w, s in zip(keys, won, model.scores)),
        )
        meta[level.value] = {
            "iterations": model.iterations,
            "converged": model.converged,
            "heywood": model.heywood,
            "kmo": k_val,
            "rotation": model.rotation,
        }
    write_csv(
        run.p("table1_loadings.csv"), ("level", "factor", "label", "feature", "loading", "communality"), loading_rows
    )
    write_csv(run.i("scree.csv"), ("level", "index", "eigenvalue"), scree_rows)
    write_csv(run.i("diagnostics.csv"), ("level", "feature", "vif", "kmo"), diag_rows)
    return meta


def _train(run: _Run) -> dict:
    cfg = run.cfg
    seed = cfg.stage_seed("train")
    eval_rows, imp_rows = [], []
    for level in LEVELS:
        names = _factor_names(level)
        _, X, won = _read_table(run.i(f"scores_{level.value}.csv"), level, names)
        data = Dataset.from_arrays(X, won, cfg.test_fraction, seed, names)
        for kind in cfg.algorithms:
            params = cfg.classifier_params.get(kind, {})
            model = train(kind, data, params, seed)
            rep = evaluate(model, data)
            cv_auc = None
            if cfg.cv_folds > 1:
                aucs = []
                for tr, te in stratified_kfold(data.y, cfg.cv_folds, seed):
                    fold = Dataset(data.X, data.y, tr, te, names)
                    aucs.append(evaluate(train(kind, fold, params, seed), fold).auc)
                cv_auc = float(np.mean(aucs))
            eval_rows.append(
                (
                    level,
                    kind,
                    rep.accuracy,
                    rep.f1,
                    rep.auc,
                    rep.tn,
                    rep.fp,
                    rep.fn,
                    rep.tp,
                    data.train.size,
                    data.test.size,
                    cv_auc,
                    ";".join(rep.flags),
                )
            )
            imp_rows += [(level, kind, n, v) for n, v in zip(names, rep.importances)]
    header = (
        "level",
        "algorithm",
        "accuracy",
        "f1",
        "auc",
        "tn",
        "fp",
        "fn",
        "tp",
        "n_train",
        "n_test",
        "cv_auc",
        "flags",
    )
    write_csv(run.p("table2_eval.csv"), header, eval_rows)
    write_csv(run.p("fig3_importances.csv"), ("level", "algorithm", "factor", "importance"), imp_rows)
    return {"seed": seed}


def _cluster(run: _Run) -> dict:
    cfg = run.cfg
    seed = cfg.stage_seed("cluster")
    summary, elbow_rows = [], []
    meta: dict[str, Any] = {"seed": seed}
    for level in LEVELS:
        names = _factor_names(level)
        keys, X, _ = _read_table(run.i(f"scores_{level.value}.csv"), level, names)
        if cfg.run_elbow:
            eb = elbow(X, cfg.k_max, seed, n_init=cfg.n_init)
            elbow_rows += [(level, k + 1, v, eb.k, eb.flat) for k, v in enumerate(eb.inertias)]
            meta[f"{level.value}_elbow_k"] = eb.k
        cl = kmeans(X, cfg.k, seed, n_init=cfg.n_init)
        semantics = {FactorLabel(n): j for j, n in enumerate(names)}
        labels = label_clusters(cl, semantics, level).labels if cfg.k == 3 else None
        write_csv(
            run.i(f"clusters_{level.value}.csv"),
            _key_columns(level) + ("cluster", "label"),
            (tuple(k) + (a, None if labels is None else labels[a]) for k, a in zip(keys, cl.assignments)),
        )
        for j in range(cl.k):
            for f, n in enumerate(names):
                summary.append(
                    (level, j, None if labels is None else labels[j], int(cl.sizes[j]), n, cl.centroids[j, f])
                )
        meta[f"{level.value}_inertia"] = cl.inertia
    write_csv(run.i("cluster_summary.csv"), ("level", "cluster", "label", "size", "factor", "centroid"), summary)
    if cfg.run_elbow:
        write_csv(run.i("elbow.csv"), ("level", "k", "inertia", "chosen_k", "flat"), elbow_rows)
    return meta


def _crosstab(run: _Run) -> dict:
    def labels(level):
        out = {}
        for r in read_csv(run.i(f"clusters_{level.value}.csv")):
            if not r["label"]:
                raise ValueError("cross tabulation needs labeled clusters (k = 3)")
            out[_parse_key(r, level)] = r["label"]
        return out

    team = labels(Level.Collective)
    player = labels(Level.Individual)
    outcomes = {(m.match_id, t): m.teams[t].won for m in run.matches() for t in (0, 1)}
    tab = crosstab(team, player, outcomes)
    write_csv(
        run.p("table3_winrates.csv"),
        ("level", "label", "games", "wins", "losses", "win_rate"),
        ((r.level, r.label, r.games, r.wins, r.losses, r.win_rate) for r in tab.marginals),
    )
    write_csv(
        run.p("table4_crosstab.csv"),
        ("team_label", "player_type", "matches", "wins", "win_rate"),
        ((c.team_label, c.player_type, c.matches, c.wins, c.win_rate) for c in tab.cells),
    )
    write_csv(
        run.p("table5_consolidated.csv"),
        ("group", "games", "wins", "losses", "win_rate"),
        ((r.label, r.games, r.wins, r.losses, r.win_rate) for r in tab.consolidated),
    )
    h = tab.head_to_head
    write_csv(
        run.p("fig6_h2h.csv"),
        ("games", "cooperative_wins", "non_cooperative_wins", "cooperative_share"),
        [(h.games, h.cooperative_wins, h.non_cooperative_wins, h.cooperative_share)],
    )
    return {"head_to_head_games": h.games}


def _kwtest(run: _Run) -> dict:
    matches = {m.match_id: m for m in run.matches()}
    cols = [c for c, _ in KW_METRICS]
    keys, X, _ = _read_table(run.i("features_collective.csv"), Level.Collective, [f"raw_{c}" for c in cols])
    tiers = [team_tier(matches[mid], t, run.cfg.tier_rule) for mid, t in keys]
    write_csv(
        run.i("rank_metrics.csv"),
        ("match_id", "team", "tier") + tuple(short for _, short in KW_METRICS),
        ((mid, t, None if tier is None else Tier(tier).name.lower(), *x) for (mid, t), tier, x in zip(keys, tiers, X)),
    )
    tier_arr = np.array([-1 if t is None else t for t in tiers])
    present = [int(v) for v in np.unique(tier_arr) if v >= 0]
    summary, tests = [], []
    for j, (_, short) in enumerate(KW_METRICS):
        groups = [X[tier_arr == v, j] for v in present]
        for v, g in zip(present, groups):
            q1, med, q3 = np.percentile(g, [25, 50, 75])
            summary.append((short, Tier(v).name.lower(), g.size, g.mean(), med, q1, q3))
        res = kruskal_wallis(groups)
        tests.append((short, len(groups), sum(res.group_sizes), res.H, res.df, res.p_value, res.log10_p, res.all_tied))
    write_csv(run.p("fig7_rank_metrics.csv"), ("metric", "tier", "n", "mean", "median", "q1", "q3"), summary)
    write_csv(run.p("kw_tests.csv"), ("metric", "groups", "n", "H", "df", "p_value", "log10_p", "all_tied"), tests)
    return {"teams_without_tier": int((tier_arr < 0).sum())}


def _count_rows(path: Path) -> int:
    with open(path, encoding="utf-8") as fh:
        return sum(1 for _ in fh) - 1


def _report(run: _Run) -> dict:
    cfg = run.cfg
    counts = {}
    for path in sorted(run.out.glob("*.csv")) + sorted(run.mid.glob("*.csv")):
        counts[str(path.relative_to(run.out))] = _count_rows(path)
    _reconcile(counts)
    metas = {}
    for stage in STAGES:
        path = run.i(f"meta_{stage}.json")
        if path.exists():
            metas[stage] = json.loads(path.read_text(encoding="utf-8"))
    seeds = {}
    for stage in ("ingest", "train", "cluster"):
        try:
            seeds[stage] = cfg.stage_seed(stage)
        except ConfigError:
            seeds[stage] = None
    manifest = {
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "seeds": seeds,
        "row_counts": counts,
        "stages": metas,
    }
    run.p("run_manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    if cfg.report_svg:
        write_svgs(run)
    return {}


def _reconcile(counts: Mapping[str, int]) -> None:
    """Row counts across stage tables must agree with the corpus size."""
    n_players = counts.get("intermediate/players.csv")
    if n_players is None:
        return
    if n_players % 10:
        raise ValueError(f"players table has {n_players} rows, not a multiple of 10")
    n_matches = n_players // 10
    expect = {
        "intermediate/graphs.csv": 2 * n_matches,
        "intermediate/features_collective.csv": 2 * n_matches,
        "intermediate/features_individual.csv": 10 * n_matches,
        "intermediate/scores_collective.csv": 2 * n_matches,
        "intermediate/scores_individual.csv": 10 * n_matches,
        "intermediate/clusters_collective.csv": 2 * n_matches,
        "intermediate/clusters_individual.csv": 10 * n_matches,
        "intermediate/rank_metrics.csv": 2 * n_matches,
    }
    for name, n in expect.items():
        if name in counts and counts[name] != n:
            raise ValueError(f"{name} has {counts[name]} rows; expected {n} for {n_matches} matches")


def write_svgs(run: _Run) -> list[Path]:
    """Bar chart of factor importances and violins of rank-tier metrics."""
    written = []
    imp = run.p("fig3_importances.csv")
    if imp.exists():
        rows = read_csv(imp)
        groups = sorted({(r["level"], r["factor"]) for r in rows}, key=lambda x: (x[0] != "individual", x[1]))
        algos = list(dict.fromkeys(r["algorithm"] for r in rows))
        lookup = {(r["level"], r["factor"], r["algorithm"]): float(r["importance"]) for r in rows}
        series = {a: [lookup.get((lv, f, a), float("nan")) for lv, f in groups] for a in algos}
        path = run.p("fig3_importances.svg")
        path.write_text(
            svg.bar_chart([f"{lv[:4]}:{f}" for lv, f in groups], series, "Factor importance", "importance"),
            encoding="utf-8",
        )
        written.append(path)
    rm = run.i("rank_metrics.csv")
    if rm.exists():
        rows = [r for r in read_csv(rm) if r["tier"]]
        order = [t.name.lower() for t in Tier]
        for _, short in KW_METRICS:
            groups: dict[str, list[float]] = {t: [] for t in order}
            for r in rows:
                groups[r["tier"]].append(float(r[short]))
            path = run.p(f"fig7_{short}.svg")
            path.write_text(svg.violin_plot(groups, f"{short} by rank tier", short), encoding="utf-8")
            written.append(path)
    return written


_STAGE_FUNCS: dict[str, Callable[[_Run], dict]] = {
    "ingest": _ingest,
    "filter": _filter,
    "graphs": _graphs,
    "features": _features,
    "efa": _efa,
    "train": _train,
    "cluster": _cluster,
    "crosstab": _crosstab,
    "kwtest": _kwtest,
    "report": _report,
}


def run_pipeline(config: PipelineConfig, stages: tuple[str, ...] | None = None) -> Path:
    """Run the enabled stages in order; returns the report directory.

    ``stages`` overrides the configured toggles (used by ``--stage``). A
    failing stage raises :class:`StageError`; outputs of stages that already
    finished stay on disk.
    """
    stages = config.stages if stages is None else tuple(s for s in STAGES if s in stages)
    config.validate(stages)
    run = _Run(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    _check_dependencies(run, stages)
    for stage in stages:
        logger.info("stage %s", stage)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                meta = _STAGE_FUNCS[stage](run)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(stage, exc) from exc
        seen = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
        for msg in seen:
            logger.warning("%s: %s", stage, msg)
        if stage != "report":
            run.save_meta(stage, {**meta, "warnings": seen})
    return config.out_dir
