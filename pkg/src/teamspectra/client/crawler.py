"""Resumable, rate-limited crawl of match, timeline and rank documents.

Protocol: resolve each seed summoner name to a player id, list its recent
match ids, download every match and its timeline, then do the same (with a
shorter history) for each player discovered in the seed matches. League
entries are fetched for every participant of every downloaded match.
Progress is appended to ``ledger.jsonl`` so an interrupted crawl resumes
without downloading any document twice.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence
from urllib.parse import quote

import requests

from ..errors import AuthError, NotFound, TransportError
from ..ingest.vendor import match_participants
from .ratelimit import DEFAULT_RATES, SlidingWindowLimiter

logger = logging.getLogger(__name__)

TOKEN_ENV = "API_TOKEN"
TOKEN_HEADER = "X-Riot-Token"
LEDGER_FILE = "ledger.jsonl"
RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})

SUMMONER_BY_NAME = "/lol/summoner/v4/summoners/by-name/{name}"
MATCH_IDS = "/lol/match/v5/matches/by-puuid/{puuid}/ids"
MATCH = "/lol/match/v5/matches/{match_id}"
TIMELINE = "/lol/match/v5/matches/{match_id}/timeline"
RANK_ENTRIES = "/lol/league/v4/entries/by-summoner/{summoner_id}"


@dataclass(frozen=True)
class CrawlConfig:
    base_url: str
    seeds: tuple[str, ...]
    output_dir: Path
    n_recent_seed: int = 100
    n_recent_discovered: int = 10
    rate: tuple[tuple[int, float], ...] = DEFAULT_RATES
    max_retries: int = 3
    backoff_base_s: float = 0.5
    backoff_cap_s: float = 30.0
    timeout_s: float = 10.0
    fetch_ranks: bool = True
    jitter_seed: int | None = 0
    api_token: str = field(default="", repr=False)

    def __post_init__(self):
        if not self.rate:
            raise ValueError("rate needs at least one (count, window) pair")
        if self.n_recent_seed < 1 or self.n_recent_discovered < 1:
            raise ValueError("n_recent_seed and n_recent_discovered must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "rate", tuple((int(c), float(w)) for c, w in self.rate))

    def with_env_token(self) -> "CrawlConfig":
        from dataclasses import replace

        return replace(self, api_token=os.environ.get(TOKEN_ENV, ""))


@dataclass(frozen=True)
class RequestRecord:
    endpoint: str
    status: int | None
    timestamp: float


class CrawlLedger:
    """Append-only progress record persisted as line-delimited JSON."""

    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path is not None else None
        self.fetched_match_ids: set[str] = set()
        self.fetched_timeline_ids: set[str] = set()
        self.fetched_player_ids: set[str] = set()
        self.ranked_player_ids: set[str] = set()
        self.seed_players: dict[str, dict] = {}
        self.missing_seeds: set[str] = set()
        self.player_matches: dict[str, list[str]] = {}
        self.request_log: list[RequestRecord] = []
        self._fh = None

    @classmethod
    def open(cls, output_dir: Path, resume: bool = True) -> "CrawlLedger":
        path = Path(output_dir) / LEDGER_FILE
        ledger = cls(path)
        if resume and path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        ledger._apply(json.loads(line))
        elif path.exists():
            path.unlink()
        return ledger

    def _apply(self, rec: dict) -> None:
        kind = rec["type"]
        if kind == "seed":
            self.seed_players[rec["name"]] = {"puuid": rec["puuid"], "summoner_id": rec.get("summoner_id")}
        elif kind == "seed_missing":
            self.missing_seeds.add(rec["name"])
        elif kind == "player":
            self.player_matches[rec["puuid"]] = list(rec["match_ids"])
        elif kind == "player_done":
            self.fetched_player_ids.add(rec["puuid"])
        elif kind == "match":
            self.fetched_match_ids.add(rec["match_id"])
        elif kind == "timeline":
            self.fetched_timeline_ids.add(rec["match_id"])
        elif kind == "rank":
            self.ranked_player_ids.add(rec["puuid"])
        elif kind == "request":
            self.request_log.append(RequestRecord(rec["endpoint"], rec["status"], rec["t"]))

    def record(self, **rec) -> None:
        self._apply(rec)
        if self.path is None:
            return
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @property
    def document_fetches(self) -> list[str]:
        """Endpoints of successful document downloads, in request order."""
        return [r.endpoint for r in self.request_log if r.status == 200 and is_document(r.endpoint)]


def is_document(endpoint: str) -> bool:
    """Match, timeline and league-entry endpoints return stored documents."""
    if endpoint.startswith("/lol/league/"):
        return True
    return endpoint.startswith("/lol/match/v5/matches/") and "/by-puuid/" not in endpoint


class Fetcher:
    """HTTP GET through the limiter with retries. Never logs the token."""

    def __init__(
        self,
        cfg: CrawlConfig,
        ledger: CrawlLedger,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        session: requests.Session | None = None,
    ):
        self.cfg = cfg
        self.ledger = ledger
        self.clock = clock
        self.sleep = sleep
        self.limiter = SlidingWindowLimiter(cfg.rate)
        self.session = session or requests.Session()
        self.rng = random.Random(cfg.jitter_seed)

    def _wait_for_permit(self) -> float:
        # sleep may return early, so re-check; the recorded time is the real send time
        while True:
            now = self.clock()
            delay = self.limiter.earliest(now) - now
            if delay <= 0:
                self.limiter.record(now)
                return now
            self.sleep(delay)

    def get(self, path: str, params: dict | None = None):
        url = self.cfg.base_url.rstrip("/") + path
        headers = {TOKEN_HEADER: self.cfg.api_token} if self.cfg.api_token else {}
        attempt = 0
        while True:
            sent = self._wait_for_permit()
            try:
                resp = self.session.get(url, params=params, headers=headers, timeout=self.cfg.timeout_s)
                status = resp.status_code
            except requests.RequestException as exc:
                resp, status = None, None
                logger.warning("GET %s failed: %s", path, type(exc).__name__)
            self.ledger.record(type="request", endpoint=path, status=status, t=sent)
            if status == 200:
                return resp.json()
            if status in (401, 403):
                raise AuthError(f"GET {path} rejected with status {status}")
            if status == 404:
                raise NotFound(f"GET {path} returned 404")
            if status is not None and status not in RETRY_STATUSES:
                raise TransportError(f"GET {path} returned unexpected status {status}")
            if attempt >= self.cfg.max_retries:
                raise TransportError(f"GET {path} failed after {attempt + 1} attempts (last status {status})")
            delay = min(self.cfg.backoff_cap_s, self.cfg.backoff_base_s * 2**attempt) * (0.5 + 0.5 * self.rng.random())
            retry_after = resp.headers.get("Retry-After") if resp is not None else None
            if retry_after is not None:
                try:
                    delay = max(delay, float(retry_after))
                except ValueError:
                    pass
            logger.info("retrying %s in %.2fs (status %s)", path, delay, status)
            self.sleep(delay)
            attempt += 1


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")), encoding="utf-8")
    tmp.replace(path)


class Crawler:
    def __init__(self, cfg: CrawlConfig, resume: bool = True, **fetcher_kw):
        self.cfg = cfg
        self.out = cfg.output_dir
        self.ledger = CrawlLedger.open(self.out, resume=resume)
        self.fetcher = Fetcher(cfg, self.ledger, **fetcher_kw)
        self.summoner_ids: dict[str, str] = {}

    def _resolve_seed(self, name: str) -> str | None:
        known = self.ledger.seed_players.get(name)
        if known is not None:
            return known["puuid"]
        if name in self.ledger.missing_seeds:
            return None
        try:
            doc = self.fetcher.get(SUMMONER_BY_NAME.format(name=quote(name, safe="")))
        except NotFound:
            logger.warning("unknown summoner %r skipped", name)
            self.ledger.record(type="seed_missing", name=name)
            return None
        self.ledger.record(type="seed", name=name, puuid=doc["puuid"], summoner_id=doc.get("id"))
        return doc["puuid"]

    def _match_ids(self, puuid: str, count: int) -> list[str]:
        known = self.ledger.player_matches.get(puuid)
        if known is not None:
            return known
        try:
            ids = self.fetcher.get(MATCH_IDS.format(puuid=quote(puuid, safe="")), params={"count": count})
        except NotFound:
            logger.warning("no match history for player %s", puuid)
            ids = []
        ids = [str(i) for i in ids][:count]
        self.ledger.record(type="player", puuid=puuid, match_ids=ids)
        return ids

    def _fetch_match(self, match_id: str) -> None:
        mid = quote(match_id, safe="")
        if match_id not in self.ledger.fetched_match_ids:
            try:
                doc = self.fetcher.get(MATCH.format(match_id=mid))
            except NotFound:
                logger.warning("match %s not found", match_id)
                return
            _write_json(self.out / "matches" / f"{match_id}.json", doc)
            self.ledger.record(type="match", match_id=match_id)
        if match_id not in self.ledger.fetched_timeline_ids:
            try:
                doc = self.fetcher.get(TIMELINE.format(match_id=mid))
            except NotFound:
                logger.warning("timeline %s not found", match_id)
                return
            _write_json(self.out / "timelines" / f"{match_id}.json", doc)
            self.ledger.record(type="timeline", match_id=match_id)

    def _participants(self, match_id: str) -> list[dict]:
        path = self.out / "matches" / f"{match_id}.json"
        if not path.exists():
            return []
        return match_participants(path.read_text(encoding="utf-8"))

    def _crawl_player(self, puuid: str, count: int) -> list[str]:
        ids = self._match_ids(puuid, count)
        if puuid not in self.ledger.fetched_player_ids:
            for match_id in ids:
                self._fetch_match(match_id)
            self.ledger.record(type="player_done", puuid=puuid)
        return ids

    def _fetch_rank(self, puuid: str, summoner_id: str) -> None:
        if puuid in self.ledger.ranked_player_ids:
            return
        try:
            entries = self.fetcher.get(RANK_ENTRIES.format(summoner_id=quote(summoner_id, safe="")))
        except NotFound:
            entries = []
        _write_json(self.out / "ranks" / f"{puuid}.json", entries)
        self.ledger.record(type="rank", puuid=puuid)

    def run(self) -> CrawlLedger:
        try:
            seeds = []
            for name in self.cfg.seeds:
                puuid = self._resolve_seed(name)
                if puuid is not None and puuid not in seeds:
                    seeds.append(puuid)
            seed_matches = []
            for puuid in seeds:
                seed_matches += self._crawl_player(puuid, self.cfg.n_recent_seed)
            discovered = []
            seen = set(seeds)
            for match_id in seed_matches:
                for p in self._participants(match_id):
                    if p["puuid"] and p["puuid"] not in seen:
                        seen.add(p["puuid"])
                        discovered.append(p["puuid"])
            for puuid in discovered:
                self._crawl_player(puuid, self.cfg.n_recent_discovered)
            if self.cfg.fetch_ranks:
                ranked = set()
                for match_id in sorted(self.ledger.fetched_match_ids):
                    for p in self._participants(match_id):
                        if p["puuid"] and p["puuid"] not in ranked:
                            ranked.add(p["puuid"])
                            self._fetch_rank(p["puuid"], p["summonerId"])
        finally:
            self.ledger.close()
        return self.ledger


def crawl(cfg: CrawlConfig, resume: bool = True, **fetcher_kw) -> CrawlLedger:
    """Run (or resume) a crawl; ``clock``/``sleep``/``session`` may be injected."""
    return Crawler(cfg, resume=resume, **fetcher_kw).run()


def check_rate_trace(times: Sequence[float], rates: Iterable[Sequence[float]]) -> list[tuple[int, float]]:
    """Windows violated by a trace of request times (empty list when compliant)."""
    ts = sorted(times)
    bad = []
    for c, w in rates:
        for i in range(len(ts) - c):
            # compare as the limiter does (t + w), so rounding cannot flag a grant at exactly t + w
            if ts[i + c] < ts[i] + w:
                bad.append((int(c), float(w)))
                break
    return bad
