"""In-process HTTP server speaking the vendor endpoints, for tests and demos.

Serves documents from a :class:`StubData` bundle. Requests without the
expected token get 401. ``failures`` lets a test script transient errors:
it maps a request path to a list of status codes returned (in order) before
the real document.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable
from urllib.parse import parse_qs, unquote, urlparse

from ..ingest.model import MatchRecord, Timeline
from ..ingest.vendor import to_vendor_match, to_vendor_rank_entries, to_vendor_timeline
from .crawler import TOKEN_HEADER


@dataclass
class StubData:
    summoners: dict[str, dict] = field(default_factory=dict)  # name -> {"puuid", "id", "name"}
    match_ids: dict[str, list[str]] = field(default_factory=dict)  # puuid -> most recent first
    matches: dict[str, dict] = field(default_factory=dict)
    timelines: dict[str, dict] = field(default_factory=dict)
    entries: dict[str, list] = field(default_factory=dict)  # summoner id -> league entries

    @classmethod
    def from_corpus(cls, matches: Iterable[MatchRecord], timelines: dict[str, Timeline]) -> "StubData":
        """Vendor-shaped fixtures; every player is a summoner named by its player id.

        A player's history lists their matches in reverse corpus order, so the
        last match in the corpus is the most recent.
        """
        data = cls()
        for rec in matches:
            doc = to_vendor_match(rec)
            data.matches[rec.match_id] = doc
            if rec.match_id in timelines:
                data.timelines[rec.match_id] = to_vendor_timeline(timelines[rec.match_id])
            for p, row in zip(doc["info"]["participants"], (r for t in rec.teams for r in t.players)):
                puuid, sid = p["puuid"], p["summonerId"]
                data.summoners.setdefault(puuid, {"puuid": puuid, "id": sid, "name": puuid})
                data.match_ids.setdefault(puuid, []).insert(0, rec.match_id)
                data.entries[sid] = to_vendor_rank_entries(row.rank, sid)
        return data

    def dump(self, root: str | Path) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        for name in ("summoners", "match_ids", "matches", "timelines", "entries"):
            (root / f"{name}.json").write_text(json.dumps(getattr(self, name), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, root: str | Path) -> "StubData":
        root = Path(root)
        parts = {}
        for name in ("summoners", "match_ids", "matches", "timelines", "entries"):
            path = root / f"{name}.json"
            parts[name] = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
        return cls(**parts)


class StubServer:
    """Threaded local server; use as a context manager or call start()/stop()."""

    def __init__(self, data: StubData, token: str | None = None, host: str = "127.0.0.1", port: int = 0):
        self.data = data
        self.token = token
        self.failures: dict[str, list[int]] = {}
        self.retry_after: str | None = None
        self.log: list[tuple[str, int, float]] = []
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), self._handler())
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def requests_for(self, prefix: str = "") -> list[str]:
        with self._lock:
            return [p for p, _, _ in self.log if p.startswith(prefix)]

    def _route(self, path: str, query: dict):
        d = self.data
        parts = [unquote(p) for p in path.strip("/").split("/")]
        if parts[:4] == ["lol", "summoner", "v4", "summoners"] and len(parts) == 6 and parts[4] == "by-name":
            return d.summoners.get(parts[5])
        if parts[:4] == ["lol", "match", "v5", "matches"]:
            rest = parts[4:]
            if len(rest) == 3 and rest[0] == "by-puuid" and rest[2] == "ids":
                ids = d.match_ids.get(rest[1])
                if ids is None:
                    return None
                count = int(query.get("count", ["20"])[0])
                return ids[:count]
            if len(rest) == 1:
                return d.matches.get(rest[0])
            if len(rest) == 2 and rest[1] == "timeline":
                return d.timelines.get(rest[0])
        if parts[:4] == ["lol", "league", "v4", "entries"] and len(parts) == 6 and parts[4] == "by-summoner":
            return d.entries.get(parts[5], [])
        return None

    def _handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def _send(self, status: int, body=None, headers=()):
                payload = json.dumps(body if body is not None else {"status": status}).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                for k, v in headers:
                    self.send_header(k, v)
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                url = urlparse(self.path)
                path = url.path
                with server._lock:
                    if server.token is not None and self.headers.get(TOKEN_HEADER) != server.token:
                        status = 401
                    else:
                        queue = server.failures.get(path)
                        status = queue.pop(0) if queue else 200
                    server.log.append((path, status, time.monotonic()))
                if status != 200:
                    extra = [("Retry-After", server.retry_after)] if status == 429 and server.retry_after else []
                    return self._send(status, headers=extra)
                body = server._route(path, parse_qs(url.query))
                if body is None:
                    with server._lock:
                        server.log[-1] = (path, 404, server.log[-1][2])
                    return self._send(404)
                self._send(200, body)

        return Handler
