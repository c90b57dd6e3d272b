"""Rate-limited crawler for the vendor REST API, plus a local stub server."""

from .crawler import CrawlConfig, CrawlLedger, RequestRecord, check_rate_trace, crawl
from .ratelimit import DEFAULT_RATES, SlidingWindowLimiter
from .stub import StubData, StubServer

__all__ = [
    "DEFAULT_RATES",
    "CrawlConfig",
    "CrawlLedger",
    "RequestRecord",
    "SlidingWindowLimiter",
    "StubData",
    "StubServer",
    "check_rate_trace",
    "crawl",
]
