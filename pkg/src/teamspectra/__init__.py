"""Individual vs collective performance analytics for 5v5 MOBA match data."""

__version__ = "0.1.0"
