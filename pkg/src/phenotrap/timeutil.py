"""UTC timestamp parsing and formatting shared across modules."""

from __future__ import annotations

from datetime import datetime, timezone

__all__ = ["parse_utc", "format_utc"]


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime.

    Accepts a trailing ``Z``, an explicit offset, or a naive timestamp
    (assumed UTC; the low-cost cameras have no timezone notion).
    """
    s = text.strip()
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_utc(dt: datetime) -> str:
    """Render as ``YYYY-MM-DDTHH:MM:SSZ`` (second resolution)."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
