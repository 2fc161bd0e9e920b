"""The 99 time-based features: weekday/hour activity shares per stream (and
combined), daily posting averages, and retweet-delay statistics. All clock
arithmetic is UTC; weekday 0 is Monday."""

from __future__ import annotations

import math
from datetime import datetime
from typing import Sequence

import numpy as np

from ..corpus import TweetRecord

WEEKDAYS = 7
HOURS = 24


def _build_names() -> tuple[str, ...]:
    names: list[str] = []
    for prefix in ("daily_rt", "daily_tw", "daily_rt_tw"):
        names.extend(f"{prefix}_{d}" for d in range(WEEKDAYS))
    for prefix in ("hourly_rt", "hourly_tw", "hourly_rt_tw"):
        names.extend(f"{prefix}_{h}" for h in range(HOURS))
    names.extend(["daily_retweet_avg", "daily_tweet_avg"])
    names.extend(f"retweet_time_{s}" for s in ("min", "max", "avg", "std"))
    return tuple(names)


TEMPORAL_FEATURE_NAMES: tuple[str, ...] = _build_names()
assert len(TEMPORAL_FEATURE_NAMES) == 99


def activity_shares(timestamps: Sequence[datetime], buckets: int) -> np.ndarray:
    """Histogram share per weekday (7) or hour of day (24); empty -> NaNs."""
    if buckets not in (WEEKDAYS, HOURS):
        raise ValueError("buckets must be 7 (weekday) or 24 (hour)")
    if not timestamps:
        return np.full(buckets, np.nan)
    counts = np.zeros(buckets)
    for ts in timestamps:
        key = ts.weekday() if buckets == WEEKDAYS else ts.hour
        counts[key] += 1.0
    return counts / counts.sum()


def retweet_delays(retweets: Sequence[TweetRecord]) -> tuple[float, float, float, float]:
    """(min, max, avg, population std) of retweet latencies in seconds."""
    delays = []
    for t in retweets:
        if t.retweeted_created_at is None:
            continue
        delta = (t.created_at - t.retweeted_created_at).total_seconds()
        if delta < 0:
            raise ValueError(f"negative retweet delay on tweet {t.tweet_id!r}")
        delays.append(delta)
    if not delays:
        return (math.nan, math.nan, math.nan, math.nan)
    arr = np.asarray(delays, dtype=float)
    return (float(arr.min()), float(arr.max()), float(arr.mean()), float(arr.std()))


def daily_average(n_posts: int, window: tuple[datetime, datetime]) -> float:
    """Posts per day over the full corpus window (not the user's active days)."""
    days = (window[1] - window[0]).total_seconds() / 86400.0
    if days < 1.0:
        raise ValueError("corpus window must span at least one day")
    return n_posts / days


def extract_temporal(tweets: Sequence[TweetRecord],
                     window: tuple[datetime, datetime]) -> dict[str, float]:
    """All 99 temporal slots for one user."""
    originals = [t for t in tweets if not t.is_retweet]
    retweets = [t for t in tweets if t.is_retweet]
    times = {
        "tw": [t.created_at for t in originals],
        "rt": [t.created_at for t in retweets],
    }
    times["rt_tw"] = times["rt"] + times["tw"]

    values: dict[str, float] = {}
    for key, stamps in times.items():
        daily = activity_shares(stamps, WEEKDAYS)
        hourly = activity_shares(stamps, HOURS)
        for d in range(WEEKDAYS):
            values[f"daily_{key}_{d}"] = float(daily[d])
        for h in range(HOURS):
            values[f"hourly_{key}_{h}"] = float(hourly[h])
    values["daily_retweet_avg"] = daily_average(len(retweets), window)
    values["daily_tweet_avg"] = daily_average(len(originals), window)
    d_min, d_max, d_avg, d_std = retweet_delays(retweets)
    values["retweet_time_min"] = d_min
    values["retweet_time_max"] = d_max
    values["retweet_time_avg"] = d_avg
    values["retweet_time_std"] = d_std
    assert set(values) == set(TEMPORAL_FEATURE_NAMES)
    return values
