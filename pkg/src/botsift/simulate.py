"""Synthetic bot/human corpus generator for fixtures and sanity checks.

Bots post on a near-uniform clock with machine-fast retweet latencies, grow
friend counts far faster than their account age, and recycle a small pool of
hashtags. Humans post diurnally, retweet slowly and diversely, and accumulate
favourites over years. The two behaviors are linearly separable on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import AccountRecord, CorpusView, TweetRecord, build_view, export_corpus
from .labeling import SCORER_A, SCORER_B, ScorerOutput, write_score_file

_WORDS = (
    "election vote ballot count debate policy economy jobs taxes healthcare "
    "climate energy school roads senate house governor mayor county city "
    "coffee weekend family dinner music movie game team score win loss "
    "book garden travel photo morning evening news story update thread"
).split()

_BOT_PHRASES = (
    "breaking huge news must share now",
    "wake up people spread this everywhere",
    "they dont want you know truth",
    "share before deleted very important",
    "massive fraud exposed read this",
)

_BOT_HASHTAGS = ("MAGA2020x", "StopTheCount", "BallotWatch", "WakeUpUSA",
                 "TruthBomb", "ShareThis")
_HUMAN_HASHTAGS = tuple(f"topic{i}" for i in range(30)) + ("Vote", "Election2020")
_BOT_TARGETS = ("amplify_one", "amplify_two", "amplify_three")
_HUMAN_TARGETS = tuple(f"friendly{i}" for i in range(40))

UTC = timezone.utc


@dataclass
class SimulatedCorpus:
    view: CorpusView
    bot_ids: set[str]
    scores: list[ScorerOutput]
    suspended: set[str]

    @property
    def truth(self) -> dict[str, int]:
        return {uid: int(uid in self.bot_ids) for uid in self.view.accounts}


def _fmt(ts: datetime) -> datetime:
    return ts.replace(microsecond=0)


def _make_account(rng: np.random.Generator, uid: str, is_bot: bool,
                  window_start: datetime) -> AccountRecord:
    if is_bot:
        age_days = float(rng.uniform(20, 90))
        word = _WORDS[int(rng.integers(len(_WORDS)))]
        screen_name = f"{word}{int(rng.integers(1000, 999999))}"
        name = " ".join(rng.choice(_WORDS, size=2))
        return AccountRecord(
            user_id=uid, name=name, screen_name=screen_name,
            description="patriot news aggregator",
            created_at=_fmt(window_start - timedelta(days=age_days)),
            statuses_count=int(rng.integers(5000, 20000)),
            followers_count=int(rng.integers(0, 60)),
            friends_count=int(rng.integers(700, 2500)),
            favourites_count=int(rng.integers(0, 10)),
            listed_count=0,
            verified=False, protected=False, default_profile=True,
            has_background_image=False, has_location=False, has_geolocation=False,
        )
    age_days = float(rng.uniform(400, 3000))
    word = _WORDS[int(rng.integers(len(_WORDS)))]
    digits = "" if rng.random() < 0.7 else str(int(rng.integers(10, 99)))
    screen_name = f"{word}{digits}"
    name = word.capitalize()
    return AccountRecord(
        user_id=uid, name=name, screen_name=screen_name,
        description=f"enjoys {word} and long walks",
        created_at=_fmt(window_start - timedelta(days=age_days)),
        statuses_count=int(rng.integers(200, 8000)),
        followers_count=int(rng.integers(30, 800)),
        friends_count=int(rng.integers(50, 600)),
        favourites_count=int(rng.integers(500, 20000)),
        listed_count=int(rng.integers(0, 8)),
        verified=bool(rng.random() < 0.05), protected=False,
        default_profile=bool(rng.random() < 0.3),
        has_background_image=True, has_location=bool(rng.random() < 0.6),
        has_geolocation=bool(rng.random() < 0.3),
    )


def _bot_times(rng: np.random.Generator, start: datetime, days: int,
               n_posts: int) -> list[datetime]:
    period = days * 86400.0 / n_posts
    times = []
    for i in range(n_posts):
        jitter = float(rng.uniform(-45, 45))
        times.append(_fmt(start + timedelta(seconds=i * period + period / 2 + jitter)))
    return times


_DIURNAL_HOURS = np.array(
    [0.2, 0.1, 0.05, 0.05, 0.05, 0.1, 0.5, 1.5, 2.5, 2.0, 1.5, 1.5,
     2.0, 1.5, 1.2, 1.2, 1.5, 2.0, 2.5, 3.0, 3.0, 2.5, 1.5, 0.7])
_DIURNAL_HOURS = _DIURNAL_HOURS / _DIURNAL_HOURS.sum()
_WEEKDAY_WEIGHTS = np.array([1.3, 1.2, 1.2, 1.2, 1.1, 0.5, 0.5])
_WEEKDAY_WEIGHTS = _WEEKDAY_WEIGHTS / _WEEKDAY_WEIGHTS.sum()


def _human_times(rng: np.random.Generator, start: datetime, days: int,
                 n_posts: int) -> list[datetime]:
    times = []
    weeks = max(1, days // 7)
    for _ in range(n_posts):
        week = int(rng.integers(weeks))
        weekday = int(rng.choice(7, p=_WEEKDAY_WEIGHTS))
        day = min(week * 7 + weekday, days - 1)
        hour = int(rng.choice(24, p=_DIURNAL_HOURS))
        ts = start + timedelta(days=day, hours=hour,
                               minutes=int(rng.integers(60)),
                               seconds=int(rng.integers(60)))
        times.append(_fmt(ts))
    return sorted(times)


def _make_tweets(rng: np.random.Generator, account: AccountRecord, is_bot: bool,
                 start: datetime, days: int, n_posts: int,
                 peer_ids: Sequence[str], counter: list[int]) -> list[TweetRecord]:
    times = (_bot_times if is_bot else _human_times)(rng, start, days, n_posts)
    tweets = []
    rt_fraction = 0.85 if is_bot else 0.35
    for ts in times:
        counter[0] += 1
        tweet_id = f"t{counter[0]:07d}"
        if is_bot:
            text = _BOT_PHRASES[int(rng.integers(len(_BOT_PHRASES)))]
            hashtags = tuple(rng.choice(_BOT_HASHTAGS, size=2, replace=False))
            mentions = (str(rng.choice(_BOT_TARGETS)),)
            urls = ("https://short.link/x",) if rng.random() < 0.7 else ()
        else:
            text = " ".join(rng.choice(_WORDS, size=int(rng.integers(5, 12))))
            n_tags = int(rng.integers(0, 3))
            hashtags = tuple(rng.choice(_HUMAN_HASHTAGS, size=n_tags, replace=False))
            mentions = tuple(rng.choice(_HUMAN_TARGETS, size=int(rng.integers(0, 3)),
                                        replace=False))
            urls = ("https://example.org/a",) if rng.random() < 0.25 else ()
        if rng.random() < rt_fraction:
            if is_bot:
                delay = float(rng.uniform(15, 90))
                rt_author = str(rng.choice(_BOT_TARGETS))
            else:
                delay = float(np.exp(rng.uniform(np.log(3600), np.log(172800))))
                rt_author = (str(rng.choice(peer_ids)) if peer_ids and rng.random() < 0.5
                             else str(rng.choice(_HUMAN_TARGETS)))
            original_time = ts - timedelta(seconds=delay)
            tweets.append(TweetRecord(
                tweet_id=tweet_id, author_id=account.user_id, created_at=ts,
                text="RT " + text, hashtags=hashtags, mentions=mentions, urls=urls,
                is_retweet=True, retweeted_tweet_id=f"orig-{tweet_id}",
                retweeted_author_id=rt_author,
                retweeted_created_at=_fmt(original_time)))
        else:
            tweets.append(TweetRecord(
                tweet_id=tweet_id, author_id=account.user_id, created_at=ts,
                text=text, hashtags=hashtags, mentions=mentions, urls=urls))
    return tweets


def generate_corpus(n_bots: int, n_humans: int, seed: int = 0,
                    start: datetime | None = None, days: int = 30,
                    posts_range: tuple[int, int] = (14, 24)) -> SimulatedCorpus:
    """Build a labeled synthetic corpus plus matching scorer and suspension data."""
    rng = np.random.default_rng(seed)
    start = start or datetime(2020, 9, 1, tzinfo=UTC)
    window = (start, start + timedelta(days=days))
    accounts: list[AccountRecord] = []
    flags: list[bool] = []
    for i in range(n_bots + n_humans):
        uid = f"u{i:05d}"
        is_bot = i < n_bots
        accounts.append(_make_account(rng, uid, is_bot, start))
        flags.append(is_bot)
    human_ids = [a.user_id for a, b in zip(accounts, flags) if not b]

    counter = [0]
    tweets: list[TweetRecord] = []
    for account, is_bot in zip(accounts, flags):
        n_posts = int(rng.integers(*posts_range))
        tweets.extend(_make_tweets(rng, account, is_bot, start, days, n_posts,
                                   human_ids, counter))
    view = build_view(accounts, tweets, window=window)

    bot_ids = {a.user_id for a, b in zip(accounts, flags) if b}
    queried = start + timedelta(days=days + 1)
    scores: list[ScorerOutput] = []
    suspended: set[str] = set()
    for account, is_bot in zip(accounts, flags):
        uid = account.user_id
        if is_bot:
            score_a = float(np.clip(rng.normal(87, 5), 0, 100))
            score_b = float(np.clip(rng.normal(4.5, 0.2), 0, 5))
        else:
            score_a = float(np.clip(rng.normal(12, 5), 0, 100))
            score_b = float(np.clip(rng.normal(0.5, 0.2), 0, 5))
        scores.append(ScorerOutput(SCORER_A, uid, round(score_a), queried))
        if is_bot and rng.random() < 0.04:
            suspended.add(uid)  # suspended accounts cannot be B-queried
        else:
            scores.append(ScorerOutput(SCORER_B, uid, score_b, queried))
    return SimulatedCorpus(view=view, bot_ids=bot_ids, scores=scores,
                           suspended=suspended)


def write_fixture(sim: SimulatedCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Write corpus.jsonl, scores.csv and suspended.txt for CLI runs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.jsonl",
        "scores": out / "scores.csv",
        "suspended": out / "suspended.txt",
    }
    export_corpus(sim.view, paths["corpus"])
    write_score_file(paths["scores"], sim.scores)
    paths["suspended"].write_text(
        "".join(f"{uid}\n" for uid in sorted(sim.suspended)), encoding="utf-8")
    return paths
