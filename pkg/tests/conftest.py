from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest

from botsift.corpus import AccountRecord, TweetRecord, build_view

UTC = timezone.utc
SEPT = datetime(2020, 9, 1, tzinfo=UTC)


def ts(day: int, hour: int = 12, minute: int = 0, second: int = 0,
       month: int = 9) -> datetime:
    return datetime(2020, month, day, hour, minute, second, tzinfo=UTC)


def make_account(user_id: str, **overrides) -> AccountRecord:
    fields = dict(
        user_id=user_id,
        name=f"User {user_id}",
        screen_name=f"user_{user_id}",
        description="",
        created_at=SEPT - timedelta(days=365),
        statuses_count=10,
        followers_count=5,
        friends_count=5,
        favourites_count=2,
        listed_count=0,
        verified=False,
        protected=False,
        default_profile=False,
        has_background_image=True,
        has_location=False,
        has_geolocation=False,
        description_entities=(),
    )
    fields.update(overrides)
    return AccountRecord(**fields)


def make_tweet(tweet_id: str, author_id: str, created_at: datetime,
               **overrides) -> TweetRecord:
    fields = dict(
        tweet_id=tweet_id,
        author_id=author_id,
        created_at=created_at,
        text="hello world",
        hashtags=(),
        mentions=(),
        urls=(),
        is_retweet=False,
        retweeted_tweet_id=None,
        retweeted_author_id=None,
        retweeted_created_at=None,
    )
    fields.update(overrides)
    return TweetRecord(**fields)


def make_retweet(tweet_id: str, author_id: str, created_at: datetime,
                 original_author: str, delay_seconds: float = 60.0,
                 **overrides) -> TweetRecord:
    return make_tweet(
        tweet_id, author_id, created_at,
        is_retweet=True,
        retweeted_tweet_id=f"orig-{tweet_id}",
        retweeted_author_id=original_author,
        retweeted_created_at=created_at - timedelta(seconds=delay_seconds),
        **overrides,
    )


def corpus_of(accounts, tweets, window=None):
    return build_view(accounts, tweets, window=window)


def write_jsonl(path, objects) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj) + "\n")


def user_obj(user_id: str, **overrides) -> dict:
    obj = {
        "id_str": user_id,
        "name": f"User {user_id}",
        "screen_name": f"user_{user_id}",
        "description": "",
        "created_at": "2019-09-01T00:00:00+00:00",
        "statuses_count": 10,
        "followers_count": 5,
        "friends_count": 5,
        "favourites_count": 2,
        "listed_count": 0,
        "verified": False,
        "protected": False,
        "default_profile": False,
        "profile_use_background_image": True,
        "location": "",
        "geo_enabled": False,
    }
    obj.update(overrides)
    return obj


def tweet_obj(tweet_id: str, author_id: str, created_at: str, **overrides) -> dict:
    obj = {
        "id_str": tweet_id,
        "user_id_str": author_id,
        "created_at": created_at,
        "text": "hello world",
        "entities": {"hashtags": [], "user_mentions": [], "urls": []},
    }
    obj.update(overrides)
    return obj


@pytest.fixture(scope="session")
def sim_small():
    """Mid-size synthetic corpus shared by slower integration tests."""
    from botsift.simulate import generate_corpus
    return generate_corpus(n_bots=25, n_humans=40, seed=11, days=30,
                           posts_range=(10, 16))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from acceptance_report import render
    except ImportError:
        return
    lines = render()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
