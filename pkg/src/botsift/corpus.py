"""Parsing, validation and windowed views over a stored tweet/user corpus.

The on-disk format is line-delimited JSON mirroring the Twitter v1.1 object
field names: a line holding ``"text"`` is a tweet, any other object with
``"screen_name"`` is a user. `ingest` performs a two-pass read (records first,
linking second) so user lines may appear anywhere in the file.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

V11_TIME_FORMAT = "%a %b %d %H:%M:%S %z %Y"

_DESC_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_DESC_MENTION_RE = re.compile(r"@(\w{1,15})")
_DESC_HASHTAG_RE = re.compile(r"#(\w+)")


class CorpusError(Exception):
    """Base error for corpus handling."""


class IngestError(CorpusError):
    """Unreadable input, duplicate identifiers, or reject ratio above tolerance."""


def parse_timestamp(value: str) -> datetime:
    """Parse a v1.1 (`Wed Oct 10 20:19:24 +0000 2018`) or ISO-8601 timestamp to UTC."""
    if not isinstance(value, str) or not value:
        raise ValueError("timestamp must be a non-empty string")
    try:
        ts = datetime.strptime(value, V11_TIME_FORMAT)
    except ValueError:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat()


@dataclass(frozen=True)
class AccountRecord:
    """One user object: identity, profile counts and profile flags."""

    user_id: str
    name: str
    screen_name: str
    description: str
    created_at: datetime
    statuses_count: int
    followers_count: int
    friends_count: int
    favourites_count: int
    listed_count: int
    verified: bool
    protected: bool
    default_profile: bool
    has_background_image: bool
    has_location: bool
    has_geolocation: bool
    description_entities: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class TweetRecord:
    """One tweet, with entity lists and (for retweets) the original's linkage."""

    tweet_id: str
    author_id: str
    created_at: datetime
    text: str
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    is_retweet: bool = False
    retweeted_tweet_id: str | None = None
    retweeted_author_id: str | None = None
    retweeted_created_at: datetime | None = None


@dataclass(frozen=True)
class CorpusView:
    """Immutable, validated view of accounts and their time-ordered tweets.

    ``reference_date`` (the window end) anchors every user-age computation.
    """

    accounts: dict[str, AccountRecord]
    tweets_by_author: dict[str, tuple[TweetRecord, ...]]
    window: tuple[datetime, datetime]
    reference_date: datetime

    @property
    def n_accounts(self) -> int:
        return len(self.accounts)

    @property
    def n_tweets(self) -> int:
        return sum(len(v) for v in self.tweets_by_author.values())

    def tweets_of(self, user_id: str) -> tuple[TweetRecord, ...]:
        return self.tweets_by_author.get(user_id, ())

    def iter_tweets(self) -> Iterator[TweetRecord]:
        for author in sorted(self.tweets_by_author):
            yield from self.tweets_by_author[author]


@dataclass
class IngestSchema:
    """Knobs for `ingest`: reject tolerance and an optional explicit window."""

    malformed_tolerance: float = 0.001
    window: tuple[datetime, datetime] | None = None


@dataclass
class IngestReport:
    path: str
    lines_read: int = 0
    accounts: int = 0
    tweets: int = 0
    rejected: int = 0
    reject_reasons: dict[str, int] = field(default_factory=dict)
    window: tuple[str, str] | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


@dataclass
class IngestResult:
    view: CorpusView
    report: IngestReport


def _parse_description_entities(obj: dict) -> tuple[tuple[str, str], ...]:
    explicit = obj.get("description_entities")
    if explicit is not None:
        return tuple((e["kind"], e["text"]) for e in explicit)
    desc = obj.get("description") or ""
    ents: list[tuple[str, str]] = []
    for m in _DESC_URL_RE.finditer(desc):
        ents.append(("url", m.group(0)))
    for m in _DESC_MENTION_RE.finditer(desc):
        ents.append(("mention", m.group(1)))
    for m in _DESC_HASHTAG_RE.finditer(desc):
        ents.append(("hashtag", m.group(1)))
    return tuple(ents)


def _parse_user(obj: dict) -> AccountRecord:
    user_id = str(obj.get("id_str") or obj.get("id") or "")
    if not user_id:
        raise ValueError("user_id empty")
    counts = {}
    for key in ("statuses_count", "followers_count", "friends_count",
                "favourites_count", "listed_count"):
        value = int(obj.get(key, 0))
        if value < 0:
            raise ValueError(f"{key} negative")
        counts[key] = value
    return AccountRecord(
        user_id=user_id,
        name=str(obj.get("name", "")),
        screen_name=str(obj.get("screen_name", "")),
        description=str(obj.get("description") or ""),
        created_at=parse_timestamp(obj["created_at"]),
        verified=bool(obj.get("verified", False)),
        protected=bool(obj.get("protected", False)),
        default_profile=bool(obj.get("default_profile", False)),
        has_background_image=bool(obj.get("profile_use_background_image", False)),
        has_location=bool(obj.get("location")),
        has_geolocation=bool(obj.get("geo_enabled", False)),
        description_entities=_parse_description_entities(obj),
        **counts,
    )


def _parse_tweet(obj: dict) -> TweetRecord:
    tweet_id = str(obj.get("id_str") or obj.get("id") or "")
    if not tweet_id:
        raise ValueError("tweet_id empty")
    user_obj = obj.get("user") or {}
    author_id = str(obj.get("user_id_str") or user_obj.get("id_str")
                    or user_obj.get("id") or "")
    if not author_id:
        raise ValueError("author_id empty")
    created_at = parse_timestamp(obj["created_at"])
    entities = obj.get("entities") or {}
    hashtags = tuple(str(h["text"]) for h in entities.get("hashtags", ()))
    mentions = tuple(str(m["screen_name"]) for m in entities.get("user_mentions", ()))
    urls = tuple(str(u.get("expanded_url") or u.get("url", "")) for u in entities.get("urls", ()))
    rs = obj.get("retweeted_status")
    if rs is not None:
        rt_id = str(rs.get("id_str") or rs.get("id") or "")
        if not rt_id:
            raise ValueError("retweeted_status without id")
        rs_user = rs.get("user") or {}
        rt_author = str(rs.get("user_id_str") or rs_user.get("id_str")
                        or rs_user.get("id") or "") or None
        rt_created = parse_timestamp(rs["created_at"]) if rs.get("created_at") else None
        if rt_created is not None and rt_created > created_at:
            raise ValueError("retweet predates original")
        return TweetRecord(
            tweet_id=tweet_id, author_id=author_id, created_at=created_at,
            text=str(obj.get("text") or obj.get("full_text") or ""),
            hashtags=hashtags, mentions=mentions, urls=urls,
            is_retweet=True, retweeted_tweet_id=rt_id,
            retweeted_author_id=rt_author, retweeted_created_at=rt_created,
        )
    return TweetRecord(
        tweet_id=tweet_id, author_id=author_id, created_at=created_at,
        text=str(obj.get("text") or obj.get("full_text") or ""),
        hashtags=hashtags, mentions=mentions, urls=urls,
    )


def build_view(accounts: Iterable[AccountRecord],
               tweets: Iterable[TweetRecord],
               window: tuple[datetime, datetime] | None = None) -> CorpusView:
    """Assemble a CorpusView from validated records (tweets sorted per author).

    Raises IngestError on duplicate ids or a tweet whose author is unknown;
    callers doing tolerant ingestion filter beforehand.
    """
    acc: dict[str, AccountRecord] = {}
    for a in accounts:
        if a.user_id in acc:
            raise IngestError(f"duplicate user_id {a.user_id!r}")
        acc[a.user_id] = a
    by_author: dict[str, list[TweetRecord]] = {}
    seen: set[str] = set()
    times: list[datetime] = []
    for t in tweets:
        if t.tweet_id in seen:
            raise IngestError(f"duplicate tweet_id {t.tweet_id!r}")
        seen.add(t.tweet_id)
        if t.author_id not in acc:
            raise IngestError(f"tweet {t.tweet_id!r} by unknown author {t.author_id!r}")
        by_author.setdefault(t.author_id, []).append(t)
        times.append(t.created_at)
    if window is None:
        if times:
            window = (min(times), max(times))
        else:
            epoch = datetime(1970, 1, 1, tzinfo=timezone.utc)
            window = (epoch, epoch)
    sorted_tweets = {
        author: tuple(sorted(posts, key=lambda t: (t.created_at, t.tweet_id)))
        for author, posts in sorted(by_author.items())
    }
    return CorpusView(accounts=acc, tweets_by_author=sorted_tweets,
                      window=window, reference_date=window[1])


def ingest(path: str | Path, schema: IngestSchema | None = None) -> IngestResult:
    """Read a line-delimited corpus file into a validated CorpusView.

    Malformed lines (bad JSON, invariant violations, orphan tweets,
    out-of-window tweets under an explicit window) are counted and reported;
    an IngestError is raised when their ratio exceeds the schema tolerance,
    when the file is unreadable, or on duplicate ids.
    """
    schema = schema or IngestSchema()
    path = Path(path)
    report = IngestReport(path=str(path))
    try:
        raw_lines = path.read_text("utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc

    users: list[AccountRecord] = []
    tweets: list[TweetRecord] = []
    rejects = Counter()

    def reject(reason: str) -> None:
        report.rejected += 1
        rejects[reason] += 1

    for line in raw_lines:
        line = line.strip()
        if not line:
            continue
        report.lines_read += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            reject("bad_json")
            continue
        if not isinstance(obj, dict):
            reject("not_an_object")
            continue
        try:
            if "text" in obj or "full_text" in obj:
                tweets.append(_parse_tweet(obj))
            elif "screen_name" in obj:
                users.append(_parse_user(obj))
            else:
                reject("unrecognized_record")
        except (ValueError, KeyError, TypeError):
            reject("invalid_record")

    known = {u.user_id for u in users}
    linked: list[TweetRecord] = []
    for t in tweets:
        if t.author_id not in known:
            reject("unknown_author")
            continue
        if schema.window is not None and not (schema.window[0] <= t.created_at <= schema.window[1]):
            reject("out_of_window")
            continue
        linked.append(t)
    if schema.window is not None:
        kept_users = []
        for u in users:
            if u.created_at > schema.window[1]:
                reject("account_created_after_window")
            else:
                kept_users.append(u)
        users = kept_users

    if report.lines_read and report.rejected / report.lines_read > schema.malformed_tolerance:
        raise IngestError(
            f"{report.rejected}/{report.lines_read} lines rejected, "
            f"tolerance {schema.malformed_tolerance:.4%} exceeded: {dict(rejects)}")

    view = build_view(users, linked, window=schema.window)
    report.accounts = view.n_accounts
    report.tweets = view.n_tweets
    report.reject_reasons = dict(sorted(rejects.items()))
    report.window = (format_timestamp(view.window[0]), format_timestamp(view.window[1]))
    return IngestResult(view=view, report=report)


def split_by_window(corpus: CorpusView, boundary: datetime) -> tuple[CorpusView, CorpusView]:
    """Split into (tweets strictly before boundary, tweets at/after boundary).

    Accounts follow their tweets and may appear in both views; accounts with
    no tweets at all are kept in both (they are not time-localized).
    """
    start, end = corpus.window
    if not (start <= boundary <= end):
        raise ValueError(f"boundary {boundary} outside corpus window [{start}, {end}]")
    left_tweets: dict[str, tuple[TweetRecord, ...]] = {}
    right_tweets: dict[str, tuple[TweetRecord, ...]] = {}
    for author, posts in corpus.tweets_by_author.items():
        before = tuple(t for t in posts if t.created_at < boundary)
        after = tuple(t for t in posts if t.created_at >= boundary)
        if before:
            left_tweets[author] = before
        if after:
            right_tweets[author] = after
    tweetless = [uid for uid in corpus.accounts if uid not in corpus.tweets_by_author]
    left_accounts = {uid: corpus.accounts[uid] for uid in sorted(set(left_tweets) | set(tweetless))}
    right_accounts = {uid: corpus.accounts[uid] for uid in sorted(set(right_tweets) | set(tweetless))}
    left = CorpusView(accounts=left_accounts, tweets_by_author=left_tweets,
                      window=(start, boundary), reference_date=boundary)
    right = CorpusView(accounts=right_accounts, tweets_by_author=right_tweets,
                       window=(boundary, end), reference_date=end)
    return left, right


def _user_to_obj(a: AccountRecord) -> dict:
    return {
        "id_str": a.user_id,
        "name": a.name,
        "screen_name": a.screen_name,
        "description": a.description,
        "created_at": format_timestamp(a.created_at),
        "statuses_count": a.statuses_count,
        "followers_count": a.followers_count,
        "friends_count": a.friends_count,
        "favourites_count": a.favourites_count,
        "listed_count": a.listed_count,
        "verified": a.verified,
        "protected": a.protected,
        "default_profile": a.default_profile,
        "profile_use_background_image": a.has_background_image,
        "location": "set" if a.has_location else "",
        "geo_enabled": a.has_geolocation,
        "description_entities": [{"kind": k, "text": t} for k, t in a.description_entities],
    }


def _tweet_to_obj(t: TweetRecord) -> dict:
    obj: dict = {
        "id_str": t.tweet_id,
        "user_id_str": t.author_id,
        "created_at": format_timestamp(t.created_at),
        "text": t.text,
        "entities": {
            "hashtags": [{"text": h} for h in t.hashtags],
            "user_mentions": [{"screen_name": m} for m in t.mentions],
            "urls": [{"expanded_url": u} for u in t.urls],
        },
    }
    if t.is_retweet:
        rs: dict = {"id_str": t.retweeted_tweet_id}
        if t.retweeted_author_id is not None:
            rs["user_id_str"] = t.retweeted_author_id
        if t.retweeted_created_at is not None:
            rs["created_at"] = format_timestamp(t.retweeted_created_at)
        obj["retweeted_status"] = rs
    return obj


def export_corpus(view: CorpusView, path: str | Path) -> None:
    """Write the corpus back out in the ingest format (canonical order)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for uid in sorted(view.accounts):
            fh.write(json.dumps(_user_to_obj(view.accounts[uid]), sort_keys=True) + "\n")
        all_tweets = sorted(view.iter_tweets(), key=lambda t: (t.created_at, t.tweet_id))
        for t in all_tweets:
            fh.write(json.dumps(_tweet_to_obj(t), sort_keys=True) + "\n")
