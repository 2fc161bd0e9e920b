"""Shared text normalization: the tokenizer used by context features and
embedding training, plus the versioned stopword list shipped with the package."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

TOKENIZER_VERSION = "1"
STOPWORDS_VERSION = "1"

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_WORD_RE = re.compile(r"[a-z][a-z0-9']*")


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    """Load the packaged stopword list (lowercase tokens, one per line)."""
    text = resources.files("botsift").joinpath("data/stopwords.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def tokenize(text: str, stopword_list: frozenset[str] | None = None) -> list[str]:
    """Lowercased word tokens with punctuation dropped and stopwords removed.

    URLs, @mentions and #hashtags are stripped before tokenization: those
    come from the tweet's entity lists, never re-parsed from the text.
    """
    if stopword_list is None:
        stopword_list = stopwords()
    lowered = text.lower()
    lowered = _URL_RE.sub(" ", lowered)
    lowered = _MENTION_RE.sub(" ", lowered)
    lowered = _HASHTAG_RE.sub(" ", lowered)
    tokens = _WORD_RE.findall(lowered)
    return [t for t in tokens if t not in stopword_list]


def mention_token(screen_name: str) -> str:
    return "@" + screen_name.lower()


def hashtag_token(tag: str) -> str:
    return "#" + tag.lower()
