"""File-based tweet ingestion: JSONL reading, keyword filtering, dedupe, replay.

Live collection APIs are out of scope; a recorded JSON Lines file replayed at
a configurable rate stands in for the stream.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from tweetriage.domain import Tweet, parse_timestamp
from tweetriage.textfeat import turkish_fold


class KeywordSetName(Enum):
    GENERAL = "general"
    HELP = "help"


@dataclass(frozen=True)
class KeywordSet:
    name: KeywordSetName
    keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("keyword set must be non-empty")
        folded = [turkish_fold(k) for k in self.keywords]
        if len(set(folded)) != len(folded):
            raise ValueError("keyword set contains case-fold duplicates")
        if any(not k for k in folded):
            raise ValueError("keywords must be non-empty")
        object.__setattr__(self, "keywords", tuple(folded))


def load_keywords(path: str | Path, name: KeywordSetName) -> KeywordSet:
    """Read one keyword phrase per line; '#' lines and blanks are ignored."""
    phrases = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            phrases.append(line)
    return KeywordSet(name, tuple(phrases))


@dataclass
class IngestBatch:
    source: str
    tweets: list[Tweet]
    skipped: int = 0
    matched_set: dict[str, KeywordSetName] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [t.id for t in self.tweets]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate tweet ids within batch")


class EmptyBatchError(ValueError):
    pass


def parse_tweet(obj: dict) -> Tweet:
    return Tweet(
        id=str(obj["id"]),
        text=obj["text"],
        created_at=parse_timestamp(obj["created_at"]),
        author=obj.get("author"),
    )


def read_tweets(path: str | Path) -> IngestBatch:
    """Load a JSON Lines tweet file; malformed lines are counted and skipped."""
    path = Path(path)
    tweets: list[Tweet] = []
    seen: set[str] = set()
    skipped = 0
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tweet = parse_tweet(obj)
            except (ValueError, KeyError, TypeError):
                skipped += 1
                continue
            if tweet.id in seen:
                skipped += 1
                continue
            seen.add(tweet.id)
            tweets.append(tweet)
    if not tweets:
        raise EmptyBatchError(f"no well-formed tweets in {path}")
    return IngestBatch(source=str(path), tweets=tweets, skipped=skipped)


def _word_bounded(haystack: str, needle: str) -> bool:
    # Phrase occurrence with word boundaries on both sides, which is what a
    # query-based collector approximates ("altında" must not match inside
    # "altındayız").
    start = 0
    while True:
        pos = haystack.find(needle, start)
        if pos < 0:
            return False
        before_ok = pos == 0 or not haystack[pos - 1].isalnum()
        after = pos + len(needle)
        after_ok = after == len(haystack) or not haystack[after].isalnum()
        if before_ok and after_ok:
            return True
        start = pos + 1


def keyword_filter(tweets: Sequence[Tweet], keyword_set: KeywordSet) -> list[Tweet]:
    """Keep tweets whose case-folded text contains any keyword phrase."""
    out = []
    for tweet in tweets:
        folded = turkish_fold(tweet.text)
        if any(_word_bounded(folded, kw) for kw in keyword_set.keywords):
            out.append(tweet)
    return out


def match_keyword_sets(
    tweets: Sequence[Tweet], sets: Sequence[KeywordSet]
) -> dict[str, KeywordSetName]:
    """Map tweet id -> name of the first keyword set it matches."""
    matched: dict[str, KeywordSetName] = {}
    for keyword_set in sets:
        for tweet in keyword_filter(tweets, keyword_set):
            matched.setdefault(tweet.id, keyword_set.name)
    return matched


def dedupe(tweets: Sequence[Tweet]) -> list[Tweet]:
    """Keep the first occurrence of each id, preserving order."""
    seen: set[str] = set()
    out = []
    for tweet in tweets:
        if tweet.id not in seen:
            seen.add(tweet.id)
            out.append(tweet)
    return out


@dataclass(frozen=True)
class ReplaySummary:
    count: int
    duration_s: float


class ReplayError(RuntimeError):
    """Sink failure during replay; `delivered` counts tweets already sent."""

    def __init__(self, delivered: int, cause: BaseException):
        super().__init__(f"sink failed after {delivered} tweets: {cause}")
        self.delivered = delivered
        self.cause = cause


def replay(
    batch: IngestBatch,
    rate: float,
    sink: Callable[[Tweet], None],
    sleep: Callable[[float], None] = time.sleep,
) -> ReplaySummary:
    """Deliver the batch to `sink` in timestamp order at `rate` tweets/second."""
    if rate <= 0:
        raise ValueError("replay rate must be > 0")
    ordered = sorted(batch.tweets, key=lambda t: (t.created_at, t.id))
    started = time.monotonic()
    delivered = 0
    for i, tweet in enumerate(ordered):
        if i > 0:
            sleep(1.0 / rate)
        try:
            sink(tweet)
        except Exception as exc:
            raise ReplayError(delivered, exc) from exc
        delivered += 1
    return ReplaySummary(count=delivered, duration_s=time.monotonic() - started)
