"""Embedded single-file store for tweets, triage results, annotations, and
the geocode cache.

SQLite with one shared connection; a process-wide lock serializes access
(single writer, desk-scale reads), which keeps the service safe under
concurrent request handling.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path
from typing import Optional, Sequence

from tweetriage import wire
from tweetriage.domain import AnnotationRecord, EntityTag, Tweet, format_timestamp
from tweetriage.geoloc import GeocodeOutcome
from tweetriage.pipeline import PipelineStats, Stage, TriageResult
from tweetriage.textfeat import turkish_fold

_SCHEMA = """
CREATE TABLE IF NOT EXISTS tweets (
    id TEXT PRIMARY KEY,
    text TEXT NOT NULL,
    created_at TEXT NOT NULL,
    author TEXT
);
CREATE TABLE IF NOT EXISTS results (
    tweet_id TEXT PRIMARY KEY REFERENCES tweets(id),
    label TEXT NOT NULL,
    margin REAL NOT NULL,
    spans TEXT NOT NULL,
    matched_city TEXT,
    normalized_address TEXT,
    outcome TEXT,
    stage TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS annotations (
    tweet_id TEXT NOT NULL REFERENCES tweets(id),
    annotator TEXT NOT NULL,
    label TEXT NOT NULL,
    spans TEXT NOT NULL,
    created_at TEXT NOT NULL,
    PRIMARY KEY (tweet_id, annotator)
);
CREATE TABLE IF NOT EXISTS geocode_cache (
    address TEXT PRIMARY KEY,
    outcome TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_results_stage ON results(stage);
"""


class Store:
    def __init__(self, path: str | Path):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._lock = threading.RLock()
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- tweets / results ----------------------------------------------------

    def has_tweet(self, tweet_id: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM tweets WHERE id = ?", (tweet_id,)
            ).fetchone()
        return row is not None

    def save_triage(self, tweet: Tweet, result: TriageResult) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO tweets (id, text, created_at, author) VALUES (?, ?, ?, ?)",
                (tweet.id, tweet.text, format_timestamp(tweet.created_at), tweet.author),
            )
            self._conn.execute(
                "INSERT INTO results (tweet_id, label, margin, spans, matched_city,"
                " normalized_address, outcome, stage) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    tweet.id,
                    result.label.value,
                    result.margin,
                    json.dumps([wire.span_to_dict(s) for s in result.spans], ensure_ascii=False),
                    result.matched_city,
                    result.normalized_address,
                    json.dumps(wire.outcome_to_dict(result.outcome), ensure_ascii=False)
                    if result.outcome is not None
                    else None,
                    result.stage.value,
                ),
            )

    def get_tweet(self, tweet_id: str) -> Optional[Tweet]:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, text, created_at, author FROM tweets WHERE id = ?",
                (tweet_id,),
            ).fetchone()
        if row is None:
            return None
        return wire.tweet_from_dict(
            {"id": row[0], "text": row[1], "created_at": row[2], "author": row[3]}
        )

    @staticmethod
    def _row_to_item(row: Sequence) -> dict:
        item = {
            "tweet_id": row[0],
            "label": row[1],
            "margin": row[2],
            "spans": json.loads(row[3]),
            "matched_city": row[4],
            "normalized_address": row[5],
            "outcome": json.loads(row[6]) if row[6] is not None else None,
            "stage": row[7],
            "text": row[8],
            "created_at": row[9],
        }
        return item

    _RESULT_COLUMNS = (
        "r.tweet_id, r.label, r.margin, r.spans, r.matched_city,"
        " r.normalized_address, r.outcome, r.stage, t.text, t.created_at"
    )

    def get_result(self, tweet_id: str) -> Optional[dict]:
        with self._lock:
            row = self._conn.execute(
                f"SELECT {self._RESULT_COLUMNS} FROM results r JOIN tweets t"
                " ON t.id = r.tweet_id WHERE r.tweet_id = ?",
                (tweet_id,),
            ).fetchone()
        return self._row_to_item(row) if row else None

    def query_results(
        self,
        name: Optional[str] = None,
        status: Optional[str] = None,
        stage: Optional[Stage] = None,
        limit: int = 100,
        offset: int = 0,
    ) -> tuple[int, list[dict]]:
        """Filtered result page: (total matching, items), newest first."""
        sql = (
            f"SELECT {self._RESULT_COLUMNS} FROM results r JOIN tweets t"
            " ON t.id = r.tweet_id"
        )
        params: tuple = ()
        if stage is not None:
            sql += " WHERE r.stage = ?"
            params = (stage.value,)
        sql += " ORDER BY t.created_at DESC, r.tweet_id ASC"
        with self._lock:
            rows = self._conn.execute(sql, params).fetchall()
        items = [self._row_to_item(row) for row in rows]
        if name is not None:
            items = [i for i in items if _span_surface_match(i, EntityTag.PER, name)]
        if status is not None:
            items = [i for i in items if _span_surface_match(i, EntityTag.STATUS, status)]
        total = len(items)
        return total, items[offset : offset + limit]

    def list_filters(self) -> tuple[list[str], list[str]]:
        """Distinct PER and STATUS surfaces over located + unlocated results,
        deduplicated case-insensitively (first-seen casing wins), sorted."""
        with self._lock:
            rows = self._conn.execute(
                f"SELECT {self._RESULT_COLUMNS} FROM results r JOIN tweets t"
                " ON t.id = r.tweet_id WHERE r.stage IN (?, ?)"
                " ORDER BY t.created_at ASC, r.tweet_id ASC",
                (Stage.LOCATED.value, Stage.UNLOCATED.value),
            ).fetchall()
        names: dict[str, str] = {}
        statuses: dict[str, str] = {}
        for row in rows:
            for span in json.loads(row[3]):
                bucket = (
                    names
                    if span["tag"] == EntityTag.PER.value
                    else statuses
                    if span["tag"] == EntityTag.STATUS.value
                    else None
                )
                if bucket is not None:
                    bucket.setdefault(turkish_fold(span["surface"]), span["surface"])
        return (
            sorted(names.values(), key=turkish_fold),
            sorted(statuses.values(), key=turkish_fold),
        )

    def stats(self) -> PipelineStats:
        with self._lock:
            rows = self._conn.execute(
                "SELECT stage, COUNT(*) FROM results GROUP BY stage"
            ).fetchall()
        return PipelineStats.from_stages({Stage(stage): count for stage, count in rows})

    # -- annotations -----------------------------------------------------------

    def upsert_annotation(self, record: AnnotationRecord) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO annotations (tweet_id, annotator, label, spans, created_at)"
                " VALUES (?, ?, ?, ?, ?)"
                " ON CONFLICT (tweet_id, annotator) DO UPDATE SET"
                " label = excluded.label, spans = excluded.spans,"
                " created_at = excluded.created_at",
                (
                    record.tweet_id,
                    record.annotator,
                    record.label.value,
                    json.dumps([wire.span_to_dict(s) for s in record.spans], ensure_ascii=False),
                    format_timestamp(record.created_at),
                ),
            )

    def annotations_for(self, tweet_id: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT tweet_id, annotator, label, spans, created_at FROM annotations"
                " WHERE tweet_id = ? ORDER BY annotator",
                (tweet_id,),
            ).fetchall()
        return [
            {
                "tweet_id": row[0],
                "annotator": row[1],
                "label": row[2],
                "spans": json.loads(row[3]),
                "created_at": row[4],
            }
            for row in rows
        ]

    # -- geocode cache ----------------------------------------------------------

    def cache_get(self, address: str) -> Optional[GeocodeOutcome]:
        with self._lock:
            row = self._conn.execute(
                "SELECT outcome FROM geocode_cache WHERE address = ?", (address,)
            ).fetchone()
        if row is None:
            return None
        return wire.outcome_from_dict(json.loads(row[0]))

    def cache_put(self, address: str, outcome: GeocodeOutcome) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO geocode_cache (address, outcome) VALUES (?, ?)",
                (address, json.dumps(wire.outcome_to_dict(outcome), ensure_ascii=False)),
            )


def _span_surface_match(item: dict, tag: EntityTag, value: str) -> bool:
    folded = turkish_fold(value)
    return any(
        span["tag"] == tag.value and turkish_fold(span["surface"]) == folded
        for span in item["spans"]
    )


class SqliteGeocodeCache:
    """Adapter exposing the store's cache table to the geocoder."""

    def __init__(self, store: Store):
        self._store = store

    def get(self, address: str) -> Optional[GeocodeOutcome]:
        return self._store.cache_get(address)

    def put(self, address: str, outcome: GeocodeOutcome) -> None:
        self._store.cache_put(address, outcome)
