"""JSON codecs for the wire and file formats shared by the store, the REST
service, and the CLI."""

from __future__ import annotations

from typing import Optional

from tweetriage.domain import (
    AnnotationRecord,
    EntitySpan,
    EntityTag,
    HelpLabel,
    Tweet,
    format_timestamp,
    parse_timestamp,
)
from tweetriage.geoloc import GeocodeOutcome, GeoPoint, OutcomeKind
from tweetriage.pipeline import Stage, TriageResult


def tweet_to_dict(tweet: Tweet) -> dict:
    out = {
        "id": tweet.id,
        "text": tweet.text,
        "created_at": format_timestamp(tweet.created_at),
    }
    if tweet.author is not None:
        out["author"] = tweet.author
    return out


def tweet_from_dict(obj: dict) -> Tweet:
    return Tweet(
        id=str(obj["id"]),
        text=obj["text"],
        created_at=parse_timestamp(obj["created_at"]),
        author=obj.get("author"),
    )


def span_to_dict(span: EntitySpan) -> dict:
    return {
        "tag": span.tag.value,
        "start": span.start,
        "end": span.end,
        "surface": span.surface,
    }


def span_from_dict(obj: dict) -> EntitySpan:
    return EntitySpan(
        tag=EntityTag(obj["tag"]),
        start=int(obj["start"]),
        end=int(obj["end"]),
        surface=obj["surface"],
    )


def outcome_to_dict(outcome: Optional[GeocodeOutcome]) -> Optional[dict]:
    if outcome is None:
        return None
    return {
        "kind": outcome.kind.value,
        "point": (
            {"lat": outcome.point.lat, "lon": outcome.point.lon} if outcome.point else None
        ),
        "message": outcome.message,
    }


def outcome_from_dict(obj: Optional[dict]) -> Optional[GeocodeOutcome]:
    if obj is None:
        return None
    point = obj.get("point")
    return GeocodeOutcome(
        kind=OutcomeKind(obj["kind"]),
        point=GeoPoint(point["lat"], point["lon"]) if point else None,
        message=obj.get("message"),
    )


def result_to_dict(result: TriageResult) -> dict:
    return {
        "tweet_id": result.tweet_id,
        "label": result.label.value,
        "margin": result.margin,
        "spans": [span_to_dict(s) for s in result.spans],
        "matched_city": result.matched_city,
        "normalized_address": result.normalized_address,
        "outcome": outcome_to_dict(result.outcome),
        "stage": result.stage.value,
    }


def result_from_dict(obj: dict) -> TriageResult:
    return TriageResult(
        tweet_id=obj["tweet_id"],
        label=HelpLabel(obj["label"]),
        margin=float(obj["margin"]),
        spans=tuple(span_from_dict(s) for s in obj["spans"]),
        matched_city=obj.get("matched_city"),
        normalized_address=obj.get("normalized_address"),
        outcome=outcome_from_dict(obj.get("outcome")),
        stage=Stage(obj["stage"]),
    )


def annotation_to_dict(record: AnnotationRecord) -> dict:
    return {
        "tweet_id": record.tweet_id,
        "label": record.label.value,
        "spans": [span_to_dict(s) for s in record.spans],
        "annotator": record.annotator,
        "created_at": format_timestamp(record.created_at),
    }
