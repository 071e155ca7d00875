"""Core data model: tweets, help labels, entity spans, and the BIO scheme.

All types are immutable values; offsets are Unicode character offsets into
the tweet text (never bytes), so annotations survive re-encoding.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum, IntEnum
from typing import Optional, Sequence

from tweetriage.textfeat import Token


class EntityTag(Enum):
    PER = "PER"
    CITY = "CITY"
    ADDR = "ADDR"
    STATUS = "STATUS"


class HelpLabel(Enum):
    CALL_FOR_HELP = "call_for_help"
    NOT_CALL_FOR_HELP = "not_call_for_help"


class BioLabel(IntEnum):
    """Nine BIO labels over the four entity tags; index order is fixed (O=0)."""

    O = 0
    B_PER = 1
    I_PER = 2
    B_CITY = 3
    I_CITY = 4
    B_ADDR = 5
    I_ADDR = 6
    B_STATUS = 7
    I_STATUS = 8

    @staticmethod
    def begin(tag: EntityTag) -> "BioLabel":
        return _BEGIN[tag]

    @staticmethod
    def inside(tag: EntityTag) -> "BioLabel":
        return _INSIDE[tag]

    @property
    def is_begin(self) -> bool:
        return self != BioLabel.O and self.value % 2 == 1

    @property
    def is_inside(self) -> bool:
        return self != BioLabel.O and self.value % 2 == 0

    @property
    def entity_tag(self) -> Optional[EntityTag]:
        if self == BioLabel.O:
            return None
        return _TAG_OF[self]

    def to_string(self) -> str:
        return self.name.replace("_", "-")

    @classmethod
    def from_string(cls, label: str) -> "BioLabel":
        return cls[label.replace("-", "_")]


_BEGIN = {
    EntityTag.PER: BioLabel.B_PER,
    EntityTag.CITY: BioLabel.B_CITY,
    EntityTag.ADDR: BioLabel.B_ADDR,
    EntityTag.STATUS: BioLabel.B_STATUS,
}
_INSIDE = {
    EntityTag.PER: BioLabel.I_PER,
    EntityTag.CITY: BioLabel.I_CITY,
    EntityTag.ADDR: BioLabel.I_ADDR,
    EntityTag.STATUS: BioLabel.I_STATUS,
}
_TAG_OF = {bio: tag for tag, bio in _BEGIN.items()}
_TAG_OF.update({bio: tag for tag, bio in _INSIDE.items()})


def is_valid_bio_sequence(labels: Sequence[BioLabel]) -> bool:
    """True iff no I-X appears at position 0 or after anything but B-X/I-X."""
    prev: Optional[BioLabel] = None
    for label in labels:
        if label.is_inside:
            if prev is None or prev.entity_tag != label.entity_tag:
                return False
        prev = label
    return True


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str
    created_at: datetime
    author: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("tweet id must be non-empty")
        if len(self.text) < 1:
            raise ValueError("tweet text must be non-empty")


@dataclass(frozen=True)
class EntitySpan:
    """A tagged text region; start inclusive, end exclusive, in characters."""

    tag: EntityTag
    start: int
    end: int
    surface: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end


class SpanValidationError(ValueError):
    pass


class SpanOverlapError(SpanValidationError):
    pass


def validate_spans(text: str, spans: Sequence[EntitySpan]) -> None:
    """Check spans against their tweet text: bounds, surface, disjointness."""
    for span in spans:
        if span.end > len(text):
            raise SpanValidationError(
                f"span [{span.start}, {span.end}) exceeds text length {len(text)}"
            )
        if text[span.start : span.end] != span.surface:
            raise SpanValidationError(
                f"span surface {span.surface!r} != text slice "
                f"{text[span.start:span.end]!r}"
            )
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise SpanOverlapError(f"spans overlap: {a} / {b}")


@dataclass(frozen=True)
class AnnotationRecord:
    tweet_id: str
    label: HelpLabel
    spans: tuple[EntitySpan, ...]
    annotator: str
    created_at: datetime

    def __post_init__(self) -> None:
        if self.label == HelpLabel.NOT_CALL_FOR_HELP and self.spans:
            raise ValueError("a not-call-for-help annotation cannot carry spans")


def spans_to_bio(tokens: Sequence[Token], spans: Sequence[EntitySpan]) -> list[BioLabel]:
    """Project character spans onto tokens as BIO labels.

    The first token overlapping a span gets B-X, later overlapping tokens
    I-X. A span boundary inside a token pulls the whole token in.
    """
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise SpanOverlapError(f"spans overlap: {a} / {b}")
    labels = [BioLabel.O] * len(tokens)
    for span in ordered:
        first = True
        for i, token in enumerate(tokens):
            if token.start < span.end and token.end > span.start:
                labels[i] = (
                    BioLabel.begin(span.tag) if first else BioLabel.inside(span.tag)
                )
                first = False
    return labels


def bio_to_spans(
    text: str, tokens: Sequence[Token], labels: Sequence[BioLabel]
) -> list[EntitySpan]:
    """Decode BIO labels back into character spans.

    An I-X with no legal predecessor is repaired as B-X, so any label
    sequence decodes to disjoint spans.
    """
    if len(labels) != len(tokens):
        raise ValueError(f"{len(labels)} labels for {len(tokens)} tokens")
    spans: list[EntitySpan] = []
    run_tag: Optional[EntityTag] = None
    run_first = run_last = -1

    def close() -> None:
        nonlocal run_tag
        if run_tag is not None:
            start = tokens[run_first].start
            end = tokens[run_last].end
            spans.append(EntitySpan(run_tag, start, end, text[start:end]))
            run_tag = None

    for i, label in enumerate(labels):
        if label == BioLabel.O:
            close()
            continue
        tag = label.entity_tag
        if label.is_inside and run_tag == tag and run_last == i - 1:
            run_last = i
        else:
            close()
            run_tag, run_first, run_last = tag, i, i
    close()
    return spans


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; 'Z' accepted, naive values taken as UTC."""
    raw = value.strip()
    if raw.endswith("Z") or raw.endswith("z"):
        raw = raw[:-1] + "+00:00"
    parsed = datetime.fromisoformat(raw)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
