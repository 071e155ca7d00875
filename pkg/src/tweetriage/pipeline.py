"""Per-tweet inference pipeline: classify -> tag -> post-process -> geocode.

The pipeline is pure given its models and geocoder; persistence is the
service layer's job.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from tweetriage import classify, nertag
from tweetriage.domain import EntitySpan, EntityTag, HelpLabel, Tweet
from tweetriage.geoloc import (
    BoundingBox,
    CityList,
    Geocoder,
    GeocodeOutcome,
    OutcomeKind,
    match_city,
    normalize_address,
    within_bbox,
)
from tweetriage.textfeat import TfIdfVectorizer, tfidf_transform, tokenize


class Stage(Enum):
    CLASSIFIED_NEGATIVE = "classified_negative"
    TAG_FAILED = "tag_failed"
    UNLOCATED = "unlocated"
    LOCATED = "located"
    FILTERED_OUT_OF_SCOPE = "filtered_out_of_scope"


@dataclass(frozen=True)
class TriageResult:
    tweet_id: str
    label: HelpLabel
    margin: float
    spans: tuple[EntitySpan, ...]
    matched_city: Optional[str]
    normalized_address: Optional[str]
    outcome: Optional[GeocodeOutcome]  # None when the tweet never reached geocoding
    stage: Stage


@dataclass(frozen=True)
class PipelineStats:
    ingested: int = 0
    classified_negative: int = 0
    tagged: int = 0
    tag_failed: int = 0
    geocode_attempted: int = 0
    located: int = 0
    unlocated: int = 0
    filtered: int = 0

    def check(self) -> None:
        if self.ingested != self.classified_negative + self.tagged + self.tag_failed:
            raise ValueError("funnel identity violated: ingested split")
        if self.geocode_attempted != self.tagged:
            raise ValueError("funnel identity violated: geocode_attempted != tagged")
        if self.geocode_attempted != self.located + self.unlocated + self.filtered:
            raise ValueError("funnel identity violated: geocode split")

    def __add__(self, other: "PipelineStats") -> "PipelineStats":
        return PipelineStats(
            *(getattr(self, f) + getattr(other, f) for f in self.__dataclass_fields__)
        )

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_stages(cls, stage_counts: dict[Stage, int]) -> "PipelineStats":
        negative = stage_counts.get(Stage.CLASSIFIED_NEGATIVE, 0)
        failed = stage_counts.get(Stage.TAG_FAILED, 0)
        located = stage_counts.get(Stage.LOCATED, 0)
        unlocated = stage_counts.get(Stage.UNLOCATED, 0)
        filtered = stage_counts.get(Stage.FILTERED_OUT_OF_SCOPE, 0)
        tagged = located + unlocated + filtered
        return cls(
            ingested=negative + failed + tagged,
            classified_negative=negative,
            tagged=tagged,
            tag_failed=failed,
            geocode_attempted=tagged,
            located=located,
            unlocated=unlocated,
            filtered=filtered,
        )


@dataclass
class TriagePipeline:
    vectorizer: TfIdfVectorizer
    classifier: classify.LinearModel
    tagger: nertag.CrfModel
    cities: CityList
    geocoder: Geocoder
    bbox: BoundingBox

    def run(self, tweet: Tweet) -> TriageResult:
        doc = [t.surface for t in tokenize(tweet.text)]
        label, margin = classify.predict(self.classifier, tfidf_transform(self.vectorizer, doc))
        if label == HelpLabel.NOT_CALL_FOR_HELP:
            return TriageResult(
                tweet_id=tweet.id,
                label=label,
                margin=margin,
                spans=(),
                matched_city=None,
                normalized_address=None,
                outcome=None,
                stage=Stage.CLASSIFIED_NEGATIVE,
            )
        spans = tuple(nertag.tag_tweet(self.tagger, tweet.text))
        city_spans = [s for s in spans if s.tag == EntityTag.CITY]
        addr_spans = [s for s in spans if s.tag == EntityTag.ADDR]
        if not city_spans and not addr_spans:
            return TriageResult(
                tweet_id=tweet.id,
                label=label,
                margin=margin,
                spans=spans,
                matched_city=None,
                normalized_address=None,
                outcome=None,
                stage=Stage.TAG_FAILED,
            )
        # First CITY span in tweet order feeds the fuzzy match.
        matched = match_city(city_spans[0].surface, self.cities) if city_spans else None
        if addr_spans or matched:
            address = normalize_address(addr_spans, matched)
            outcome = self.geocoder.geocode(address)
        else:
            # A CITY span that matched nothing leaves no address to resolve.
            address = None
            outcome = GeocodeOutcome.not_found()
        stage = Stage.UNLOCATED
        if outcome.kind == OutcomeKind.LOCATED:
            assert outcome.point is not None
            if within_bbox(outcome.point, self.bbox):
                stage = Stage.LOCATED
            else:
                outcome = GeocodeOutcome.out_of_scope(outcome.point)
                stage = Stage.FILTERED_OUT_OF_SCOPE
        return TriageResult(
            tweet_id=tweet.id,
            label=label,
            margin=margin,
            spans=spans,
            matched_city=matched,
            normalized_address=address,
            outcome=outcome,
            stage=stage,
        )
