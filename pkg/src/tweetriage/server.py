"""REST service: ingest endpoint, result queries, annotations, funnel stats.

All payloads are JSON under /api/v1; the static UI bundle (when present) is
served at /. Models are loaded once at startup and shared read-only across
requests; the store serializes writes.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from tweetriage import classify, nertag, wire
from tweetriage.domain import (
    AnnotationRecord,
    HelpLabel,
    SpanValidationError,
    validate_spans,
)
from tweetriage.geoloc import (
    DEFAULT_BBOX,
    DEFAULT_CITIES,
    BoundingBox,
    CityList,
    Geocoder,
    HttpGeocodingProvider,
    HttpProviderConfig,
    default_mock_provider,
)
from tweetriage.pipeline import PipelineStats, Stage, TriagePipeline
from tweetriage.store import SqliteGeocodeCache, Store
from tweetriage.textfeat import TfIdfVectorizer
from tweetriage.wire import span_from_dict

logger = logging.getLogger("tweetriage.server")

DEFAULT_MAX_BATCH = 5000
DEFAULT_TILE_URL = "https://tile.openstreetmap.org/{z}/{x}/{y}.png"


@dataclass
class ServerConfig:
    store_path: str = "triage.db"
    vectorizer_path: str = "models/vectorizer.json"
    classifier_path: str = "models/classifier.json"
    crf_path: str = "models/crf.json"
    cities_path: Optional[str] = None
    bbox: BoundingBox = field(default_factory=lambda: DEFAULT_BBOX)
    max_batch: int = DEFAULT_MAX_BATCH
    geocoder_url: Optional[str] = None  # unset -> deterministic mock provider
    geocoder_key: str = ""
    geocoder_rps: float = 10.0
    ui_dir: Optional[str] = None
    tile_url: str = DEFAULT_TILE_URL
    poll_interval_s: float = 5.0
    port: int = 8000

    @classmethod
    def from_env(cls, env: Optional[dict] = None) -> "ServerConfig":
        env = dict(os.environ if env is None else env)
        cfg = cls()
        cfg.port = int(env.get("SERVER_PORT", cfg.port))
        cfg.store_path = env.get("STORE_PATH", cfg.store_path)
        if "BBOX" in env:
            cfg.bbox = BoundingBox.parse(env["BBOX"])
        models_dir = env.get("MODELS_DIR")
        if models_dir:
            cfg.vectorizer_path = str(Path(models_dir) / "vectorizer.json")
            cfg.classifier_path = str(Path(models_dir) / "classifier.json")
            cfg.crf_path = str(Path(models_dir) / "crf.json")
        cfg.vectorizer_path = env.get("VECTORIZER_PATH", cfg.vectorizer_path)
        cfg.classifier_path = env.get("CLASSIFIER_PATH", cfg.classifier_path)
        cfg.crf_path = env.get("CRF_PATH", cfg.crf_path)
        cfg.cities_path = env.get("CITIES_PATH", cfg.cities_path)
        cfg.geocoder_url = env.get("GEOCODER_URL", cfg.geocoder_url)
        cfg.geocoder_key = env.get("GEOCODER_KEY", cfg.geocoder_key)
        cfg.geocoder_rps = float(env.get("GEOCODER_RPS", cfg.geocoder_rps))
        cfg.ui_dir = env.get("UI_DIR", cfg.ui_dir)
        cfg.tile_url = env.get("TILE_URL", cfg.tile_url)
        return cfg


class ModelLoadError(RuntimeError):
    pass


def _read_artifact(path: str, kind: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelLoadError(f"cannot load {kind} from {path}: {exc}") from exc


def build_pipeline(config: ServerConfig, store: Store) -> TriagePipeline:
    vectorizer = TfIdfVectorizer.from_json(
        _read_artifact(config.vectorizer_path, "vectorizer")
    )
    classifier = classify.LinearModel.from_json(
        _read_artifact(config.classifier_path, "classifier")
    )
    tagger = nertag.CrfModel.from_json(_read_artifact(config.crf_path, "CRF model"))
    cities = (
        CityList.from_file(config.cities_path) if config.cities_path else DEFAULT_CITIES
    )
    if config.geocoder_url:
        provider = HttpGeocodingProvider(
            HttpProviderConfig(url=config.geocoder_url, api_key=config.geocoder_key)
        )
    else:
        provider = default_mock_provider()
    geocoder = Geocoder(
        provider, cache=SqliteGeocodeCache(store), rate_per_s=config.geocoder_rps
    )
    return TriagePipeline(
        vectorizer=vectorizer,
        classifier=classifier,
        tagger=tagger,
        cities=cities,
        geocoder=geocoder,
        bbox=config.bbox,
    )


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(
    config: ServerConfig,
    store: Optional[Store] = None,
    pipeline: Optional[TriagePipeline] = None,
) -> FastAPI:
    store = store or Store(config.store_path)
    pipeline = pipeline or build_pipeline(config, store)
    app = FastAPI(title="tweetriage", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.pipeline = pipeline
    app.state.config = config

    @app.post("/api/v1/tweets")
    async def ingest(request: Request):  # noqa: ANN202 - FastAPI route
        try:
            batch = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            return _error(400, "body must be a JSON array of tweet objects")
        if not isinstance(batch, list):
            return _error(400, "body must be a JSON array of tweet objects")
        if len(batch) > config.max_batch:
            return _error(413, f"batch exceeds maximum size {config.max_batch}")
        accepted = duplicates = rejected = 0
        stage_counts: dict[Stage, int] = {}
        for obj in batch:
            try:
                tweet = wire.tweet_from_dict(obj)
            except (KeyError, TypeError, ValueError):
                rejected += 1
                continue
            if store.has_tweet(tweet.id):
                duplicates += 1
                continue
            try:
                result = pipeline.run(tweet)
                store.save_triage(tweet, result)
            except Exception:  # one bad tweet must not sink the batch
                logger.exception("pipeline failure for tweet %s", tweet.id)
                rejected += 1
                continue
            accepted += 1
            stage_counts[result.stage] = stage_counts.get(result.stage, 0) + 1
        delta = PipelineStats.from_stages(stage_counts)
        logger.info(
            "ingest: accepted=%d duplicates=%d rejected=%d delta=%s",
            accepted, duplicates, rejected, delta.as_dict(),
        )
        return {
            "accepted": accepted,
            "duplicates": duplicates,
            "rejected": rejected,
            "stats": delta.as_dict(),
        }

    @app.get("/api/v1/results")
    async def results(request: Request):  # noqa: ANN202
        params = request.query_params
        stage: Optional[Stage] = None
        if params.get("stage"):
            try:
                stage = Stage(params["stage"])
            except ValueError:
                return _error(400, f"unknown stage {params['stage']!r}")
        try:
            limit = int(params.get("limit", 100))
            offset = int(params.get("offset", 0))
        except ValueError:
            return _error(400, "limit/offset must be integers")
        if limit < 1 or offset < 0:
            return _error(400, "limit must be >= 1 and offset >= 0")
        total, items = store.query_results(
            name=params.get("name") or None,
            status=params.get("status") or None,
            stage=stage,
            limit=min(limit, 1000),
            offset=offset,
        )
        return {"total": total, "items": items}

    @app.get("/api/v1/filters")
    async def filters():  # noqa: ANN202
        names, statuses = store.list_filters()
        return {"names": names, "statuses": statuses}

    @app.get("/api/v1/tweets/{tweet_id}")
    async def tweet_detail(tweet_id: str):  # noqa: ANN202
        tweet = store.get_tweet(tweet_id)
        if tweet is None:
            return _error(404, f"unknown tweet {tweet_id!r}")
        return {
            "tweet": wire.tweet_to_dict(tweet),
            "result": store.get_result(tweet_id),
            "annotations": store.annotations_for(tweet_id),
        }

    @app.post("/api/v1/annotations")
    async def save_annotation(request: Request):  # noqa: ANN202
        try:
            obj = json.loads(await request.body())
            tweet_id = str(obj["tweet_id"])
            label = HelpLabel(obj["label"])
            annotator = str(obj["annotator"])
            spans = tuple(span_from_dict(s) for s in obj.get("spans", []))
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError):
            return _error(400, "malformed annotation body")
        tweet = store.get_tweet(tweet_id)
        if tweet is None:
            return _error(404, f"unknown tweet {tweet_id!r}")
        try:
            validate_spans(tweet.text, spans)
            record = AnnotationRecord(
                tweet_id=tweet_id,
                label=label,
                spans=spans,
                annotator=annotator,
                created_at=datetime.now(timezone.utc),
            )
        except (SpanValidationError, ValueError) as exc:
            return _error(422, str(exc))
        store.upsert_annotation(record)
        return wire.annotation_to_dict(record)

    @app.get("/api/v1/stats")
    async def stats():  # noqa: ANN202
        return store.stats().as_dict()

    @app.get("/config.json")
    async def ui_config():  # noqa: ANN202
        return {
            "tile_url": config.tile_url,
            "poll_interval_s": config.poll_interval_s,
            "bbox": {
                "min_lat": config.bbox.min_lat,
                "max_lat": config.bbox.max_lat,
                "min_lon": config.bbox.min_lon,
                "max_lon": config.bbox.max_lon,
            },
        }

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
