"""Address post-processing and geocoding.

Fuzzy city matching by Damerau-Levenshtein distance (optimal string
alignment variant), address normalization, a pluggable geocoding provider
(HTTP or deterministic mock) with caching and rate limiting, and the
out-of-scope coordinate filter.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, Sequence

import httpx

from tweetriage.domain import EntitySpan
from tweetriage.textfeat import turkish_fold, turkish_upper_first


def damerau_levenshtein(a: str, b: str) -> int:
    """Edit distance with adjacent transpositions, OSA variant (each
    substring edited at most once, so e.g. ("ca", "abc") -> 3)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2 = [0] * (lb + 1)
    prev1 = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev1[j] + 1, cur[j - 1] + 1, prev1[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                cur[j] = min(cur[j], prev2[j - 2] + 1)
        prev2, prev1 = prev1, cur
    return prev1[lb]


@dataclass(frozen=True)
class CityList:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.names:
            raise ValueError("city list must be non-empty")
        folded = [turkish_fold(n) for n in self.names]
        if len(set(folded)) != len(folded):
            raise ValueError("city list contains case-fold duplicates")

    @classmethod
    def from_file(cls, path: str | Path) -> "CityList":
        names = [
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(tuple(names))


# Provinces of the 2023 earthquake zone; order matters for tie-breaking.
DEFAULT_CITIES = CityList(
    (
        "Adana", "Adıyaman", "Diyarbakır", "Elazığ", "Gaziantep", "Hatay",
        "Kahramanmaraş", "Kilis", "Malatya", "Osmaniye", "Şanlıurfa",
    )
)


def match_city(raw: str, cities: CityList) -> Optional[str]:
    """Closest city by case-folded distance, accepted only within
    max(1, ceil(len(raw)/4)); ties break by list order."""
    if not raw:
        raise ValueError("raw city text must be non-empty")
    folded = turkish_fold(raw)
    best_name: Optional[str] = None
    best_dist = -1
    for name in cities.names:
        dist = damerau_levenshtein(folded, turkish_fold(name))
        if best_name is None or dist < best_dist:
            best_name, best_dist = name, dist
    threshold = max(1, math.ceil(len(raw) / 4))
    return best_name if best_dist <= threshold else None


_KEEP = {".", ",", "-", " "}


def normalize_address(addr_spans: Sequence[EntitySpan], city: Optional[str]) -> str:
    """Join ADDR surfaces in tweet order, append the city, drop characters
    other than alphanumerics/dot/comma/hyphen (replaced by spaces so numbers
    like 12/3 do not merge), and title-case each word Turkish-style."""
    parts = [span.surface for span in sorted(addr_spans, key=lambda s: s.start)]
    if city:
        parts.append(city)
    if not parts:
        raise ValueError("need at least one ADDR span or a city")
    joined = " ".join(parts)
    cleaned = "".join(ch if ch.isalnum() or ch in _KEEP else " " for ch in joined)
    words = cleaned.split()
    return " ".join(turkish_upper_first(turkish_fold(w)) for w in words)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("coordinates must be finite")
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range: ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class BoundingBox:
    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    def __post_init__(self) -> None:
        if not (self.min_lat < self.max_lat and self.min_lon < self.max_lon):
            raise ValueError("bounding box must have min < max on both axes")

    @classmethod
    def parse(cls, value: str) -> "BoundingBox":
        parts = [float(p) for p in value.split(",")]
        if len(parts) != 4:
            raise ValueError("expected min_lat,max_lat,min_lon,max_lon")
        return cls(*parts)


# Southern Turkey / northern Syria earthquake zone.
DEFAULT_BBOX = BoundingBox(35.5, 39.5, 35.0, 41.5)


def within_bbox(point: GeoPoint, box: BoundingBox) -> bool:
    """Inclusive containment on both axes."""
    return (
        box.min_lat <= point.lat <= box.max_lat
        and box.min_lon <= point.lon <= box.max_lon
    )


class OutcomeKind(Enum):
    LOCATED = "located"
    NOT_FOUND = "not_found"
    OUT_OF_SCOPE = "out_of_scope"
    PROVIDER_ERROR = "provider_error"


@dataclass(frozen=True)
class GeocodeOutcome:
    kind: OutcomeKind
    point: Optional[GeoPoint] = None
    message: Optional[str] = None

    @classmethod
    def located(cls, point: GeoPoint) -> "GeocodeOutcome":
        return cls(OutcomeKind.LOCATED, point=point)

    @classmethod
    def not_found(cls) -> "GeocodeOutcome":
        return cls(OutcomeKind.NOT_FOUND)

    @classmethod
    def out_of_scope(cls, point: GeoPoint) -> "GeocodeOutcome":
        return cls(OutcomeKind.OUT_OF_SCOPE, point=point)

    @classmethod
    def provider_error(cls, message: str) -> "GeocodeOutcome":
        return cls(OutcomeKind.PROVIDER_ERROR, message=message)


class ProviderError(RuntimeError):
    """Transport or payload failure inside a geocoding provider."""


class GeocodingProvider(Protocol):
    def lookup(self, address: str) -> list[GeoPoint]:
        """Candidate points for an address, best first; raises ProviderError."""
        ...


class MockGeocodingProvider:
    """Deterministic table lookup: the whole folded address, else any word
    scanned from the end (so 'Atatürk Cad. No 12 Hatay' hits 'Hatay')."""

    def __init__(self, table: dict[str, GeoPoint]):
        self._table = {turkish_fold(k): v for k, v in table.items()}
        self.calls = 0

    def lookup(self, address: str) -> list[GeoPoint]:
        self.calls += 1
        folded = turkish_fold(address)
        hit = self._table.get(folded)
        if hit is not None:
            return [hit]
        for word in reversed(folded.split()):
            hit = self._table.get(word)
            if hit is not None:
                return [hit]
        return []


# Approximate province centers, for the mock provider and demos.
CITY_POINTS = {
    "Adana": GeoPoint(37.00, 35.32),
    "Adıyaman": GeoPoint(37.76, 38.28),
    "Diyarbakır": GeoPoint(37.91, 40.24),
    "Elazığ": GeoPoint(38.68, 39.22),
    "Gaziantep": GeoPoint(37.07, 37.38),
    "Hatay": GeoPoint(36.20, 36.16),
    "Kahramanmaraş": GeoPoint(37.58, 36.93),
    "Kilis": GeoPoint(36.72, 37.12),
    "Malatya": GeoPoint(38.35, 38.31),
    "Osmaniye": GeoPoint(37.07, 36.25),
    "Şanlıurfa": GeoPoint(37.16, 38.79),
}


def default_mock_provider() -> MockGeocodingProvider:
    return MockGeocodingProvider(dict(CITY_POINTS))


def _dig(obj: object, dotted: str) -> object:
    for key in dotted.split("."):
        if not isinstance(obj, dict) or key not in obj:
            raise ProviderError(f"response missing field {dotted!r}")
        obj = obj[key]
    return obj


@dataclass(frozen=True)
class HttpProviderConfig:
    url: str
    api_key: str = ""
    address_param: str = "address"
    key_param: str = "key"
    results_path: str = "results"
    lat_path: str = "geometry.location.lat"
    lon_path: str = "geometry.location.lng"
    timeout_s: float = 10.0


class HttpGeocodingProvider:
    """GET-based provider compatible with common commercial geocoding APIs."""

    def __init__(self, config: HttpProviderConfig, client: Optional[httpx.Client] = None):
        self._config = config
        self._client = client or httpx.Client(timeout=config.timeout_s)

    def lookup(self, address: str) -> list[GeoPoint]:
        cfg = self._config
        params = {cfg.address_param: address}
        if cfg.api_key:
            params[cfg.key_param] = cfg.api_key
        try:
            response = self._client.get(cfg.url, params=params)
            response.raise_for_status()
            payload = response.json()
        except (httpx.HTTPError, json.JSONDecodeError, ValueError) as exc:
            raise ProviderError(str(exc)) from exc
        candidates = _dig(payload, cfg.results_path) if cfg.results_path else payload
        if not isinstance(candidates, list):
            raise ProviderError(f"candidate field {cfg.results_path!r} is not a list")
        points = []
        for cand in candidates:
            try:
                lat = float(_dig(cand, cfg.lat_path))  # type: ignore[arg-type]
                lon = float(_dig(cand, cfg.lon_path))  # type: ignore[arg-type]
                points.append(GeoPoint(lat, lon))
            except (TypeError, ValueError) as exc:
                raise ProviderError(f"malformed candidate: {exc}") from exc
        return points


class _TokenBucket:
    def __init__(self, rate_per_s: float):
        self._rate = rate_per_s
        self._capacity = max(1.0, rate_per_s)
        self._tokens = self._capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            time.sleep(wait)


class GeocodeCache(Protocol):
    def get(self, address: str) -> Optional[GeocodeOutcome]: ...
    def put(self, address: str, outcome: GeocodeOutcome) -> None: ...


class MemoryGeocodeCache:
    def __init__(self) -> None:
        self._data: dict[str, GeocodeOutcome] = {}
        self._lock = threading.Lock()

    def get(self, address: str) -> Optional[GeocodeOutcome]:
        with self._lock:
            return self._data.get(address)

    def put(self, address: str, outcome: GeocodeOutcome) -> None:
        with self._lock:
            self._data[address] = outcome


class Geocoder:
    """Provider wrapper: exact-address cache, bounded in-flight requests,
    token-bucket rate limit. Provider errors are returned, never raised."""

    def __init__(
        self,
        provider: GeocodingProvider,
        cache: Optional[GeocodeCache] = None,
        max_in_flight: int = 4,
        rate_per_s: float = 10.0,
    ):
        self._provider = provider
        self._cache = cache if cache is not None else MemoryGeocodeCache()
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._bucket = _TokenBucket(rate_per_s)
        self._key_locks: dict[str, threading.Lock] = {}
        self._key_locks_guard = threading.Lock()

    def _lock_for(self, address: str) -> threading.Lock:
        with self._key_locks_guard:
            lock = self._key_locks.get(address)
            if lock is None:
                lock = self._key_locks[address] = threading.Lock()
            return lock

    def geocode(self, address: str) -> GeocodeOutcome:
        if not address:
            raise ValueError("address must be non-empty")
        cached = self._cache.get(address)
        if cached is not None:
            return cached
        with self._lock_for(address):
            cached = self._cache.get(address)
            if cached is not None:
                return cached
            self._bucket.acquire()
            with self._slots:
                try:
                    candidates = self._provider.lookup(address)
                except ProviderError as exc:
                    return GeocodeOutcome.provider_error(str(exc))
            outcome = (
                GeocodeOutcome.located(candidates[0])
                if candidates
                else GeocodeOutcome.not_found()
            )
            self._cache.put(address, outcome)
            return outcome
