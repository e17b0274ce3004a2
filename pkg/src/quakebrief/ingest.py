"""USGS feed ingestion, document collection, and the append-only JSONL store."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import requests

logger = logging.getLogger(__name__)

ALERT_LEVELS = ("green", "yellow", "orange", "red", "none")
SIGNIFICANT_ALERTS = frozenset({"yellow", "orange", "red"})
MIN_MAGNITUDE = 5.0
DAY_MS = 86_400_000

DEFAULT_FEED_URL = (
    "https://earthquake.usgs.gov/earthquakes/feed/v1.0/summary/significant_month.geojson"
)


class FeedParseError(ValueError):
    pass


class StoreError(ValueError):
    pass


class SourceError(RuntimeError):
    """Retryable source I/O failure."""

    def __init__(self, source_name: str, cause: Exception):
        super().__init__(f"source {source_name!r} failed: {cause}")
        self.source_name = source_name


@dataclass(frozen=True)
class HazardEvent:
    id: str
    magnitude: float
    alert: str  # one of ALERT_LEVELS
    occurred_at: int  # milliseconds since epoch
    longitude: float
    latitude: float
    depth_km: float
    place: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "magnitude": self.magnitude,
            "alert": self.alert,
            "occurred_at": self.occurred_at,
            "epicenter": [self.longitude, self.latitude, self.depth_km],
            "place": self.place,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HazardEvent":
        lon, lat, depth = obj["epicenter"]
        return cls(
            id=obj["id"],
            magnitude=obj["magnitude"],
            alert=obj["alert"],
            occurred_at=obj["occurred_at"],
            longitude=lon,
            latitude=lat,
            depth_km=depth,
            place=obj["place"],
        )


@dataclass(frozen=True)
class Document:
    id: str
    event_id: str
    source: str  # news | social | fixture
    url: str | None
    published_at: int  # milliseconds since epoch
    language: str
    title: str | None
    body: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "event_id": self.event_id,
            "source": self.source,
            "url": self.url,
            "published_at": self.published_at,
            "language": self.language,
            "title": self.title,
            "body": self.body,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Document":
        return cls(**obj)


@dataclass(frozen=True)
class CollectionWindow:
    news_days: int = 7
    social_days: int = 90

    def __post_init__(self):
        if self.news_days <= 0 or self.social_days <= 0:
            raise ValueError("collection window days must be strictly positive")

    def days_for(self, source_kind: str) -> int:
        return self.social_days if source_kind == "social" else self.news_days


@dataclass
class FeedParseResult:
    events: list[HazardEvent]
    errors: list[str] = field(default_factory=list)


def fetch_usgs_events(feed_payload: bytes) -> FeedParseResult:
    """Parse a GeoJSON feed payload into events.

    Malformed JSON raises FeedParseError with the byte offset; features
    missing required properties are reported in the result's error list
    while the remaining features still parse.
    """
    try:
        data = json.loads(feed_payload.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise FeedParseError(f"feed is not valid UTF-8 at byte {exc.start}") from exc
    except json.JSONDecodeError as exc:
        raise FeedParseError(f"malformed feed JSON at byte {exc.pos}: {exc.msg}") from exc
    features = data.get("features") if isinstance(data, dict) else None
    if not isinstance(features, list):
        raise FeedParseError("feed JSON has no top-level 'features' array")

    result = FeedParseResult(events=[])
    for pos, feature in enumerate(features):
        try:
            event = _parse_feature(feature)
        except (KeyError, TypeError, ValueError) as exc:
            ident = feature.get("id", f"#{pos}") if isinstance(feature, dict) else f"#{pos}"
            result.errors.append(f"feature {ident}: {exc}")
            continue
        result.events.append(event)
    return result


def _parse_feature(feature: dict) -> HazardEvent:
    event_id = feature.get("id")
    if not event_id:
        raise ValueError("missing feature id")
    props = feature.get("properties")
    if not isinstance(props, dict):
        raise ValueError("missing properties")
    for key in ("mag", "time", "place"):
        if props.get(key) is None:
            raise ValueError(f"missing required property {key!r}")
    magnitude = float(props["mag"])
    if not (magnitude == magnitude and abs(magnitude) != float("inf")):
        raise ValueError(f"non-finite magnitude {props['mag']!r}")
    alert = props.get("alert")
    alert = "none" if alert is None else str(alert)
    if alert not in ALERT_LEVELS:
        raise ValueError(f"unknown alert level {alert!r}")
    geometry = feature.get("geometry") or {}
    coords = geometry.get("coordinates")
    if not isinstance(coords, (list, tuple)) or len(coords) != 3:
        raise ValueError("geometry.coordinates must be [lon, lat, depth]")
    return HazardEvent(
        id=str(event_id),
        magnitude=magnitude,
        alert=alert,
        occurred_at=int(props["time"]),
        longitude=float(coords[0]),
        latitude=float(coords[1]),
        depth_km=float(coords[2]),
        place=str(props["place"]),
    )


def filter_events(events: list[HazardEvent]) -> list[HazardEvent]:
    """Keep events with magnitude >= 5.0 and a yellow/orange/red PAGER alert."""
    return [
        e for e in events if e.magnitude >= MIN_MAGNITUDE and e.alert in SIGNIFICANT_ALERTS
    ]


def fetch_feed(feed_url: str | None = None, feed_file: str | Path | None = None) -> bytes:
    """Read the feed payload from a local file override or over HTTPS."""
    if feed_file is not None:
        return Path(feed_file).read_bytes()
    url = feed_url or DEFAULT_FEED_URL
    response = requests.get(url, timeout=30)
    response.raise_for_status()
    return response.content


class FixtureSource:
    """File-backed document source: a directory of JSON files, each holding
    one document object (or an array of them) with keys url, published_at,
    language, title, body. Keyword arguments are accepted for interface
    parity but fixtures are returned as-is."""

    def __init__(self, directory: str | Path, kind: str = "fixture"):
        if kind not in ("news", "social", "fixture"):
            raise ValueError(f"unknown source kind {kind!r}")
        self.directory = Path(directory)
        self.kind = kind
        self.name = f"{kind}:{self.directory}"

    def query(self, keywords, since, until, language=None) -> list[dict]:
        try:
            paths = sorted(self.directory.glob("*.json"))
            raw = []
            for path in paths:
                loaded = json.loads(path.read_text(encoding="utf-8"))
                raw.extend(loaded if isinstance(loaded, list) else [loaded])
            return raw
        except (OSError, json.JSONDecodeError) as exc:
            raise SourceError(self.name, exc) from exc


def _document_id(event_id: str, url: str | None, body: str) -> str:
    key = url if url else body
    return hashlib.sha1(f"{event_id}|{key}".encode("utf-8")).hexdigest()[:12]


def collect_documents(
    event: HazardEvent,
    source: FixtureSource,
    window: CollectionWindow | None = None,
) -> list[Document]:
    """Query a source and keep in-window, deduplicated documents.

    The collection window starts at the event time and spans news_days or
    social_days depending on the source kind; documents outside it are
    silently excluded. (event_id, url) pairs are deduplicated; documents
    without a url are never deduplicated.
    """
    window = window or CollectionWindow()
    keywords = ["earthquake"]
    keywords.extend(t for t in event.place.lower().split() if t.isalpha())
    since = event.occurred_at
    until = since + window.days_for(source.kind) * DAY_MS
    raw_docs = source.query(keywords, since, until)

    out: list[Document] = []
    seen_urls: set[tuple[str, str]] = set()
    for raw in raw_docs:
        body = (raw.get("body") or "").strip()
        if not body:
            continue
        published = int(raw["published_at"])
        if not since <= published <= until:
            continue
        url = raw.get("url")
        if url is not None:
            key = (event.id, url)
            if key in seen_urls:
                continue
            seen_urls.add(key)
        out.append(
            Document(
                id=_document_id(event.id, url, body),
                event_id=event.id,
                source=source.kind,
                url=url,
                published_at=published,
                language=raw.get("language", "en"),
                title=raw.get("title"),
                body=body,
            )
        )
    return out


@dataclass
class StoreReceipt:
    written_events: int = 0
    skipped_events: int = 0
    written_documents: int = 0
    skipped_documents: int = 0

    @property
    def written(self) -> int:
        return self.written_events + self.written_documents

    @property
    def skipped(self) -> int:
        return self.skipped_events + self.skipped_documents


def _append_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for line_num, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StoreError(f"{path}: line {line_num}: corrupt JSON ({exc.msg})") from exc
    return rows


def persist(
    store_dir: str | Path,
    events: list[HazardEvent] | None = None,
    documents: list[Document] | None = None,
) -> StoreReceipt:
    """Append events and documents, skipping ids already in the store."""
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)
    receipt = StoreReceipt()

    events_path = store / "events.jsonl"
    existing_ids = set()
    if events_path.exists():
        existing_ids = {row["id"] for row in _read_jsonl(events_path)}
    new_rows = []
    for event in events or []:
        if event.id in existing_ids:
            receipt.skipped_events += 1
            continue
        existing_ids.add(event.id)
        new_rows.append(event.to_json())
    if new_rows:
        _append_jsonl(events_path, new_rows)

    by_event: dict[str, list[Document]] = {}
    for doc in documents or []:
        by_event.setdefault(doc.event_id, []).append(doc)
    for event_id, docs in by_event.items():
        doc_path = store / "documents" / f"{event_id}.jsonl"
        existing_docs = set()
        if doc_path.exists():
            existing_docs = {row["id"] for row in _read_jsonl(doc_path)}
        rows = []
        for doc in docs:
            if doc.id in existing_docs:
                receipt.skipped_documents += 1
                continue
            existing_docs.add(doc.id)
            rows.append(doc.to_json())
        if rows:
            _append_jsonl(doc_path, rows)
        receipt.written_documents += len(rows)
    receipt.written_events = len(new_rows)
    return receipt


def load_events(store_dir: str | Path) -> list[HazardEvent]:
    path = Path(store_dir) / "events.jsonl"
    if not path.exists():
        return []
    return [HazardEvent.from_json(row) for row in _read_jsonl(path)]


def load_documents(store_dir: str | Path, event_id: str) -> list[Document]:
    path = Path(store_dir) / "documents" / f"{event_id}.jsonl"
    if not path.exists():
        return []
    return [Document.from_json(row) for row in _read_jsonl(path)]


def get_event(store_dir: str | Path, event_id: str) -> HazardEvent:
    for event in load_events(store_dir):
        if event.id == event_id:
            return event
    raise StoreError(f"event {event_id!r} not found in store {store_dir}")
