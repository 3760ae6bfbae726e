"""
Client for a remote entity-extraction service.

Request: ``POST {"Text": ...}``. Response: ``{"Entities": [...]}`` where each
entity carries ``BeginOffset``/``EndOffset`` (half-open, characters), ``Score``,
``Text``, ``Category``, ``Type``, ``Traits`` and nested ``Attributes``.
Responses are cached on disk, keyed by a SHA-256 of the request text.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from medeval.corpus_io import CharSpan
from medeval.errors import DecodeError, PreconditionError, ServiceError
from medeval.extractors.types import RawEntity

log = logging.getLogger(__name__)

MAX_TEXT_CHARS = 20000
CACHE_SCHEMA = b"medeval-cache-v1\n"
API_KEY_ENV = "MEDEVAL_API_KEY"
CACHE_DIR_ENV = "MEDEVAL_CACHE_DIR"
RETRY_STATUSES = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class RemotePolicy:
    # ~11 s was observed for a 12k-character note; 60 s covers the 20k limit with headroom
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    max_in_flight: int = 4


class ResponseCache:
    """One file per text hash: a schema tag line followed by the raw response bytes."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self._lock = threading.Lock()

    @staticmethod
    def key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def path(self, text: str) -> Path:
        return self.directory / f"{self.key(text)}.json"

    def get(self, text: str) -> bytes | None:
        p = self.path(text)
        try:
            data = p.read_bytes()
        except FileNotFoundError:
            return None
        if not data.startswith(CACHE_SCHEMA):
            log.warning("ignoring cache entry %s with unknown schema", p.name)
            return None
        return data[len(CACHE_SCHEMA):]

    def put(self, text: str, payload: bytes):
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "wb") as fh:
                fh.write(CACHE_SCHEMA + payload)
            os.replace(tmp, self.path(text))


def _entity(obj: dict, parent_category: str = "") -> RawEntity:
    begin, end = int(obj["BeginOffset"]), int(obj["EndOffset"])
    category = obj.get("Category") or parent_category
    return RawEntity(
        category=category,
        type_label=str(obj["Type"]),
        text=str(obj["Text"]),
        span=CharSpan(begin, end),
        score=float(obj.get("Score", 1.0)),
        traits=tuple(str(t["Name"]) for t in obj.get("Traits") or ()),
        attributes=tuple(_entity(a, category) for a in obj.get("Attributes") or ()),
    )


def decode_response(payload: bytes | str) -> list[RawEntity]:
    try:
        doc = json.loads(payload)
        return [_entity(e) for e in doc["Entities"]]
    except (ValueError, KeyError, TypeError) as exc:
        excerpt = payload[:200] if isinstance(payload, str) else payload[:200].decode("utf-8", "replace")
        raise DecodeError(f"malformed service response ({exc!r}): {excerpt!r}") from exc


def encode_entities(entities) -> bytes:
    """Serialize entities in the service response shape (used by test servers and fixtures)."""
    def enc(i, e):
        return {"Id": i, "BeginOffset": e.span.begin, "EndOffset": e.span.end,
                "Score": e.score, "Text": e.text, "Category": e.category,
                "Type": e.type_label, "Traits": [{"Name": t, "Score": 1.0} for t in e.traits],
                "Attributes": [enc(j, a) for j, a in enumerate(e.attributes)]}
    return json.dumps({"Entities": [enc(i, e) for i, e in enumerate(entities)]}).encode("utf-8")


def _post(client: httpx.Client, endpoint: str, text: str, policy: RemotePolicy) -> bytes:
    headers = {}
    if os.environ.get(API_KEY_ENV):
        headers["Authorization"] = f"Bearer {os.environ[API_KEY_ENV]}"
    attempts = 0
    last = None
    while attempts <= policy.retries:
        attempts += 1
        try:
            resp = client.post(endpoint, json={"Text": text}, headers=headers,
                               timeout=policy.timeout)
            if resp.status_code in RETRY_STATUSES:
                last = f"HTTP {resp.status_code}"
            elif resp.status_code >= 400:
                raise ServiceError(f"{endpoint} returned HTTP {resp.status_code}", attempts)
            else:
                return resp.content
        except httpx.TransportError as exc:
            last = f"{type(exc).__name__}: {exc}"
        if attempts <= policy.retries:
            time.sleep(policy.backoff * 2 ** (attempts - 1))
    raise ServiceError(f"{endpoint} failed: {last}", attempts)


def extract_remote(text: str, endpoint: str, policy: RemotePolicy | None = None,
                   cache: ResponseCache | None = None,
                   client: httpx.Client | None = None) -> list[RawEntity]:
    """Send one block of text to the service and decode its entities.

    Texts longer than the service limit are refused; callers segment first.
    """
    if len(text) > MAX_TEXT_CHARS:
        raise PreconditionError(
            f"text has {len(text)} characters; the service accepts at most {MAX_TEXT_CHARS}")
    policy = policy or RemotePolicy()
    if cache is not None:
        hit = cache.get(text)
        if hit is not None:
            return decode_response(hit)
    own = client is None
    client = client or httpx.Client()
    try:
        payload = _post(client, endpoint, text, policy)
    finally:
        if own:
            client.close()
    entities = decode_response(payload)
    if cache is not None:
        cache.put(text, payload)
    return entities
