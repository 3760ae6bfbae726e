"""Calling a remote extraction service with retries and a response cache.

A fake in-process transport stands in for the real endpoint: it fails once
with HTTP 503, then answers. The second call is served from the cache.
"""

import tempfile

import httpx

from medeval.corpus_io import CharSpan
from medeval.extractors import RawEntity
from medeval.extractors.remote import RemotePolicy, ResponseCache, encode_entities, extract_remote

calls = []


def fake_service(request: httpx.Request) -> httpx.Response:
    calls.append(request)
    if len(calls) == 1:
        return httpx.Response(503)
    body = encode_entities([RawEntity("MEDICATION", "GENERIC_NAME", "lasix", CharSpan(5, 10),
                                      score=0.97)])
    return httpx.Response(200, content=body)


client = httpx.Client(transport=httpx.MockTransport(fake_service))
policy = RemotePolicy(retries=2, backoff=0.01)
with tempfile.TemporaryDirectory() as cache_dir:
    cache = ResponseCache(cache_dir)
    first = extract_remote("Take lasix daily", "https://service.invalid/detect", policy, cache, client)
    print(f"first call: {len(calls)} HTTP attempts ->", [(e.text, e.score) for e in first])
    again = extract_remote("Take lasix daily", "https://service.invalid/detect", policy, cache, client)
    print(f"second call: still {len(calls)} HTTP attempts (cache hit) ->", [e.text for e in again])
