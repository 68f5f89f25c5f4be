"""RIPE Atlas measurement-results API client.

Transient failures (transport errors, 5xx, 429) are retried with
exponential backoff: base 1 s, factor 2, at most 5 attempts per request.
The API key, when needed, comes from the ATLAS_API_KEY environment
variable or the constructor argument.
"""

from __future__ import annotations

import os
import time

import httpx

from ..errors import AuthRequired, NetworkError, RateLimited

ATLAS_BASE_URL = "https://atlas.ripe.net/api/v2"
BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 5


class AtlasClient:
    def __init__(
        self,
        api_key: str | None = None,
        base_url: str = ATLAS_BASE_URL,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
        timeout: float = 30.0,
    ):
        self._api_key = api_key if api_key is not None else os.environ.get("ATLAS_API_KEY")
        self._base_url = base_url.rstrip("/")
        self._client = httpx.Client(transport=transport, timeout=timeout)
        self._sleep = sleep

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _get(self, url: str, params: dict | None = None) -> httpx.Response:
        last_error: Exception | None = None
        saw_rate_limit = False
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                self._sleep(BACKOFF_BASE_S * BACKOFF_FACTOR ** (attempt - 1))
            try:
                response = self._client.get(url, params=params)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code in (401, 403):
                raise AuthRequired(f"{url}: HTTP {response.status_code}")
            if response.status_code == 429:
                saw_rate_limit = True
                last_error = None
                continue
            if response.status_code >= 500:
                last_error = RuntimeError(f"HTTP {response.status_code}")
                continue
            response.raise_for_status()
            return response
        if saw_rate_limit:
            raise RateLimited(f"{url}: still rate limited after {MAX_ATTEMPTS} attempts")
        raise NetworkError(f"{url}: {last_error}")

    def fetch_measurements(self, msm_id: int, start: int, stop: int):
        """Yield raw result documents for one measurement, paging as needed.

        The results endpoint may answer with a plain JSON array or with a
        paginated {"results": [...], "next": url} envelope; both are handled.
        """
        if stop <= start:
            raise ValueError(f"stop ({stop}) must be greater than start ({start})")
        params = {"start": start, "stop": stop, "format": "json"}
        if self._api_key:
            params["key"] = self._api_key
        url = f"{self._base_url}/measurements/{msm_id}/results/"
        while url:
            body = self._get(url, params=params).json()
            params = None  # the "next" URL already carries the query
            if isinstance(body, list):
                yield from body
                return
            yield from body.get("results", [])
            url = body.get("next")
