"""Scopus-compatible search client with offline replay.

Live mode pages through the search endpoint with a hard rate limit and
retry-with-backoff; offline mode replays a directory of recorded response
pages. Either way the output is the downstream corpus JSONL contract:
one object per line with id, title, abstract, year, author_keywords,
first_author_country, retracted. The cursor file makes interrupted
fetches resumable, and the API key never touches disk or logs.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

log = logging.getLogger(__name__)

API_KEY_ENV = "TECHPREP_API_KEY"
DEFAULT_PAGE_SIZE = 25


class FetchError(Exception):
    pass


class AuthError(FetchError):
    pass


class QuotaExhausted(FetchError):
    """Raised after the cursor has been persisted; rerun resumes cleanly."""


@dataclass
class FetchJob:
    query: str
    out_path: Path
    cursor_path: Path
    base_url: str = "https://api.example.com/content/search/scopus"
    date_range: str | None = None          # e.g. "2011-2020"
    rate_limit_rps: float = 5.0
    page_size: int = DEFAULT_PAGE_SIZE
    max_retries: int = 5
    offline_dir: Path | None = None
    retracted_field: str = "retracted"     # mapping is API-version dependent
    api_key: str | None = field(default=None, repr=False)

    def resolve_key(self) -> str:
        key = self.api_key or os.environ.get(API_KEY_ENV, "")
        if not key:
            raise AuthError(f"no API key; set {API_KEY_ENV}")
        return key


def build_query(concept_terms: list[tuple[str, list[str]]]) -> str:
    """Documented query grammar: every surface variant becomes a quoted
    TITLE-ABS-KEY clause, OR-joined in config order."""
    clauses = []
    for _canonical, variants in concept_terms:
        for variant in variants:
            clauses.append(f'TITLE-ABS-KEY("{variant}")')
    return " OR ".join(clauses)


def load_concept_terms(path) -> list[tuple[str, list[str]]]:
    terms = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            canonical, _, variants = line.partition("\t")
            terms.append((canonical, [v.strip() for v in variants.split("|") if v.strip()]))
    return terms


class RateLimiter:
    """Never allows more than rps requests per second, including retries."""

    def __init__(self, rps: float, clock=time.monotonic, sleep=time.sleep):
        if rps <= 0:
            raise ValueError("rps must be positive")
        self.interval = 1.0 / rps
        self.clock = clock
        self.sleep = sleep
        self._last: float | None = None

    def wait(self) -> None:
        now = self.clock()
        if self._last is not None:
            remaining = self._last + self.interval - now
            if remaining > 0:
                self.sleep(remaining)
                now = self.clock()
        self._last = now


def record_to_document(entry: dict, retracted_field: str) -> dict | None:
    """Map one search-result entry onto the corpus record schema.

    Returns None (with a warning) on schema drift that loses required
    fields."""
    ident = entry.get("dc:identifier")
    title = entry.get("dc:title")
    cover = entry.get("prism:coverDate", "")
    if not ident or not title or len(cover) < 4 or not cover[:4].isdigit():
        log.warning("skipping record with missing id/title/date: %r", ident)
        return None
    keywords = [k.strip() for k in (entry.get("authkeywords") or "").split("|") if k.strip()]
    country = None
    affiliations = entry.get("affiliation") or []
    if affiliations:
        country = affiliations[0].get("affiliation-country") or None
    return {
        "id": str(ident),
        "title": str(title),
        "abstract": str(entry.get("dc:description") or ""),
        "year": int(cover[:4]),
        "author_keywords": keywords,
        "first_author_country": country,
        "retracted": bool(entry.get(retracted_field, False)),
    }


def _read_cursor(path: Path) -> int:
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            return int(json.load(fh)["next_start"])
    return 0


def _write_cursor(path: Path, next_start: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"next_start": next_start}, fh)
        fh.write("\n")


def _append_records(out_path: Path, records: list[dict]) -> None:
    with open(out_path, "a", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _convert_entries(entries: list[dict], job: FetchJob) -> list[dict]:
    records = []
    for entry in entries:
        rec = record_to_document(entry, job.retracted_field)
        if rec is not None:
            records.append(rec)
    return records


def fetch_offline(job: FetchJob) -> int:
    """Replay recorded pages (page_*.json, lexicographic order) from the
    cursor onward; fully deterministic."""
    pages = sorted(Path(job.offline_dir).glob("page_*.json"))
    start_page = _read_cursor(job.cursor_path)
    total = 0
    for index, page in enumerate(pages):
        if index < start_page:
            continue
        with open(page, encoding="utf-8") as fh:
            payload = json.load(fh)
        entries = payload.get("search-results", {}).get("entry", [])
        records = _convert_entries(entries, job)
        _append_records(job.out_path, records)
        total += len(records)
        _write_cursor(job.cursor_path, index + 1)
    return total


def fetch_live(job: FetchJob, transport: httpx.BaseTransport | None = None,
               limiter: RateLimiter | None = None) -> int:
    key = job.resolve_key()
    limiter = limiter or RateLimiter(job.rate_limit_rps)
    start = _read_cursor(job.cursor_path)
    total = 0
    with httpx.Client(transport=transport, timeout=30.0) as client:
        while True:
            params = {
                "query": job.query,
                "start": str(start),
                "count": str(job.page_size),
            }
            if job.date_range:
                params["date"] = job.date_range
            response = _request_with_backoff(client, job, params, key, limiter)
            payload = response.json()
            results = payload.get("search-results", {})
            entries = results.get("entry", [])
            if not entries:
                break
            records = _convert_entries(entries, job)
            _append_records(job.out_path, records)
            total += len(records)
            start += len(entries)  # server offset counts raw entries
            _write_cursor(job.cursor_path, start)
            declared = int(results.get("opensearch:totalResults", 0))
            if declared and start >= declared:
                break
    return total


def _request_with_backoff(client, job: FetchJob, params, key, limiter) -> httpx.Response:
    backoff = 1.0
    for attempt in range(job.max_retries + 1):
        limiter.wait()
        response = client.get(job.base_url, params=params,
                              headers={"X-ELS-APIKey": key, "Accept": "application/json"})
        if response.status_code in (401, 403):
            raise AuthError(f"authentication failed (HTTP {response.status_code})")
        if response.status_code == 429:
            if response.headers.get("X-Quota-Exceeded") == "true":
                # cursor already points at the next unfetched record
                raise QuotaExhausted(
                    f"quota exhausted; resume later from {job.cursor_path}"
                )
            retry_after = float(response.headers.get("Retry-After", backoff))
            log.warning("rate limited (429); backing off %.1fs", retry_after)
            limiter.sleep(retry_after)
            backoff = min(backoff * 2, 60.0)
            continue
        if response.status_code >= 500:
            log.warning("server error %d; backing off %.1fs", response.status_code, backoff)
            limiter.sleep(backoff)
            backoff = min(backoff * 2, 60.0)
            continue
        response.raise_for_status()
        return response
    raise FetchError(f"giving up after {job.max_retries} retries")


def fetch(job: FetchJob, transport=None, limiter=None) -> int:
    """Dispatch to offline replay or live paging; returns records fetched."""
    job.out_path = Path(job.out_path)
    job.cursor_path = Path(job.cursor_path)
    if job.offline_dir is not None:
        return fetch_offline(job)
    return fetch_live(job, transport=transport, limiter=limiter)
