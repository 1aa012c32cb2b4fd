import json
import time
from pathlib import Path

import httpx
import pytest

from techprep.client import (
    AuthError,
    FetchJob,
    QuotaExhausted,
    RateLimiter,
    build_query,
    fetch,
    load_concept_terms,
    record_to_document,
)

DATA = Path(__file__).parent / "data"


def offline_job(tmp_path, **kw):
    return FetchJob(
        query="",
        out_path=tmp_path / "corpus.jsonl",
        cursor_path=tmp_path / "cursor.json",
        offline_dir=DATA / "recorded",
        **kw,
    )


class TestOfflineReplay:
    def test_replay_matches_golden_bytes(self, tmp_path):
        job = offline_job(tmp_path)
        count = fetch(job)
        assert count == 6  # 7 entries, 1 skipped for schema drift
        assert job.out_path.read_bytes() == (DATA / "golden_corpus.jsonl").read_bytes()

    def test_replay_is_deterministic(self, tmp_path):
        job1 = offline_job(tmp_path / "a")
        job2 = offline_job(tmp_path / "b")
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        fetch(job1)
        fetch(job2)
        assert job1.out_path.read_bytes() == job2.out_path.read_bytes()

    def test_pages_concatenated_in_order(self, tmp_path):
        job = offline_job(tmp_path)
        fetch(job)
        ids = [json.loads(l)["id"] for l in job.out_path.read_text().splitlines()]
        assert ids == [f"SCOPUS_ID:{n}" for n in (1001, 1002, 1003, 1004, 1005, 1006)]

    def test_cursor_resumes_midway(self, tmp_path):
        job = offline_job(tmp_path)
        job.cursor_path.write_text('{"next_start": 2}')
        count = fetch(job)
        assert count == 1  # only page_0002 replayed; drifted entry skipped
        ids = [json.loads(l)["id"] for l in job.out_path.read_text().splitlines()]
        assert ids == ["SCOPUS_ID:1006"]


class TestQueryGrammar:
    def test_documented_grammar_from_concept_terms(self, tmp_path):
        tsv = tmp_path / "terms.tsv"
        tsv.write_text(
            "industry-4.0\tindustry 4.0\n"
            "cloud-manufacturing\tcloud manufacturing|cloud-based manufacturing\n",
            encoding="utf-8",
        )
        query = build_query(load_concept_terms(tsv))
        assert query == (
            'TITLE-ABS-KEY("industry 4.0") OR TITLE-ABS-KEY("cloud manufacturing")'
            ' OR TITLE-ABS-KEY("cloud-based manufacturing")'
        )

    def test_eight_default_terms_produce_ten_clauses(self):
        primary_terms = Path(__file__).parents[2] / "src/techmap/data/concept_terms.tsv"
        query = build_query(load_concept_terms(primary_terms))
        assert query.count("TITLE-ABS-KEY(") == 10  # 8 canonicals, 10 variants
        assert 'TITLE-ABS-KEY("industrie 4.0")' in query
        assert 'TITLE-ABS-KEY("factories of the future")' in query


class TestRecordMapping:
    def test_full_mapping(self):
        rec = record_to_document(
            {
                "dc:identifier": "X:1",
                "dc:title": "T",
                "dc:description": "A",
                "prism:coverDate": "2018-09-01",
                "authkeywords": "alpha | beta",
                "affiliation": [{"affiliation-country": "PT"}],
                "retracted": True,
            },
            "retracted",
        )
        assert rec == {
            "id": "X:1", "title": "T", "abstract": "A", "year": 2018,
            "author_keywords": ["alpha", "beta"],
            "first_author_country": "PT", "retracted": True,
        }

    def test_drifted_record_skipped(self):
        assert record_to_document({"dc:identifier": "X:2"}, "retracted") is None

    def test_configurable_retraction_field(self):
        rec = record_to_document(
            {"dc:identifier": "X:3", "dc:title": "T", "prism:coverDate": "2019-01-01",
             "withdrawn": True},
            "withdrawn",
        )
        assert rec["retracted"] is True


class TestRateLimiter:
    def test_spacing_with_fake_clock(self):
        now = [0.0]
        sleeps = []

        def clock():
            return now[0]

        def sleep(dt):
            sleeps.append(dt)
            now[0] += dt

        limiter = RateLimiter(10.0, clock=clock, sleep=sleep)
        limiter.wait()
        limiter.wait()
        limiter.wait()
        assert sleeps == pytest.approx([0.1, 0.1])


def paged_transport(pages, timestamps, fail_on=None, quota_on=None, auth_fail=False):
    """Fake search endpoint: serves pages by start offset; can inject one
    429 (retryable), one quota-exhausted 429, or an auth failure."""
    state = {"429_sent": False}

    def handler(request: httpx.Request) -> httpx.Response:
        timestamps.append(time.monotonic())
        if auth_fail:
            return httpx.Response(401)
        start = int(dict(request.url.params)["start"])
        page_index = start // 3
        if quota_on is not None and page_index == quota_on:
            return httpx.Response(429, headers={"X-Quota-Exceeded": "true"})
        if fail_on is not None and page_index == fail_on and not state["429_sent"]:
            state["429_sent"] = True
            return httpx.Response(429, headers={"Retry-After": "0.05"})
        entries = pages[page_index] if page_index < len(pages) else []
        payload = {"search-results": {
            "opensearch:totalResults": str(sum(len(p) for p in pages)),
            "entry": entries,
        }}
        return httpx.Response(200, json=payload)

    return httpx.MockTransport(handler)


def make_pages():
    def entry(n):
        return {
            "dc:identifier": f"L:{n}",
            "dc:title": f"Title {n}",
            "dc:description": f"Abstract {n}.",
            "prism:coverDate": f"201{n % 10}-01-01",
        }

    return [[entry(1), entry(2), entry(3)], [entry(4), entry(5), entry(6)], [entry(7)]]


def live_job(tmp_path, **kw):
    return FetchJob(
        query="TITLE-ABS-KEY(\"industry 4.0\")",
        out_path=tmp_path / "corpus.jsonl",
        cursor_path=tmp_path / "cursor.json",
        page_size=3,
        rate_limit_rps=40.0,
        **kw,
    )


class TestLiveFetch:
    def test_pagination_and_429_backoff_no_duplicates(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TECHPREP_API_KEY", "k")
        stamps = []
        transport = paged_transport(make_pages(), stamps, fail_on=1)
        job = live_job(tmp_path)
        count = fetch(job, transport=transport)
        assert count == 7
        ids = [json.loads(l)["id"] for l in job.out_path.read_text().splitlines()]
        assert ids == [f"L:{n}" for n in range(1, 8)]
        assert len(ids) == len(set(ids))

    def test_rate_limit_never_exceeded(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TECHPREP_API_KEY", "k")
        stamps = []
        transport = paged_transport(make_pages(), stamps, fail_on=1)
        job = live_job(tmp_path)
        fetch(job, transport=transport)
        gaps = [b - a for a, b in zip(stamps, stamps[1:])]
        assert len(stamps) == 4  # 3 pages + 1 retried 429
        assert min(gaps) >= 1.0 / job.rate_limit_rps - 0.002

    def test_auth_failure(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TECHPREP_API_KEY", "bad")
        transport = paged_transport(make_pages(), [], auth_fail=True)
        with pytest.raises(AuthError):
            fetch(live_job(tmp_path), transport=transport)

    def test_missing_key_is_auth_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("TECHPREP_API_KEY", raising=False)
        with pytest.raises(AuthError, match="TECHPREP_API_KEY"):
            fetch(live_job(tmp_path), transport=paged_transport(make_pages(), []))

    def test_quota_exhaustion_persists_cursor_and_resumes(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TECHPREP_API_KEY", "k")
        job = live_job(tmp_path)
        transport = paged_transport(make_pages(), [], quota_on=1)
        with pytest.raises(QuotaExhausted):
            fetch(job, transport=transport)
        assert json.loads(job.cursor_path.read_text())["next_start"] == 3
        ids = [json.loads(l)["id"] for l in job.out_path.read_text().splitlines()]
        assert ids == ["L:1", "L:2", "L:3"]
        # resume against a healthy server: no duplicates, completes
        count = fetch(job, transport=paged_transport(make_pages(), []))
        ids = [json.loads(l)["id"] for l in job.out_path.read_text().splitlines()]
        assert count == 4
        assert ids == [f"L:{n}" for n in range(1, 8)]

    def test_api_key_never_in_outputs(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TECHPREP_API_KEY", "SECRET-TOKEN-123")
        job = live_job(tmp_path)
        fetch(job, transport=paged_transport(make_pages(), []))
        for artifact in (job.out_path, job.cursor_path):
            assert "SECRET-TOKEN-123" not in artifact.read_text()
        assert "SECRET-TOKEN-123" not in repr(job)
