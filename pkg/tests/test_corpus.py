import json

import pytest

from techmap.corpus import (
    ConceptTerm,
    Document,
    DocumentSet,
    dedup_key,
    deduplicate,
    filter_year_window,
    load_concept_terms,
    load_corpus,
    tag_search_terms,
    term_year_histogram,
)
from techmap.errors import CorpusFormatError

CONCEPTS = [
    ConceptTerm("industry-4.0", ("industry 4.0",)),
    ConceptTerm("industrie-4.0", ("industrie 4.0",)),
    ConceptTerm("smart-manufacturing", ("smart manufacturing",)),
    ConceptTerm("cloud-manufacturing", ("cloud manufacturing", "cloud-based manufacturing")),
]


def doc(i, title="T", abstract="A", year=2015, **kw):
    return Document(id=str(i), title=title, abstract=abstract, year=year, **kw)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


class TestLoadCorpus:
    def test_jsonl_identity_load(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "a", "title": "One", "abstract": "x", "year": 2015},
            {"id": "b", "title": "Two", "abstract": "y", "year": 2016},
            {"id": "c", "title": "Three", "abstract": "z", "year": 2017},
        ])
        ds = load_corpus(path)
        assert [d.id for d in ds] == ["a", "b", "c"]
        assert len(ds) == 3

    def test_missing_year_reports_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "a", "title": "One", "abstract": "x", "year": 2015},
            {"id": "b", "title": "Two", "abstract": "y"},
        ])
        with pytest.raises(CorpusFormatError) as err:
            load_corpus(path)
        assert err.value.line_no == 2

    def test_skip_malformed_flag(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "a", "title": "One", "abstract": "x", "year": 2015},
            {"id": "b", "title": "Two"},
        ])
        ds = load_corpus(path, skip_malformed=True)
        assert [d.id for d in ds] == ["a"]

    def test_duplicate_id_aborts_even_with_skip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"id": "a", "title": "One", "abstract": "x", "year": 2015},
            {"id": "a", "title": "Two", "abstract": "y", "year": 2016},
        ])
        with pytest.raises(CorpusFormatError, match="duplicate"):
            load_corpus(path, skip_malformed=True)

    def test_empty_abstract_flagged_not_extractable(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "a", "title": "One", "abstract": "  ", "year": 2015}])
        ds = load_corpus(path)
        assert not ds.documents[0].extractable

    def test_csv_roundtrip_fields(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text(
            "id,title,abstract,year,author_keywords,first_author_country,retracted\n"
            'x,"A title","An abstract",2014,k1;k2,DE,true\n',
            encoding="utf-8",
        )
        ds = load_corpus(path)
        d = ds.documents[0]
        assert d.author_keywords == ["k1", "k2"]
        assert d.retracted is True
        assert d.first_author_country == "DE"

    def test_paper_scale_synthetic_load(self, tmp_path):
        path = tmp_path / "big.jsonl"
        write_jsonl(path, [
            {"id": f"s{i}", "title": f"Title {i}", "abstract": "text", "year": 2011 + i % 9}
            for i in range(14667)
        ])
        assert len(load_corpus(path)) == 14667


class TestDeduplicate:
    def test_exact_duplicate_first_wins(self):
        ds = DocumentSet([
            doc(1, title="Smart Factory Review", year=2018),
            doc(2, title="Smart Factory Review", year=2018),
        ])
        kept, report = deduplicate(ds)
        assert [d.id for d in kept] == ["1"]
        assert report.n_duplicates == 1
        assert report.removed[0] == ("2", "duplicate", "1")

    def test_retracted_removed(self):
        ds = DocumentSet([doc(1, retracted=True), doc(2)])
        kept, report = deduplicate(ds)
        assert [d.id for d in kept] == ["2"]
        assert report.removed[0] == ("1", "retracted", None)

    def test_case_and_punctuation_insensitive_key(self):
        # same normalization applied by hand: casefold + strip punctuation
        assert dedup_key("Smart Factory Review.", 2018) == dedup_key(
            "SMART FACTORY REVIEW", 2018
        )
        ds = DocumentSet([
            doc(1, title="Smart Factory Review.", year=2018),
            doc(2, title="SMART factory review", year=2018),
            doc(3, title="Smart Factory Review", year=2019),  # different year
        ])
        kept, report = deduplicate(ds)
        assert [d.id for d in kept] == ["1", "3"]

    def test_idempotent(self):
        ds = DocumentSet([
            doc(1, title="A"), doc(2, title="A"), doc(3, title="B", retracted=True),
        ])
        once, _ = deduplicate(ds)
        twice, report2 = deduplicate(once)
        assert [d.id for d in twice] == [d.id for d in once]
        assert not report2.removed

    def test_empty_input(self):
        kept, report = deduplicate(DocumentSet([]))
        assert len(kept) == 0 and not report.removed


class TestTagSearchTerms:
    def test_title_match(self):
        ds = DocumentSet([doc(1, title="Industrie 4.0 in practice")])
        tagged = tag_search_terms(ds, CONCEPTS)
        assert tagged.documents[0].concept_tags == {"industrie-4.0"}

    def test_hyphen_variant(self):
        ds = DocumentSet([doc(1, abstract="We study cloud-based manufacturing here.")])
        tagged = tag_search_terms(ds, CONCEPTS)
        assert tagged.documents[0].concept_tags == {"cloud-manufacturing"}

    def test_keyword_match_and_no_match(self):
        ds = DocumentSet([
            doc(1, author_keywords=["smart manufacturing"]),
            doc(2, title="Unrelated", abstract="nothing here"),
        ])
        tagged = tag_search_terms(ds, CONCEPTS)
        assert tagged.documents[0].concept_tags == {"smart-manufacturing"}
        assert tagged.documents[1].concept_tags == set()

    def test_word_boundary_default(self):
        ds = DocumentSet([doc(1, abstract="metaindustry 4.0x is not a match")])
        assert tag_search_terms(ds, CONCEPTS).documents[0].concept_tags == set()

    def test_substring_mode(self):
        ds = DocumentSet([doc(1, abstract="metasmart manufacturingish")])
        tagged = tag_search_terms(ds, CONCEPTS, whole_word=False)
        assert tagged.documents[0].concept_tags == {"smart-manufacturing"}

    def test_never_mutates_text(self):
        original = doc(1, title="Industry 4.0", abstract="smart manufacturing")
        ds = DocumentSet([original])
        tag_search_terms(ds, CONCEPTS)
        assert original.concept_tags == set()
        assert original.title == "Industry 4.0"


class TestHistogram:
    def test_multi_tag_counts_both(self):
        ds = DocumentSet([doc(1, year=2015)])
        ds.documents[0].concept_tags = {"industry-4.0", "smart-manufacturing"}
        hist = term_year_histogram(ds)
        assert hist.cell(2015, "industry-4.0") == 1
        assert hist.cell(2015, "smart-manufacturing") == 1

    def test_empty(self):
        hist = term_year_histogram(DocumentSet([]))
        assert hist.years == [] and hist.terms == []

    def test_hand_counted_fixture_and_growth_order(self):
        # growth between first (2013) and last (2015) year:
        # a: 3-1=2, b: 1-1=0, c: 1-0=1  -> order a, c, b
        tag_sets = [
            (2013, {"a", "b"}),
            (2014, {"a"}),
            (2015, {"a", "b", "c"}),
            (2015, {"a"}),
            (2015, {"a"}),
        ]
        docs = []
        for i, (year, tags) in enumerate(tag_sets):
            d = doc(i, year=year)
            d.concept_tags = set(tags)
            docs.append(d)
        hist = term_year_histogram(DocumentSet(docs))
        assert hist.terms == ["a", "c", "b"]
        assert hist.cell(2013, "a") == 1
        assert hist.cell(2015, "a") == 3
        assert hist.cell(2014, "c") == 0
        assert hist.rows()[0] == ["year", "a", "c", "b"]

    def test_cell_sum_at_least_tagged_docs(self):
        docs = []
        for i in range(10):
            d = doc(i, year=2015)
            d.concept_tags = {"a", "b"} if i % 2 else {"a"}
            docs.append(d)
        hist = term_year_histogram(DocumentSet(docs))
        total = sum(hist.counts.values())
        assert total >= 10


class TestConceptConfigAndWindow:
    def test_load_default_concept_file(self):
        from techmap.config import _default_data

        terms = load_concept_terms(_default_data("concept_terms.tsv"))
        canonicals = {t.canonical for t in terms}
        assert "industry-4.0" in canonicals and "cloud-manufacturing" in canonicals
        cloud = next(t for t in terms if t.canonical == "cloud-manufacturing")
        assert "cloud-based manufacturing" in cloud.surface_variants

    def test_year_window(self):
        ds = DocumentSet([doc(1, year=2009), doc(2, year=2011), doc(3, year=2021)])
        kept, dropped = filter_year_window(ds, min_year=2011, max_year=2020)
        assert [d.id for d in kept] == ["2"]
        assert dropped == 2
