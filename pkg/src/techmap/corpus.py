"""Bibliographic corpus handling: loading, deduplication, concept tagging.

A corpus is a list of article records (id, title, abstract, year, keywords).
Records are tagged with the concept search terms they contain, duplicates and
retracted articles are dropped, and a per-term yearly histogram summarises
what the search matched.
"""
from __future__ import annotations

import csv
import json
import re
import time
from dataclasses import dataclass, field, replace

from .errors import CorpusFormatError

_PUNCT_RE = re.compile(r"[^\w\s]+", re.UNICODE)
_WS_RE = re.compile(r"\s+")


@dataclass
class Document:
    """One bibliographic record."""

    id: str
    title: str
    abstract: str
    year: int
    author_keywords: list[str] = field(default_factory=list)
    first_author_country: str | None = None
    retracted: bool = False
    concept_tags: set[str] = field(default_factory=set)

    @property
    def extractable(self) -> bool:
        """True when the abstract has content to run extraction on."""
        return bool(self.abstract and self.abstract.strip())


@dataclass(frozen=True)
class ConceptTerm:
    """A canonical concept search term and its accepted surface variants."""

    canonical: str
    surface_variants: tuple[str, ...]


@dataclass
class DocumentSet:
    """Ordered list of documents plus load provenance."""

    documents: list[Document]
    source: str = "<memory>"
    loaded_at: float = field(default_factory=time.time)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


@dataclass
class DedupReport:
    """What deduplicate() removed and why."""

    removed: list[tuple[str, str, str | None]] = field(default_factory=list)
    # entries: (doc_id, reason, surviving_doc_id or None)

    @property
    def n_retracted(self) -> int:
        return sum(1 for _, reason, _ in self.removed if reason == "retracted")

    @property
    def n_duplicates(self) -> int:
        return sum(1 for _, reason, _ in self.removed if reason == "duplicate")


def _coerce_record(rec: dict, line_no: int, path: str) -> Document:
    for key in ("id", "title", "year"):
        if key not in rec or rec[key] in (None, ""):
            raise CorpusFormatError(f"record missing required field '{key}'", line_no, path)
    try:
        year = int(rec["year"])
    except (TypeError, ValueError):
        raise CorpusFormatError(f"year is not an integer: {rec['year']!r}", line_no, path)
    keywords = rec.get("author_keywords") or []
    if isinstance(keywords, str):
        keywords = [k.strip() for k in keywords.split(";") if k.strip()]
    retracted = rec.get("retracted", False)
    if isinstance(retracted, str):
        retracted = retracted.strip().lower() in ("true", "1", "yes")
    country = rec.get("first_author_country")
    if country in ("", None):
        country = None
    return Document(
        id=str(rec["id"]),
        title=str(rec["title"]),
        abstract=str(rec.get("abstract") or ""),
        year=year,
        author_keywords=[str(k) for k in keywords],
        first_author_country=country,
        retracted=bool(retracted),
    )


def load_corpus(path, fmt: str | None = None, skip_malformed: bool = False) -> DocumentSet:
    """Load a JSONL or CSV corpus file, preserving input order.

    Records missing id/title/year are an error naming the offending line
    (or are skipped when ``skip_malformed``); duplicate ids always abort.
    """
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.lower().endswith(".csv") else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise CorpusFormatError(f"unknown corpus format {fmt!r}", path=path)

    docs: list[Document] = []
    seen_ids: set[str] = set()

    def _add(doc: Document, line_no: int) -> None:
        if doc.id in seen_ids:
            raise CorpusFormatError(f"duplicate document id {doc.id!r}", line_no, path)
        seen_ids.add(doc.id)
        docs.append(doc)

    with open(path, encoding="utf-8") as fh:
        if fmt == "jsonl":
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    if not isinstance(rec, dict):
                        raise CorpusFormatError("record is not a JSON object", line_no, path)
                    doc = _coerce_record(rec, line_no, path)
                except CorpusFormatError:
                    if skip_malformed:
                        continue
                    raise
                except json.JSONDecodeError as exc:
                    if skip_malformed:
                        continue
                    raise CorpusFormatError(f"invalid JSON ({exc.msg})", line_no, path)
                _add(doc, line_no)
        else:
            reader = csv.DictReader(fh)
            for line_no, rec in enumerate(reader, start=2):  # header is line 1
                try:
                    doc = _coerce_record(rec, line_no, path)
                except CorpusFormatError:
                    if skip_malformed:
                        continue
                    raise
                _add(doc, line_no)
    return DocumentSet(documents=docs, source=path)


def dedup_key(title: str, year: int) -> tuple[str, int]:
    """Case-folded, punctuation-stripped title plus year."""
    cleaned = _PUNCT_RE.sub(" ", title.casefold())
    cleaned = _WS_RE.sub(" ", cleaned).strip()
    return cleaned, year


def deduplicate(docset: DocumentSet) -> tuple[DocumentSet, DedupReport]:
    """Drop retracted articles, then title+year duplicates (first one wins)."""
    report = DedupReport()
    survivors: list[Document] = []
    first_by_key: dict[tuple[str, int], str] = {}
    for doc in docset.documents:
        if doc.retracted:
            report.removed.append((doc.id, "retracted", None))
            continue
        key = dedup_key(doc.title, doc.year)
        if key in first_by_key:
            report.removed.append((doc.id, "duplicate", first_by_key[key]))
            continue
        first_by_key[key] = doc.id
        survivors.append(doc)
    return DocumentSet(documents=survivors, source=docset.source), report


def load_concept_terms(path) -> list[ConceptTerm]:
    """Read the line-oriented `canonical<TAB>variant1|variant2|...` config."""
    terms: list[ConceptTerm] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusFormatError("expected 'canonical<TAB>variants'", line_no, str(path))
            canonical, variants = parts
            if canonical in seen:
                raise CorpusFormatError(f"duplicate canonical term {canonical!r}", line_no, str(path))
            seen.add(canonical)
            variant_list = tuple(v.strip() for v in variants.split("|") if v.strip())
            if not variant_list:
                raise CorpusFormatError(f"no variants for {canonical!r}", line_no, str(path))
            terms.append(ConceptTerm(canonical=canonical, surface_variants=variant_list))
    return terms


def _variant_pattern(variant: str, whole_word: bool) -> re.Pattern:
    # Any whitespace run inside the variant matches any whitespace run in text.
    body = r"\s+".join(re.escape(word) for word in variant.split())
    if whole_word:
        body = r"(?<!\w)" + body + r"(?!\w)"
    return re.compile(body, re.IGNORECASE)


def tag_search_terms(
    docset: DocumentSet, terms: list[ConceptTerm], whole_word: bool = True
) -> DocumentSet:
    """Tag each document with every concept whose variant appears in its
    title, abstract, or author keywords. Text fields are never mutated."""
    if not terms:
        raise ValueError("tag_search_terms requires a non-empty term list")
    compiled = [
        (term.canonical, [_variant_pattern(v, whole_word) for v in term.surface_variants])
        for term in terms
    ]
    tagged: list[Document] = []
    for doc in docset.documents:
        haystacks = [doc.title, doc.abstract, *doc.author_keywords]
        tags = {
            canonical
            for canonical, patterns in compiled
            if any(p.search(h) for p in patterns for h in haystacks)
        }
        tagged.append(replace(doc, concept_tags=tags))
    return DocumentSet(documents=tagged, source=docset.source)


@dataclass
class TermYearHistogram:
    """Counts of documents per (year, concept term).

    Term columns are ordered by total growth between the first and the last
    year of the table (descending, ties by name); a document tagged with k
    concepts contributes to k cells.
    """

    years: list[int]
    terms: list[str]
    counts: dict[tuple[int, str], int]

    def cell(self, year: int, term: str) -> int:
        return self.counts.get((year, term), 0)

    def rows(self) -> list[list]:
        out = [["year", *self.terms]]
        for year in self.years:
            out.append([year, *(self.cell(year, t) for t in self.terms)])
        return out


def term_year_histogram(docset: DocumentSet) -> TermYearHistogram:
    """Build the per-term yearly histogram over a tagged document set."""
    counts: dict[tuple[int, str], int] = {}
    years: set[int] = set()
    terms: set[str] = set()
    for doc in docset.documents:
        if not doc.concept_tags:
            continue
        years.add(doc.year)
        for tag in doc.concept_tags:
            terms.add(tag)
            counts[(doc.year, tag)] = counts.get((doc.year, tag), 0) + 1
    if not counts:
        return TermYearHistogram(years=[], terms=[], counts={})
    year_list = sorted(years)
    first, last = year_list[0], year_list[-1]

    def growth(term: str) -> int:
        return counts.get((last, term), 0) - counts.get((first, term), 0)

    term_list = sorted(terms, key=lambda t: (-growth(t), t))
    return TermYearHistogram(years=year_list, terms=term_list, counts=counts)


def filter_year_window(
    docset: DocumentSet, min_year: int = 2011, max_year: int | None = None
) -> tuple[DocumentSet, int]:
    """Keep documents inside [min_year, max_year]; returns (set, n_dropped)."""
    kept = [
        d
        for d in docset.documents
        if d.year >= min_year and (max_year is None or d.year <= max_year)
    ]
    return DocumentSet(documents=kept, source=docset.source), len(docset.documents) - len(kept)
