"""Technology-term extraction from dependency-parsed abstracts.

Extraction proceeds in three steps per sentence:

1. head detection — find noun tokens that anchor a technology term, either
   from an imported annotation file, a gazetteer of head lemmas, or a POS
   heuristic;
2. expansion — collect the head's modifiers through the amod / compound /
   npadvmod / nmod relations, split coordinated terms (conj) into one
   mention per conjunct, and turn parenthesised or all-caps appositions
   into abbreviation aliases;
3. normalisation — lemma-lowercase the tokens, strip uninformative leading
   words, apply head-suffix rules ("internet" + "of things"), and drop
   blacklisted or empty results.
"""
from __future__ import annotations

import json
import multiprocessing
from collections import Counter
from dataclasses import dataclass, field

from .conllu import ParsedDocument, Sentence
from .errors import ExtractionError

MODIFIER_RELATIONS = frozenset({"amod", "compound", "npadvmod", "nmod"})
NOUN_TAGS = frozenset({"NOUN", "PROPN"})


@dataclass(frozen=True)
class HeadCandidate:
    doc_id: str
    sent_id: str
    token_index: int
    source: str  # annotation | gazetteer | heuristic


@dataclass
class TermMention:
    """One occurrence of a (multi-word) technology term in a sentence."""

    doc_id: str
    sent_id: str
    token_indices: tuple[int, ...]
    head_index: int
    normalized: str = ""
    alias_of: str | None = None
    # For appos abbreviations: token indices of the mention being abbreviated.
    alias_anchor: tuple[int, ...] | None = None

    @property
    def is_alias(self) -> bool:
        return self.alias_anchor is not None


@dataclass(frozen=True)
class Lexicons:
    """Immutable lookup tables driving extraction; all entries lowercase."""

    gazetteer_heads: frozenset[str] = frozenset()
    blacklist: frozenset[str] = frozenset()
    leading_words: frozenset[str] = frozenset()
    head_suffix_rules: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def suffix_rule(self, head_lemma: str) -> tuple[str, ...] | None:
        for lemma, suffix in self.head_suffix_rules:
            if lemma == head_lemma:
                return suffix
        return None


def _read_lines(path) -> list[str]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line.lower())
    return out


def load_lexicons(
    gazetteer_path=None,
    blacklist_path=None,
    leading_words_path=None,
    head_suffix_path=None,
    concept_terms=None,
) -> Lexicons:
    """Build Lexicons from line-oriented files.

    Concept search terms (if given) are folded into the blacklist, so the
    query terms themselves never become technology nodes.
    """
    gazetteer = frozenset(_read_lines(gazetteer_path)) if gazetteer_path else frozenset()
    blacklist = set(_read_lines(blacklist_path)) if blacklist_path else set()
    leading = frozenset(_read_lines(leading_words_path)) if leading_words_path else frozenset()
    rules: list[tuple[str, tuple[str, ...]]] = []
    if head_suffix_path:
        with open(head_suffix_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ExtractionError(
                        f"{head_suffix_path}:{line_no}: expected 'head_lemma<TAB>suffix tokens'"
                    )
                rules.append((parts[0].strip().lower(), tuple(parts[1].lower().split())))
    if concept_terms:
        for term in concept_terms:
            for variant in term.surface_variants:
                blacklist.add(variant.lower())
    return Lexicons(
        gazetteer_heads=gazetteer,
        blacklist=frozenset(blacklist),
        leading_words=leading,
        head_suffix_rules=tuple(rules),
    )


def token_lemma(token) -> str:
    """Lowercased lemma, falling back to a plural-s strip of the surface."""
    lemma = token.lemma
    if lemma and lemma != "_":
        return lemma.lower()
    surface = token.surface.lower()
    if len(surface) > 3 and surface.endswith("s") and not surface.endswith("ss"):
        return surface[:-1]
    return surface


def _base_rel(deprel: str) -> str:
    return deprel.split(":", 1)[0]


# ---------------------------------------------------------------------------
# head detection


class AnnotationRecognizer:
    """Replays imported head annotations ({doc_id, sent_id, token_index})."""

    mode = "annotation"

    def __init__(self, spans: dict[tuple[str, str], list[int]]):
        self.spans = spans

    @classmethod
    def from_jsonl(cls, path) -> "AnnotationRecognizer":
        spans: dict[tuple[str, str], list[int]] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                try:
                    key = (str(rec["doc_id"]), str(rec["sent_id"]))
                    spans.setdefault(key, []).append(int(rec["token_index"]))
                except KeyError as exc:
                    raise ExtractionError(f"{path}:{line_no}: annotation missing field {exc}")
        return cls(spans)

    def candidates(self, doc: ParsedDocument) -> list[HeadCandidate]:
        out = []
        for sent in doc.sentences:
            for index in self.spans.get((doc.doc_id, sent.sent_id), []):
                if not (1 <= index <= len(sent.tokens)):
                    raise ExtractionError(
                        f"annotation points at missing token {index} "
                        f"in {doc.doc_id}/{sent.sent_id}"
                    )
                out.append(HeadCandidate(doc.doc_id, sent.sent_id, index, self.mode))
        return out


class GazetteerRecognizer:
    """Every noun whose lemma appears in the gazetteer is a head."""

    mode = "gazetteer"

    def __init__(self, lexicons: Lexicons):
        if not lexicons.gazetteer_heads:
            raise ExtractionError("gazetteer mode requires a non-empty gazetteer")
        self.heads = lexicons.gazetteer_heads

    def candidates(self, doc: ParsedDocument) -> list[HeadCandidate]:
        out = []
        for sent in doc.sentences:
            for tok in sent.tokens:
                if tok.upos in NOUN_TAGS and token_lemma(tok) in self.heads:
                    out.append(HeadCandidate(doc.doc_id, sent.sent_id, tok.index, self.mode))
        return out


class HeuristicRecognizer:
    """Optional fallback: nouns that head at least one amod/compound modifier
    and are not themselves modifiers inside a larger phrase."""

    mode = "heuristic"

    def __init__(self, pos_tags=("NOUN", "PROPN"), require_modifier=True):
        self.pos_tags = frozenset(pos_tags)
        self.require_modifier = require_modifier

    def candidates(self, doc: ParsedDocument) -> list[HeadCandidate]:
        out = []
        for sent in doc.sentences:
            has_mod = {t.head for t in sent.tokens if _base_rel(t.deprel) in ("amod", "compound")}
            for tok in sent.tokens:
                if tok.upos not in self.pos_tags:
                    continue
                if _base_rel(tok.deprel) in MODIFIER_RELATIONS:
                    continue
                if self.require_modifier and tok.index not in has_mod:
                    continue
                out.append(HeadCandidate(doc.doc_id, sent.sent_id, tok.index, self.mode))
        return out


def detect_heads(doc: ParsedDocument, recognizer) -> list[HeadCandidate]:
    """Run the configured recognizer over one parsed document."""
    return recognizer.candidates(doc)


# ---------------------------------------------------------------------------
# expansion


def _children_map(sentence: Sentence) -> dict[int, list]:
    children: dict[int, list] = {}
    for tok in sentence.tokens:
        children.setdefault(tok.head, []).append(tok)
    return children


def _modifier_closure(root_index: int, children: dict[int, list]) -> set[int]:
    """Indices of dependents reachable from root through modifier relations only."""
    collected: set[int] = set()
    stack = [root_index]
    while stack:
        current = stack.pop()
        for child in children.get(current, ()):
            if _base_rel(child.deprel) in MODIFIER_RELATIONS:
                if child.index in collected:
                    raise ExtractionError("cyclic dependency structure")
                collected.add(child.index)
                stack.append(child.index)
    return collected


def _conj_chain(anchor_index: int, children: dict[int, list]) -> list[int]:
    """All conjuncts hanging off anchor (transitively, for chained conj)."""
    chain: list[int] = []
    stack = [anchor_index]
    seen = {anchor_index}
    while stack:
        current = stack.pop()
        for child in children.get(current, ()):
            if _base_rel(child.deprel) == "conj":
                if child.index in seen:
                    raise ExtractionError("cyclic dependency structure")
                seen.add(child.index)
                chain.append(child.index)
                stack.append(child.index)
    return sorted(chain)


def _is_parenthesized(index: int, sentence: Sentence) -> bool:
    before = sentence.token(index - 1).surface if index >= 2 else ""
    after = sentence.token(index + 1).surface if index + 1 <= len(sentence.tokens) else ""
    return before == "(" and after == ")"


def _is_all_caps(index: int, sentence: Sentence) -> bool:
    surface = sentence.token(index).surface
    return len(surface) >= 2 and surface.isupper()


def expand_term(head: HeadCandidate, sentence: Sentence) -> list[TermMention]:
    """Expand a head token into full term mentions.

    Emits the base mention (modifier closure + head), one mention per
    conjunct of a modifier (conjuncts substitute their anchor), one mention
    per conjoined head (sharing the modifier set), and alias mentions for
    parenthesised / all-caps appositions of the head.
    """
    children = _children_map(sentence)
    head_idx = head.token_index
    mods = _modifier_closure(head_idx, children)

    def mention(indices: set[int], head_index: int, anchor=None) -> TermMention:
        return TermMention(
            doc_id=head.doc_id,
            sent_id=head.sent_id,
            token_indices=tuple(sorted(indices)),
            head_index=head_index,
            alias_anchor=anchor,
        )

    mentions = [mention(mods | {head_idx}, head_idx)]

    # conjuncts of a collected modifier replace that modifier's subtree
    for anchor in sorted(mods):
        chain = _conj_chain(anchor, children)
        if not chain:
            continue
        anchor_span = {anchor} | _modifier_closure(anchor, children)
        shared = (mods - anchor_span) | {head_idx}
        for conjunct in chain:
            conj_span = {conjunct} | _modifier_closure(conjunct, children)
            mentions.append(mention(shared | conj_span, head_idx))

    # conjoined heads: a bare conjunct shares the base modifier set
    # ("smart sensors and actuators" -> smart actuator); a conjunct with its
    # own modifiers stands alone ("cloud computing and edge computing")
    for co_head in _conj_chain(head_idx, children):
        tok = sentence.token(co_head)
        if tok.upos not in NOUN_TAGS:
            continue
        co_mods = _modifier_closure(co_head, children)
        shared = mods if not co_mods else set()
        mentions.append(mention(shared | co_mods | {co_head}, co_head))

    # appositions: abbreviations of the base term
    base_indices = mentions[0].token_indices
    for child in children.get(head_idx, ()):
        if _base_rel(child.deprel) != "appos":
            continue
        if _is_parenthesized(child.index, sentence) or _is_all_caps(child.index, sentence):
            alias_span = {child.index} | _modifier_closure(child.index, children)
            mentions.append(mention(alias_span, child.index, anchor=base_indices))
    return mentions


# ---------------------------------------------------------------------------
# normalisation


def normalize_term(mention: TermMention, sentence: Sentence, lexicons: Lexicons) -> str | None:
    """Normalise a mention to its canonical string, or None when rejected.

    Tokens are lemma-lowercased; leading words are stripped from the front
    until a fixpoint; a matching head-suffix rule splices its canonical
    suffix right after the head (replacing any collected tokens the suffix
    span covers); blacklisted or empty results are rejected.
    """
    head_tok = sentence.token(mention.head_index)
    suffix = lexicons.suffix_rule(token_lemma(head_tok))
    suffix_span: set[int] = set()
    if suffix:
        follow = range(mention.head_index + 1, mention.head_index + 1 + len(suffix))
        if all(
            i <= len(sentence.tokens) and sentence.token(i).surface.lower() == word
            for i, word in zip(follow, suffix)
        ):
            suffix_span = set(follow)
        else:
            suffix = None

    keyed: list[tuple[float, str]] = []
    for index in mention.token_indices:
        if index in suffix_span:
            continue
        keyed.append((float(index), token_lemma(sentence.token(index))))
    if suffix:
        for offset, word in enumerate(suffix):
            keyed.append((mention.head_index + (offset + 1) / (len(suffix) + 1), word))
    keyed.sort()
    words = [w for _, w in keyed]

    while words and words[0] in lexicons.leading_words:
        words.pop(0)

    term = " ".join(words)
    if not term or term in lexicons.blacklist:
        return None
    return term


# ---------------------------------------------------------------------------
# per-document orchestration


@dataclass
class DocumentTerms:
    """Normalised terms found in one document, by sentence and overall."""

    doc_id: str
    sentence_terms: list[set[str]]
    year: int | None = None

    @property
    def document_terms(self) -> set[str]:
        out: set[str] = set()
        for terms in self.sentence_terms:
            out |= terms
        return out


@dataclass
class ExtractionReport:
    documents: int = 0
    mentions: int = 0
    accepted: int = 0
    rejections: Counter = field(default_factory=Counter)
    terms_per_document: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "ExtractionReport") -> None:
        self.documents += other.documents
        self.mentions += other.mentions
        self.accepted += other.accepted
        self.rejections.update(other.rejections)
        self.terms_per_document.update(other.terms_per_document)


def extract_document(
    doc: ParsedDocument,
    recognizer,
    lexicons: Lexicons,
    year: int | None = None,
    report: ExtractionReport | None = None,
) -> DocumentTerms:
    """Run head detection, expansion, and normalisation over one document.

    Alias mentions contribute their anchor's normalised term; duplicates
    within a sentence collapse to one entry.
    """
    candidates = detect_heads(doc, recognizer)
    by_sent: dict[str, list[HeadCandidate]] = {}
    for cand in candidates:
        by_sent.setdefault(cand.sent_id, []).append(cand)

    if report is None:
        report = ExtractionReport()
    report.documents += 1

    sentence_terms: list[set[str]] = []
    for sent in doc.sentences:
        terms: set[str] = set()
        normalized_by_indices: dict[tuple[int, ...], str | None] = {}
        alias_mentions: list[TermMention] = []
        for cand in by_sent.get(sent.sent_id, []):
            for mention in expand_term(cand, sent):
                report.mentions += 1
                if mention.is_alias:
                    alias_mentions.append(mention)
                    continue
                norm = normalize_term(mention, sent, lexicons)
                normalized_by_indices[mention.token_indices] = norm
                if norm is None:
                    report.rejections["blacklisted_or_empty"] += 1
                else:
                    report.accepted += 1
                    terms.add(norm)
        for alias in alias_mentions:
            anchor_norm = normalized_by_indices.get(alias.alias_anchor)
            if anchor_norm is None:
                report.rejections["alias_of_rejected"] += 1
                continue
            alias.alias_of = anchor_norm
            report.accepted += 1
            terms.add(anchor_norm)
        sentence_terms.append(terms)

    result = DocumentTerms(doc_id=doc.doc_id, sentence_terms=sentence_terms, year=year)
    report.terms_per_document[doc.doc_id] = len(result.document_terms)
    return result


def _extract_one(args):
    doc, recognizer, lexicons, year = args
    report = ExtractionReport()
    terms = extract_document(doc, recognizer, lexicons, year=year, report=report)
    return terms, report


def extract_corpus(
    docs: list[ParsedDocument],
    recognizer,
    lexicons: Lexicons,
    years: dict[str, int] | None = None,
    workers: int = 1,
) -> tuple[list[DocumentTerms], ExtractionReport]:
    """Extract every document; results keep corpus input order regardless of
    worker count, so output is deterministic."""
    years = years or {}
    jobs = [(doc, recognizer, lexicons, years.get(doc.doc_id)) for doc in docs]
    report = ExtractionReport()
    results: list[DocumentTerms] = []
    if workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(workers) as pool:
            for terms, partial in pool.map(_extract_one, jobs, chunksize=64):
                results.append(terms)
                report.merge(partial)
    else:
        for job in jobs:
            terms, partial = _extract_one(job)
            results.append(terms)
            report.merge(partial)
    return results, report
