import json

import pytest

from techmap.conllu import Sentence, Token, read_conllu_file
from techmap.corpus import load_concept_terms
from techmap.config import _default_data
from techmap.errors import ExtractionError
from techmap.extract import (
    AnnotationRecognizer,
    GazetteerRecognizer,
    HeuristicRecognizer,
    Lexicons,
    TermMention,
    detect_heads,
    expand_term,
    extract_corpus,
    extract_document,
    load_lexicons,
    normalize_term,
    token_lemma,
)

GAZ = "tests/data/fixture_gazetteer.txt"
CONLLU = "tests/data/fixture.conllu"


@pytest.fixture(scope="module")
def lexicons():
    return load_lexicons(
        gazetteer_path=GAZ,
        blacklist_path=_default_data("blacklist.txt"),
        leading_words_path=_default_data("leading_words.txt"),
        head_suffix_path=_default_data("head_suffix_rules.tsv"),
        concept_terms=load_concept_terms(_default_data("concept_terms.tsv")),
    )


@pytest.fixture(scope="module")
def docs():
    return {d.doc_id: d for d in read_conllu_file(CONLLU)}


def tok(index, surface, lemma, upos, head, deprel):
    return Token(index=index, surface=surface, lemma=lemma, upos=upos, head=head, deprel=deprel)


def sentence(*tokens):
    return Sentence(sent_id="1", tokens=list(tokens))


# Expected per-sentence term sets for the whole fixture corpus, derived by
# hand-applying the expansion and normalisation rules to each parse.
EXPECTED = {
    "d01": [
        {"flexible manufacturing system", "reconfigurable manufacturing system"},
        {"3d printer"},
    ],
    "d02": [
        {"3d printer"},
        {"internet of things", "machine", "sensor"},
    ],
    "d03": [
        set(),
        {"cloud", "cloud computing", "edge computing"},
    ],
    "d04": [
        {"predictive maintenance", "sensor", "wireless sensor network"},
        {"digital twin production system", "machine", "production system"},
    ],
    "d05": [
        {"artificial intelligence", "machine", "machine learning"},
        {"deep learning", "deep learning algorithm"},
    ],
    "d06": [
        {"augmented reality", "robot"},
        {"augmented reality", "mixed reality", "virtual reality"},
    ],
    "d07": [
        {"blockchain"},
        {"cyber-physical system"},
    ],
    "d08": [
        {"industrial internet of things", "platform", "robot", "sensor"},
        {"smart actuator", "smart sensor", "wireless network"},
    ],
    "d09": [
        {"additive manufacturing", "additive manufacturing system"},
        {"collaborative robot"},
    ],
    "d10": [
        {"edge computing", "industrial network"},
        {"machine", "machine learning", "predictive maintenance machine tool"},
    ],
    "d11": [
        {"cloud", "cloud platform"},
        {"big data analytics", "sensor"},
    ],
    "d12": [
        {"smart manufacturing system"},
        {"automated guided vehicle", "autonomous vehicle"},
        {"scada system"},
    ],
    "d13": [
        {"cnc machine", "digital twin"},
        {"human machine interface", "machine"},
        set(),
    ],
    "d14": [
        {"fog computing"},
        {"5g network", "machine"},
        {"big data analytics", "cloud", "cloud manufacturing platform", "smart sensor"},
    ],
    "d15": [
        {"convolutional neural network"},
        {"robot"},
        {"additive manufacturing"},
    ],
    "d16": [
        {"energy efficient wireless sensor"},
        {"interoperable platform"},
        {"machine", "predictive maintenance", "predictive maintenance algorithm"},
    ],
}


class TestDetectHeads:
    def test_gazetteer_finds_systems(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        cands = detect_heads(docs["d01"], rec)
        s1 = [c for c in cands if c.sent_id == "1"]
        # both gazetteer nouns: "manufacturing" (nested) and "systems"
        assert [c.token_index for c in s1] == [4, 5]
        assert all(c.source == "gazetteer" for c in s1)

    def test_empty_gazetteer_rejected(self):
        with pytest.raises(ExtractionError, match="gazetteer"):
            GazetteerRecognizer(Lexicons())

    def test_annotation_exact_spans(self, docs, tmp_path):
        path = tmp_path / "ann.jsonl"
        path.write_text(json.dumps({"doc_id": "d01", "sent_id": "1", "token_index": 5}) + "\n")
        rec = AnnotationRecognizer.from_jsonl(path)
        cands = detect_heads(docs["d01"], rec)
        assert len(cands) == 1 and cands[0].token_index == 5

    def test_annotation_missing_token_errors(self, docs, tmp_path):
        path = tmp_path / "ann.jsonl"
        path.write_text(json.dumps({"doc_id": "d01", "sent_id": "1", "token_index": 99}) + "\n")
        with pytest.raises(ExtractionError, match="missing token"):
            detect_heads(docs["d01"], AnnotationRecognizer.from_jsonl(path))

    def test_sentence_without_heads(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        cands = [c for c in detect_heads(docs["d13"], rec) if c.sent_id == "3"]
        assert cands == []

    def test_heuristic_mode(self, docs):
        rec = HeuristicRecognizer()
        cands = [c.token_index for c in detect_heads(docs["d01"], rec) if c.sent_id == "1"]
        assert cands == [5]  # "systems" heads amod/compound; "production" does not


class TestExpandTerm:
    def surfaces(self, mention, sent):
        return " ".join(sent.token(i).surface for i in mention.token_indices)

    def test_conjoined_modifier_split(self, docs, lexicons):
        sent = docs["d01"].sentences[0]
        rec = GazetteerRecognizer(lexicons)
        head = [c for c in detect_heads(docs["d01"], rec)
                if c.sent_id == "1" and c.token_index == 5][0]
        mentions = expand_term(head, sent)
        got = {self.surfaces(m, sent) for m in mentions}
        assert got == {
            "Flexible manufacturing systems",
            "reconfigurable manufacturing systems",
        }
        # conjunction splitting keeps the head token last
        for m in mentions:
            assert sent.token(m.token_indices[-1]).surface == "systems"

    def test_head_alone(self, docs, lexicons):
        sent = docs["d07"].sentences[0]
        rec = GazetteerRecognizer(lexicons)
        head = [c for c in detect_heads(docs["d07"], rec) if c.sent_id == "1"][0]
        mentions = expand_term(head, sent)
        assert len(mentions) == 1
        assert mentions[0].token_indices == (1,)

    def test_appos_alias(self, docs, lexicons):
        sent = docs["d02"].sentences[1]
        rec = GazetteerRecognizer(lexicons)
        head = [c for c in detect_heads(docs["d02"], rec)
                if c.sent_id == "2" and c.token_index == 2][0]
        mentions = expand_term(head, sent)
        aliases = [m for m in mentions if m.is_alias]
        assert len(aliases) == 1
        assert self.surfaces(aliases[0], sent) == "IoT"
        assert aliases[0].alias_anchor == (2, 4)  # Internet ... Things

    def test_non_abbreviation_appos_ignored(self, docs, lexicons):
        sent = docs["d14"].sentences[0]
        rec = GazetteerRecognizer(lexicons)
        head = [c for c in detect_heads(docs["d14"], rec) if c.sent_id == "1"][0]
        mentions = expand_term(head, sent)
        assert not any(m.is_alias for m in mentions)

    def test_bare_conjunct_inherits_modifiers(self, docs, lexicons):
        sent = docs["d08"].sentences[1]
        rec = GazetteerRecognizer(lexicons)
        head = [c for c in detect_heads(docs["d08"], rec)
                if c.sent_id == "2" and c.token_index == 2][0]
        mentions = expand_term(head, sent)
        got = {self.surfaces(m, sent) for m in mentions}
        assert got == {"Smart sensors", "Smart actuators"}

    def test_modified_conjunct_stands_alone(self, docs, lexicons):
        sent = docs["d03"].sentences[1]
        rec = GazetteerRecognizer(lexicons)
        head = [c for c in detect_heads(docs["d03"], rec)
                if c.sent_id == "2" and c.token_index == 2][0]
        mentions = expand_term(head, sent)
        got = {self.surfaces(m, sent) for m in mentions}
        assert got == {"Cloud computing", "edge computing"}

    def test_cyclic_parse_rejected(self):
        # 1 -> 2 -> 3 -> 1 modifier cycle (never produced by the parser,
        # guarded against for hand-built input)
        sent = sentence(
            tok(1, "a", "a", "NOUN", 3, "compound"),
            tok(2, "b", "b", "NOUN", 1, "compound"),
            tok(3, "c", "c", "NOUN", 2, "compound"),
        )
        from techmap.extract import HeadCandidate

        with pytest.raises(ExtractionError, match="cyclic"):
            expand_term(HeadCandidate("d", "1", 1, "annotation"), sent)

    def test_indices_strictly_increasing(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        for doc in docs.values():
            for cand in detect_heads(doc, rec):
                sent = doc.sentences[[s.sent_id for s in doc.sentences].index(cand.sent_id)]
                for mention in expand_term(cand, sent):
                    idx = mention.token_indices
                    assert all(a < b for a, b in zip(idx, idx[1:]))


class TestNormalizeTerm:
    def run_norm(self, sent, indices, head_index, lexicons):
        mention = TermMention(doc_id="d", sent_id="1", token_indices=indices,
                              head_index=head_index)
        return normalize_term(mention, sent, lexicons)

    def test_leading_word_stripped(self, docs, lexicons):
        sent = docs["d01"].sentences[1]
        assert self.run_norm(sent, (4, 5, 6), 6, lexicons) == "3d printer"

    def test_plural_lemmatised(self, docs, lexicons):
        sent = docs["d02"].sentences[0]
        assert self.run_norm(sent, (1, 2), 2, lexicons) == "3d printer"

    def test_blacklisted_concept_rejected(self, docs, lexicons):
        sent = docs["d03"].sentences[0]
        assert self.run_norm(sent, (1, 2), 2, lexicons) is None

    def test_head_suffix_rule(self, docs, lexicons):
        sent = docs["d02"].sentences[1]
        assert self.run_norm(sent, (2, 4), 2, lexicons) == "internet of things"

    def test_suffix_rule_with_leading_modifier(self, docs, lexicons):
        sent = docs["d08"].sentences[0]
        assert self.run_norm(sent, (2, 3, 5), 3, lexicons) == "industrial internet of things"

    def test_suffix_rule_requires_adjacent_match(self, lexicons):
        sent = sentence(
            tok(1, "internet", "internet", "NOUN", 2, "nsubj"),
            tok(2, "is", "be", "VERB", 0, "root"),
            tok(3, "everywhere", "everywhere", "ADV", 2, "advmod"),
        )
        assert self.run_norm(sent, (1,), 1, lexicons) == "internet"

    def test_empty_after_strip_rejected(self, lexicons):
        sent = sentence(tok(1, "novel", "novel", "NOUN", 0, "root"))
        assert self.run_norm(sent, (1,), 1, lexicons) is None

    def test_lemma_fallback_plural_strip(self):
        assert token_lemma(tok(1, "Printers", "_", "NOUN", 0, "root")) == "printer"
        assert token_lemma(tok(1, "glass", "_", "NOUN", 0, "root")) == "glass"
        assert token_lemma(tok(1, "bus", "_", "NOUN", 0, "root")) == "bus"


class TestExtractDocument:
    def test_duplicate_in_sentence_collapses(self, lexicons):
        from techmap.conllu import ParsedDocument

        sent = sentence(
            tok(1, "3D", "3d", "NOUN", 2, "compound"),
            tok(2, "printers", "printer", "NOUN", 4, "nsubj"),
            tok(3, "beat", "beat", "VERB", 0, "root"),
            tok(4, "3D", "3d", "NOUN", 5, "compound"),
            tok(5, "printers", "printer", "NOUN", 3, "obj"),
        )
        # token 3 is root/verb; tokens 2 and 5 are both printer heads
        sent.tokens[2] = tok(3, "beat", "beat", "VERB", 0, "root")
        doc = ParsedDocument(doc_id="x", sentences=[sent])
        rec = GazetteerRecognizer(lexicons)
        result = extract_document(doc, rec, lexicons)
        assert result.sentence_terms == [{"3d printer"}]

    def test_all_blacklisted_gives_empty(self, docs, lexicons):
        doc = docs["d03"]
        rec = GazetteerRecognizer(lexicons)
        result = extract_document(doc, rec, lexicons)
        assert result.sentence_terms[0] == set()

    def test_fixture_expected_sets(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        for doc_id, expected in EXPECTED.items():
            result = extract_document(docs[doc_id], rec, lexicons)
            assert result.sentence_terms == expected, doc_id

    def test_alias_resolves_to_anchor(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        result = extract_document(docs["d02"], rec, lexicons)
        assert "internet of things" in result.sentence_terms[1]
        assert "iot" not in result.document_terms

    def test_report_counts(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        from techmap.extract import ExtractionReport

        report = ExtractionReport()
        extract_document(docs["d03"], rec, lexicons, report=report)
        assert report.rejections["blacklisted_or_empty"] == 1
        assert report.terms_per_document["d03"] == 3

    def test_disjoint_sentence_sets(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        result = extract_document(docs["d09"], rec, lexicons)
        assert result.sentence_terms[0].isdisjoint(result.sentence_terms[1])
        assert len(result.document_terms) == 3


class TestDeterminismAndParallel:
    def test_workers_match_serial(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        ordered = list(docs.values())
        years = {d.doc_id: 2015 for d in ordered}
        serial, rep1 = extract_corpus(ordered, rec, lexicons, years=years, workers=1)
        parallel, rep2 = extract_corpus(ordered, rec, lexicons, years=years, workers=2)
        assert [t.doc_id for t in serial] == [t.doc_id for t in parallel]
        assert [t.sentence_terms for t in serial] == [t.sentence_terms for t in parallel]
        assert rep1.mentions == rep2.mentions

    def test_repeat_runs_identical(self, docs, lexicons):
        rec = GazetteerRecognizer(lexicons)
        ordered = list(docs.values())
        runs = [
            [extract_document(d, rec, lexicons).sentence_terms for d in ordered]
            for _ in range(3)
        ]
        assert runs[0] == runs[1] == runs[2]
