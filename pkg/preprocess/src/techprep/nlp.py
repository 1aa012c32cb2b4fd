"""Deterministic abstract-to-CoNLL-U conversion.

A rule-based tokenizer, POS tagger, lemmatizer, and dependency heuristic
tuned for the declarative sentence style of article abstracts. The output
contract is what matters downstream: well-formed CoNLL-U (one root per
sentence, contiguous indices, lemma/UPOS/head/deprel filled) with noun
phrases built from amod/compound/nmod attachments, coordination expressed
with conj/cc on the first conjunct, and parenthesised or comma-delimited
abbreviations attached as appos.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

DETERMINERS = {"the", "a", "an", "this", "these", "those", "that", "no", "each", "every", "its"}
ADPOSITIONS = {
    "of", "in", "for", "from", "over", "with", "without", "alongside", "at",
    "on", "by", "to", "into", "within", "across", "through", "between", "under",
}
CCONJ = {"and", "or", "but"}
PRONOUNS = {"we", "it", "they", "he", "she", "you", "i", "our", "their"}
AUXILIARIES = {
    "is", "are", "was", "were", "be", "been", "being", "will", "would",
    "can", "could", "may", "might", "should", "must", "shall",
}
ADVERBS = {"also", "everywhere", "often", "currently", "together", "not", "increasingly"}

VERB_STEMS = {
    "improve", "propose", "use", "connect", "transform", "support", "enable",
    "monitor", "drive", "analyze", "analyse", "integrate", "extract", "host",
    "require", "transport", "control", "simulate", "display", "appear",
    "converge", "classify", "weld", "complement", "forecast", "exchange",
    "reduce", "work", "link", "present", "introduce", "describe", "show",
    "provide", "apply", "develop", "evaluate", "demonstrate", "study",
    "investigate", "consider", "address", "focus", "combine", "allow",
    "offer", "achieve", "increase", "decrease", "identify", "detect",
    "predict", "optimize", "optimise", "automate", "deploy", "process",
    "generate", "collect", "measure", "track", "operate", "perform",
    "implement", "design", "build", "create", "test", "validate", "compare",
}

ADJ_LEXICON = {
    "smart", "deep", "big", "new", "novel", "rapid", "human", "real",
    "mixed", "augmented", "automated", "guided", "intelligent", "large",
    "small", "high", "low", "fast", "slow", "key", "main", "free",
    "decentralised", "decentralized", "open", "secure", "robust",
}
ADJ_SUFFIXES = (
    "able", "ible", "ial", "ical", "al", "ive", "ous", "ic", "ful", "less",
    "ent", "ant", "ary", "ern", "ual",
)

_TOKEN_RE = re.compile(r"\d+\.\d+|\w+(?:[-'’]\w+)*|[^\w\s]")
_SENT_SPLIT_RE = re.compile(r"(?<=[.!?])\s+(?=[A-Z0-9(\"'])")

NOMINAL = {"NOUN", "PROPN", "NUM"}
CHUNKABLE = NOMINAL | {"ADJ", "DET"}


@dataclass
class Word:
    surface: str
    lemma: str = ""
    upos: str = ""
    head: int = 0
    deprel: str = ""


def split_sentences(text: str) -> list[str]:
    parts = _SENT_SPLIT_RE.split(text.strip())
    return [p for p in (part.strip() for part in parts) if p]


def tokenize(sentence: str) -> list[str]:
    return _TOKEN_RE.findall(sentence)


def _verb_stem(token: str) -> str | None:
    """Base form if the token looks like an inflected known verb."""
    if token in VERB_STEMS:
        return token
    if token.endswith("ies") and token[:-3] + "y" in VERB_STEMS:
        return token[:-3] + "y"
    if token.endswith("s") and token[:-1] in VERB_STEMS:
        return token[:-1]
    if token.endswith("es") and token[:-2] in VERB_STEMS:
        return token[:-2]
    if token.endswith("ed"):
        for stem in (token[:-2], token[:-1], token[:-2] + "e"):
            if stem in VERB_STEMS:
                return stem
    if token.endswith("ing"):
        for stem in (token[:-3], token[:-3] + "e"):
            if stem in VERB_STEMS:
                return stem
    return None


def _is_adjective(token: str) -> bool:
    if token in ADJ_LEXICON:
        return True
    if "-" in token:
        tail = token.rsplit("-", 1)[-1]
        if tail:
            return _is_adjective(tail) or tail in ("based", "driven", "oriented", "physical")
    return any(token.endswith(s) for s in ADJ_SUFFIXES) and len(token) > 4


def noun_lemma(token: str) -> str:
    if len(token) <= 3:
        return token
    if token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith(("us", "is", "ss", "ics")):
        return token
    if token.endswith(("ches", "shes", "xes", "zes", "sses")):
        return token[:-2]
    if token.endswith("s"):
        return token[:-1]
    return token


def tag(tokens: list[str]) -> list[Word]:
    words: list[Word] = []
    for raw in tokens:
        token = raw.lower()
        if not raw[:1].isalnum():
            words.append(Word(raw, raw, "PUNCT"))
            continue
        if re.fullmatch(r"\d+(\.\d+)?", raw):
            words.append(Word(raw, raw, "NUM"))
            continue
        if token in DETERMINERS:
            words.append(Word(raw, token, "DET"))
        elif token in CCONJ:
            words.append(Word(raw, token, "CCONJ"))
        elif token in ADPOSITIONS:
            words.append(Word(raw, token, "ADP"))
        elif token in PRONOUNS:
            words.append(Word(raw, token, "PRON"))
        elif token in AUXILIARIES:
            lemma = "be" if token in ("is", "are", "was", "were", "been", "being") else token
            words.append(Word(raw, lemma, "AUX"))
        elif token in ADVERBS or (token.endswith("ly") and len(token) > 4):
            words.append(Word(raw, token, "ADV"))
        elif _is_adjective(token):
            words.append(Word(raw, token, "ADJ"))
        else:
            stem = _verb_stem(token)
            if stem is not None:
                words.append(Word(raw, stem, "VERB"))
            elif raw.isupper() and len(raw) >= 2:
                words.append(Word(raw, token, "PROPN"))
            else:
                words.append(Word(raw, noun_lemma(token), "NOUN"))
    # contextual repair: an "inflected verb" right after ADJ/DET/NUM is a
    # noun ("physical processes", "the controls")
    for k in range(1, len(words)):
        if words[k].upos == "VERB" and words[k - 1].upos in ("ADJ", "DET", "NUM"):
            words[k] = Word(words[k].surface, noun_lemma(words[k].surface.lower()), "NOUN")
    return words


def _find_chunks(words: list[Word]) -> list[tuple[int, int]]:
    """Maximal [start, end) nominal runs (DET/ADJ/NOUN/PROPN/NUM), keeping
    inline adjective coordination inside one chunk."""
    chunks = []
    i = 0
    n = len(words)
    while i < n:
        if words[i].upos not in CHUNKABLE:
            i += 1
            continue
        j = i
        while j < n:
            if words[j].upos in CHUNKABLE:
                j += 1
            elif (
                words[j].upos == "CCONJ"
                and j > i
                and words[j - 1].upos == "ADJ"  # "flexible and reconfigurable ..."
                and j + 1 < n
                and words[j + 1].upos == "ADJ"
                and j + 2 < n
                and words[j + 2].upos in CHUNKABLE
            ):
                j += 2  # modifier coordination stays inside the chunk
            else:
                break
        if any(words[k].upos in NOMINAL for k in range(i, j)):
            chunks.append((i, j))
        i = j
    return chunks


def _chunk_head(words: list[Word], start: int, end: int) -> int:
    head = -1
    for k in range(start, end):
        if words[k].upos in ("NOUN", "PROPN"):
            head = k
    return head if head >= 0 else end - 1


def _previous_adj(words, start, position):
    for k in range(position - 1, start - 1, -1):
        if words[k].upos == "ADJ":
            return k
    return None


def _attach_chunk_internals(words, start, end, head) -> None:
    pending_conj_anchor: int | None = None
    for k in range(start, end):
        if k == head:
            continue
        w = words[k]
        if w.upos == "DET":
            w.head, w.deprel = head + 1, "det"
        elif w.upos == "NUM":
            anchor = k - 1 if k > start and words[k - 1].upos in NOMINAL else head
            w.head, w.deprel = anchor + 1, "nummod"
        elif w.upos == "ADJ":
            if pending_conj_anchor is not None:
                w.head, w.deprel = pending_conj_anchor + 1, "conj"
                pending_conj_anchor = None
            else:
                w.head, w.deprel = head + 1, "amod"
        elif w.upos == "CCONJ":
            w.head, w.deprel = k + 2, "cc"  # the adjective that follows
            pending_conj_anchor = _previous_adj(words, start, k)
        elif w.upos in NOMINAL:
            w.head, w.deprel = head + 1, "compound"


def _group_chunks(words, chunks):
    """Classify each chunk: PP object, apposition, or NP (with absorbed
    comma/cc conjunct chunks)."""
    infos = [
        {"start": start, "end": end, "head": _chunk_head(words, start, end)}
        for start, end in chunks
    ]
    groups = []
    used = set()
    last_np_anchor: int | None = None
    for idx, info in enumerate(infos):
        if idx in used:
            continue
        start, head = info["start"], info["head"]
        prev = words[start - 1] if start > 0 else None
        if prev is not None and prev.upos == "ADP":
            attach = last_np_anchor if last_np_anchor is not None else None
            groups.append({"role": "pp", "anchor": head, "attach": attach,
                           "prep_lemma": prev.lemma, "conjuncts": []})
            used.add(idx)
            continue
        if idx > 0 and prev is not None and prev.surface in ("(", ","):
            closer = words[info["end"]] if info["end"] < len(words) else None
            paren = prev.surface == "(" and closer is not None and closer.surface == ")"
            allcaps = words[head].surface.isupper() and len(words[head].surface) >= 2
            has_det = words[start].upos == "DET"
            comma_appos = (
                prev.surface == ","
                and (allcaps or has_det)
                and not _continues_list(words, infos, idx)
            )
            if paren or comma_appos:
                attach = last_np_anchor if last_np_anchor is not None else infos[idx - 1]["head"]
                groups.append({"role": "appos", "anchor": head, "attach": attach,
                               "conjuncts": []})
                used.add(idx)
                continue
        group = {"role": "np", "anchor": head, "conjuncts": []}
        j = idx
        while j + 1 < len(infos):
            gap = [words[g] for g in range(infos[j]["end"], infos[j + 1]["start"])]
            if gap and all(t.surface == "," or t.upos == "CCONJ" for t in gap) and \
                    _list_like(words, infos, j + 1):
                group["conjuncts"].append(infos[j + 1]["head"])
                used.add(j + 1)
                j += 1
            else:
                break
        groups.append(group)
        used.add(idx)
        last_np_anchor = head
    return groups


def _continues_list(words, infos, idx):
    """True when this comma-joined chunk is part of an 'A, B and C' list."""
    for j in range(idx, len(infos)):
        end = infos[j]["end"]
        nxt = words[end] if end < len(words) else None
        if nxt is not None and nxt.upos == "CCONJ":
            return True
        if j + 1 < len(infos):
            gap = [words[g] for g in range(end, infos[j + 1]["start"])]
            if not gap or not all(t.surface == "," or t.upos == "CCONJ" for t in gap):
                return False
        else:
            return False
    return False


def _list_like(words, infos, candidate):
    gap = [words[g] for g in range(infos[candidate - 1]["end"], infos[candidate]["start"])]
    if any(t.upos == "CCONJ" for t in gap):
        return True
    return _continues_list(words, infos, candidate)


def _pp_object(words, chunks, adp_index):
    for start, end in chunks:
        if start > adp_index:
            return _chunk_head(words, start, end)
    return None


def _punct_target(words, k, root):
    if words[k].surface == "(" and k + 1 < len(words):
        return k + 1
    if words[k].surface == ")" and k - 1 >= 0:
        return k - 1
    if words[k].surface == "," and k + 1 < len(words) and words[k + 1].deprel in ("conj", "appos"):
        return k + 1
    return root


def parse_sentence(words: list[Word]) -> list[Word]:
    """Fill head/deprel for one tagged sentence; guarantees one root."""
    chunks = _find_chunks(words)
    root = next((k for k, w in enumerate(words) if w.upos == "VERB"), None)
    if root is None:
        root = _chunk_head(words, *chunks[0]) if chunks else 0

    for start, end in chunks:
        _attach_chunk_internals(words, start, end, _chunk_head(words, start, end))

    groups = _group_chunks(words, chunks)
    seen_subject = False
    object_taken = False
    for group in groups:
        anchor = group["anchor"]
        if anchor != root:
            role = group["role"]
            if role == "pp":
                attach = group["attach"]
                if group["prep_lemma"] == "of" and attach is not None and attach != anchor:
                    words[anchor].head, words[anchor].deprel = attach + 1, "nmod"
                else:
                    words[anchor].head, words[anchor].deprel = root + 1, "obl"
            elif role == "appos":
                words[anchor].head, words[anchor].deprel = group["attach"] + 1, "appos"
            elif not seen_subject and anchor < root:
                words[anchor].head, words[anchor].deprel = root + 1, "nsubj"
                seen_subject = True
            elif anchor > root and not object_taken:
                words[anchor].head, words[anchor].deprel = root + 1, "obj"
                object_taken = True
            else:
                words[anchor].head, words[anchor].deprel = root + 1, "obl"
        for conjunct in group["conjuncts"]:
            if conjunct != root:
                words[conjunct].head, words[conjunct].deprel = anchor + 1, "conj"

    words[root].head, words[root].deprel = 0, "root"

    for k, w in enumerate(words):
        if w.deprel:
            continue
        if w.upos == "AUX":
            w.head, w.deprel = root + 1, "aux"
        elif w.upos == "ADV":
            w.head, w.deprel = root + 1, "advmod"
        elif w.upos == "ADP":
            target = _pp_object(words, chunks, k)
            w.head, w.deprel = (target + 1, "case") if target is not None else (root + 1, "dep")
        elif w.upos == "CCONJ":
            target = next((j for j in range(k + 1, len(words))
                           if words[j].deprel == "conj"), None)
            w.head, w.deprel = (target + 1, "cc") if target is not None else (root + 1, "cc")
        elif w.upos == "PRON":
            if k < root and not any(x.deprel == "nsubj" for x in words):
                w.head, w.deprel = root + 1, "nsubj"
            else:
                w.head, w.deprel = root + 1, "obl"
        elif w.upos == "PUNCT":
            w.head, w.deprel = _punct_target(words, k, root) + 1, "punct"
        else:
            w.head, w.deprel = root + 1, "dep"
    words[root].head, words[root].deprel = 0, "root"
    return words


def to_conllu(doc_id: str, abstract: str) -> str:
    """Convert one abstract into a CoNLL-U document block."""
    lines = [f"# newdoc id = {doc_id}"]
    for s_index, sentence in enumerate(split_sentences(abstract), start=1):
        tokens = tokenize(sentence)
        if not tokens:
            continue
        words = parse_sentence(tag(tokens))
        lines.append(f"# sent_id = {s_index}")
        lines.append(f"# text = {sentence}")
        for t_index, word in enumerate(words, start=1):
            lines.append(
                f"{t_index}\t{word.surface}\t{word.lemma}\t{word.upos}\t_\t_"
                f"\t{word.head}\t{word.deprel}\t_\t_"
            )
        lines.append("")
    return "\n".join(lines) + "\n"


def corpus_to_conllu(records: list[dict]) -> str:
    """Convert corpus JSONL records (skipping empty abstracts) to CoNLL-U."""
    blocks = []
    for rec in records:
        abstract = (rec.get("abstract") or "").strip()
        if not abstract:
            continue
        blocks.append(to_conllu(rec["id"], abstract))
    return "".join(blocks)
