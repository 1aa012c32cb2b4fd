"""Head-candidate suggestions over CoNLL-U output.

Emits the downstream head-annotation JSONL ({doc_id, sent_id, token_index})
for every noun whose lemma appears in a seed gazetteer. A model-based
suggester could slot in here; the gazetteer is the shipped default.
"""
from __future__ import annotations

import json

NOUN_TAGS = {"NOUN", "PROPN"}


def load_gazetteer(path) -> frozenset[str]:
    out = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip().lower()
            if line and not line.startswith("#"):
                out.add(line)
    return frozenset(out)


def suggest_heads(conllu_text: str, gazetteer: frozenset[str]) -> list[dict]:
    """Scan token lines; no tree needed, so this stays format-tolerant."""
    suggestions = []
    doc_id = None
    sent_id = None
    for line in conllu_text.splitlines():
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("newdoc id"):
                doc_id = comment.partition("=")[2].strip()
            elif comment.startswith("sent_id"):
                sent_id = comment.partition("=")[2].strip()
            continue
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 10 or "-" in cols[0] or "." in cols[0]:
            continue
        if cols[3] in NOUN_TAGS and cols[2].lower() in gazetteer:
            suggestions.append(
                {"doc_id": doc_id, "sent_id": sent_id, "token_index": int(cols[0])}
            )
    return suggestions


def write_annotations(suggestions: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in suggestions:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
