"""CoNLL-U reader for dependency-parsed abstracts.

Input contract: UTF-8, 10 tab-separated columns per token line, documents
delimited by `# newdoc id = <doc_id>` comments and sentences by
`# sent_id = <n>`. Multiword-token ranges (`1-2`) and empty nodes (`1.1`)
are skipped; the basic tree must have contiguous 1-based indices and exactly
one root per sentence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConlluFormatError


@dataclass(frozen=True)
class Token:
    index: int          # 1-based within the sentence
    surface: str
    lemma: str
    upos: str
    head: int           # 0 = root
    deprel: str


@dataclass
class Sentence:
    sent_id: str
    tokens: list[Token]

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Look up a token by its 1-based index."""
        return self.tokens[index - 1]

    def children(self, index: int) -> list[Token]:
        return [t for t in self.tokens if t.head == index]


@dataclass
class ParsedDocument:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)


def _validate_sentence(sent: Sentence, line_no: int) -> None:
    n = len(sent.tokens)
    roots = 0
    for expected, tok in enumerate(sent.tokens, start=1):
        if tok.index != expected:
            raise ConlluFormatError(
                f"sentence {sent.sent_id!r}: token indices not contiguous "
                f"(expected {expected}, got {tok.index})",
                line_no,
            )
        if not (0 <= tok.head <= n):
            raise ConlluFormatError(
                f"sentence {sent.sent_id!r}: head {tok.head} out of range", line_no
            )
        if tok.head == tok.index:
            raise ConlluFormatError(
                f"sentence {sent.sent_id!r}: token {tok.index} is its own head", line_no
            )
        if not tok.deprel:
            raise ConlluFormatError(
                f"sentence {sent.sent_id!r}: empty deprel on token {tok.index}", line_no
            )
        if tok.head == 0:
            roots += 1
    if n and roots != 1:
        raise ConlluFormatError(
            f"sentence {sent.sent_id!r}: expected exactly one root, found {roots}", line_no
        )


def parse_conllu(stream) -> list[ParsedDocument]:
    """Parse a CoNLL-U text stream (file object or string) into documents."""
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = (line.rstrip("\n") for line in stream)

    docs: list[ParsedDocument] = []
    doc: ParsedDocument | None = None
    sent_id: str | None = None
    tokens: list[Token] = []
    sent_start_line = 0

    def flush(line_no: int) -> None:
        nonlocal tokens, sent_id
        if not tokens:
            sent_id = None
            return
        if doc is None:
            raise ConlluFormatError("token line before any '# newdoc id =' comment", line_no)
        sent = Sentence(sent_id=sent_id if sent_id is not None else str(len(doc.sentences) + 1),
                        tokens=tokens)
        _validate_sentence(sent, sent_start_line)
        doc.sentences.append(sent)
        tokens = []
        sent_id = None

    line_no = 0
    saw_nothing_but_blank = True
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush(line_no)
            continue
        saw_nothing_but_blank = False
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("newdoc id"):
                flush(line_no)
                _, _, value = comment.partition("=")
                doc_id = value.strip()
                if not doc_id:
                    raise ConlluFormatError("empty newdoc id", line_no)
                doc = ParsedDocument(doc_id=doc_id)
                docs.append(doc)
            elif comment.startswith("sent_id"):
                flush(line_no)
                _, _, value = comment.partition("=")
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluFormatError(f"expected 10 tab-separated columns, got {len(cols)}", line_no)
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue  # multiword-token range / empty node
        if not tokens:
            sent_start_line = line_no
        try:
            index = int(tok_id)
            head = int(cols[6])
        except ValueError:
            raise ConlluFormatError(f"non-integer ID or HEAD column: {tok_id!r}/{cols[6]!r}", line_no)
        tokens.append(
            Token(
                index=index,
                surface=cols[1],
                lemma=cols[2],
                upos=cols[3],
                head=head,
                deprel=cols[7],
            )
        )
    flush(line_no + 1)
    if not docs:
        if line_no == 0 or saw_nothing_but_blank:
            return []  # empty stream: no documents
        raise ConlluFormatError("no '# newdoc id =' comment found in input")
    return docs


def read_conllu_file(path) -> list[ParsedDocument]:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh)
