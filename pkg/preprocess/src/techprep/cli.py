"""techprep: fetch a corpus from a Scopus-compatible API (or replay a
recorded one) and turn abstracts into the CoNLL-U + annotation files the
downstream pipeline consumes."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import client, heads, nlp

log = logging.getLogger("techprep")


def cmd_fetch(args) -> int:
    if args.offline is None and args.query is None and args.concept_terms is None:
        log.error("provide --query or --concept-terms (or --offline for replay)")
        return 1
    query = args.query or ""
    if args.concept_terms:
        query = client.build_query(client.load_concept_terms(args.concept_terms))
    job = client.FetchJob(
        query=query,
        out_path=Path(args.out),
        cursor_path=Path(args.cursor),
        base_url=args.base_url,
        date_range=args.date_range,
        rate_limit_rps=args.rps,
        page_size=args.page_size,
        offline_dir=Path(args.offline) if args.offline else None,
    )
    try:
        count = client.fetch(job)
    except client.QuotaExhausted as exc:
        log.warning("%s", exc)
        return 0  # partial output + cursor persisted; rerun resumes
    except client.AuthError as exc:
        log.error("%s", exc)
        return 1
    log.info("fetched %d records into %s", count, args.out)
    return 0


def cmd_to_conllu(args) -> int:
    records = []
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    text = nlp.corpus_to_conllu(records)
    Path(args.out).write_text(text, encoding="utf-8")
    log.info("wrote %s (%d documents)", args.out,
             sum(1 for r in records if (r.get("abstract") or "").strip()))
    return 0


def cmd_suggest_heads(args) -> int:
    gazetteer = heads.load_gazetteer(args.gazetteer)
    conllu_text = Path(args.conllu).read_text(encoding="utf-8")
    suggestions = heads.suggest_heads(conllu_text, gazetteer)
    heads.write_annotations(suggestions, args.out)
    log.info("wrote %d suggestions to %s", len(suggestions), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="techprep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    fetch = sub.add_parser("fetch", help="retrieve a corpus (live or recorded replay)")
    fetch.add_argument("--query", help="raw search query")
    fetch.add_argument("--concept-terms", help="TSV of canonical<TAB>variants to build the query")
    fetch.add_argument("--base-url", default="https://api.example.com/content/search/scopus")
    fetch.add_argument("--date-range", default=None, help="e.g. 2011-2020")
    fetch.add_argument("--rps", type=float, default=5.0, help="max requests per second")
    fetch.add_argument("--page-size", type=int, default=client.DEFAULT_PAGE_SIZE)
    fetch.add_argument("--offline", default=None, help="directory of recorded page_*.json")
    fetch.add_argument("--cursor", default="fetch_cursor.json")
    fetch.add_argument("--out", required=True, help="corpus JSONL output")
    fetch.set_defaults(func=cmd_fetch)

    conv = sub.add_parser("to-conllu", help="parse corpus abstracts into CoNLL-U")
    conv.add_argument("--corpus", required=True)
    conv.add_argument("--out", required=True)
    conv.set_defaults(func=cmd_to_conllu)

    sugg = sub.add_parser("suggest-heads", help="emit head-annotation JSONL from CoNLL-U")
    sugg.add_argument("--conllu", required=True)
    sugg.add_argument("--gazetteer", required=True)
    sugg.add_argument("--out", required=True)
    sugg.set_defaults(func=cmd_suggest_heads)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
