"""Command-line pipeline: ingest -> extract -> build -> analyze -> layout ->
export, plus report and the all-in-one pipeline command.

Each stage persists its outputs in the configured output directory together
with a manifest of input/output hashes, so stages are re-runnable and the
whole output tree is reproducible byte for byte for a fixed config + seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import analyze as analysis
from . import config as config_mod
from . import exports, extract, layout as layout_mod, manifest as manifest_mod
from .conllu import read_conllu_file
from .corpus import (
    deduplicate,
    filter_year_window,
    load_concept_terms,
    load_corpus,
    tag_search_terms,
    term_year_histogram,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    StageError,
    TechmapError,
)
from .extract import DocumentTerms
from .graph import PeriodScheme, TechnologyGraph, build_graph, dump_csv, filter_graph, load_csv
from .layout import LayoutError, LayoutParams

log = logging.getLogger("techmap")


# ---------------------------------------------------------------------------
# stage helpers


def _require(out_dir: Path, filename: str, producer: str) -> Path:
    path = out_dir / filename
    if not path.exists():
        raise StageError(f"missing {filename}; run {producer} first")
    return path


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _load_graph(out_dir: Path) -> TechnologyGraph:
    nodes = _require(out_dir, "graph_nodes.csv", "build")
    edges = _require(out_dir, "graph_edges.csv", "build")
    meta = _require(out_dir, "graph_meta.json", "build")
    return load_csv(nodes, edges, meta)


def _build_recognizer(cfg):
    mode = cfg.mode
    if mode == "annotation":
        cfg.validate_inputs(["annotations"])
        return extract.AnnotationRecognizer.from_jsonl(cfg.path("annotations"))
    lexicons = _build_lexicons(cfg)
    if mode == "gazetteer":
        return extract.GazetteerRecognizer(lexicons)
    if mode == "heuristic":
        return extract.HeuristicRecognizer()
    raise ConfigError(f"unknown extraction mode {mode!r}")


def _build_lexicons(cfg) -> extract.Lexicons:
    concept_terms = load_concept_terms(cfg.path("concept_terms"))
    return extract.load_lexicons(
        gazetteer_path=cfg.path("gazetteer"),
        blacklist_path=cfg.path("blacklist"),
        leading_words_path=cfg.path("leading_words"),
        head_suffix_path=cfg.path("head_suffix_rules"),
        concept_terms=concept_terms,
    )


# ---------------------------------------------------------------------------
# stages


def cmd_ingest(cfg) -> None:
    cfg.validate_inputs(["corpus", "concept_terms"])
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = None if cfg.corpus_format == "auto" else cfg.corpus_format
    docset = load_corpus(cfg.path("corpus"), fmt=fmt, skip_malformed=cfg.skip_malformed)
    docset, dropped = filter_year_window(docset, cfg.min_year, cfg.max_year)
    if dropped:
        log.warning("%d documents outside the year window were dropped", dropped)
    docset, dedup_report = deduplicate(docset)
    terms = load_concept_terms(cfg.path("concept_terms"))
    docset = tag_search_terms(docset, terms, whole_word=cfg.whole_word)
    if len(docset) == 0:
        log.warning("corpus is empty after filtering")

    corpus_out = out_dir / "corpus.jsonl"
    with open(corpus_out, "w", encoding="utf-8") as fh:
        for doc in docset:
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "title": doc.title,
                        "abstract": doc.abstract,
                        "year": doc.year,
                        "author_keywords": doc.author_keywords,
                        "first_author_country": doc.first_author_country,
                        "retracted": doc.retracted,
                        "concept_tags": sorted(doc.concept_tags),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    _write_json(
        out_dir / "dedup_report.json",
        {
            "removed": [
                {"id": doc_id, "reason": reason, "kept": kept}
                for doc_id, reason, kept in dedup_report.removed
            ],
            "n_retracted": dedup_report.n_retracted,
            "n_duplicates": dedup_report.n_duplicates,
            "dropped_outside_window": dropped,
        },
    )
    histogram = term_year_histogram(docset)
    with open(out_dir / "histogram.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in histogram.rows():
            writer.writerow(row)
    manifest_mod.write_manifest(
        out_dir,
        "ingest",
        inputs={
            str(cfg.path("corpus")): cfg.path("corpus"),
            str(cfg.path("concept_terms")): cfg.path("concept_terms"),
        },
        outputs={
            "corpus.jsonl": corpus_out,
            "dedup_report.json": out_dir / "dedup_report.json",
            "histogram.csv": out_dir / "histogram.csv",
        },
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
    )
    log.info("ingest: %d documents kept", len(docset))


def cmd_extract(cfg) -> None:
    cfg.validate_inputs(["conllu"])
    out_dir = cfg.output_dir
    corpus_path = _require(out_dir, "corpus.jsonl", "ingest")

    years: dict[str, int] = {}
    extractable: dict[str, bool] = {}
    with open(corpus_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                years[rec["id"]] = rec["year"]
                extractable[rec["id"]] = bool(str(rec.get("abstract", "")).strip())

    parsed = read_conllu_file(cfg.path("conllu"))
    known = []
    for doc in parsed:
        if doc.doc_id not in years:
            log.warning("parsed document %s not in corpus; skipped", doc.doc_id)
            continue
        if not extractable.get(doc.doc_id, True):
            log.warning("document %s has an empty abstract; skipped", doc.doc_id)
            continue
        known.append(doc)

    recognizer = _build_recognizer(cfg)
    lexicons = _build_lexicons(cfg)
    results, report = extract.extract_corpus(
        known, recognizer, lexicons, years=years, workers=cfg.threads
    )

    terms_out = out_dir / "terms.jsonl"
    with open(terms_out, "w", encoding="utf-8") as fh:
        for doc_terms in results:
            fh.write(
                json.dumps(
                    {
                        "doc_id": doc_terms.doc_id,
                        "year": doc_terms.year,
                        "sentences": [sorted(s) for s in doc_terms.sentence_terms],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    _write_json(
        out_dir / "extraction_report.json",
        {
            "documents": report.documents,
            "mentions": report.mentions,
            "accepted": report.accepted,
            "rejections": dict(sorted(report.rejections.items())),
            "terms_per_document": dict(sorted(report.terms_per_document.items())),
        },
    )
    manifest_mod.write_manifest(
        out_dir,
        "extract",
        inputs={str(cfg.path("conllu")): cfg.path("conllu"), "corpus.jsonl": corpus_path},
        outputs={
            "terms.jsonl": terms_out,
            "extraction_report.json": out_dir / "extraction_report.json",
        },
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
    )
    log.info("extract: %d documents, %d mentions, %d accepted",
             report.documents, report.mentions, report.accepted)


def _read_terms(path) -> list[DocumentTerms]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            out.append(
                DocumentTerms(
                    doc_id=rec["doc_id"],
                    year=rec["year"],
                    sentence_terms=[set(s) for s in rec["sentences"]],
                )
            )
    return out


def cmd_build(cfg) -> None:
    out_dir = cfg.output_dir
    terms_path = _require(out_dir, "terms.jsonl", "extract")
    corpus_terms = _read_terms(terms_path)
    scheme = None
    years = [t.year for t in corpus_terms if t.year is not None]
    if years:
        anchor = cfg.anchor_year if cfg.anchor_year is not None else min(years)
        scheme = PeriodScheme.two_year(anchor, max(years), window=cfg.window)
    graph = build_graph(corpus_terms, scheme, semantic=cfg.semantic_links)
    if cfg.min_node_weight > 0:
        graph = filter_graph(graph, cfg.min_node_weight)
    if graph.n_nodes == 0:
        log.warning("graph is empty")
    dump_csv(
        graph,
        out_dir / "graph_nodes.csv",
        out_dir / "graph_edges.csv",
        out_dir / "graph_meta.json",
    )
    manifest_mod.write_manifest(
        out_dir,
        "build",
        inputs={"terms.jsonl": terms_path},
        outputs={
            "graph_nodes.csv": out_dir / "graph_nodes.csv",
            "graph_edges.csv": out_dir / "graph_edges.csv",
            "graph_meta.json": out_dir / "graph_meta.json",
        },
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
    )
    log.info("build: %d nodes, %d edges", graph.n_nodes, graph.n_edges)


def _delta_periods(cfg, scheme: PeriodScheme):
    if cfg.delta_from and cfg.delta_to:
        return scheme.by_label(cfg.delta_from), scheme.by_label(cfg.delta_to)
    if len(scheme.periods) >= 2:
        return scheme.periods[-2], scheme.periods[-1]
    return None


def cmd_analyze(cfg) -> None:
    out_dir = cfg.output_dir
    graph = _load_graph(out_dir)
    if graph.n_nodes == 0 or graph.n_edges == 0:
        log.warning("graph has no edges; writing empty analysis outputs")
        _write_json(out_dir / "clusters.json",
                    {"membership": {}, "modularity_q": 0.0,
                     "resolution": cfg.resolution, "seed": cfg.seed})
        for name in ("node_metrics.csv", "ri_matrix.csv", "trends.csv", "bridging.csv"):
            (out_dir / name).write_text("", encoding="utf-8")
        _write_json(out_dir / "summary.json", _empty_summary(cfg, graph))
        _analyze_manifest(cfg, out_dir)
        return

    degrees = analysis.weighted_degree(graph)
    centrality = analysis.eigenvector_centrality(
        graph, tol=cfg.ev_tolerance, max_iter=cfg.ev_max_iter
    )
    clusters = analysis.louvain(graph, resolution=cfg.resolution, seed=cfg.seed)
    shares, mean_share = analysis.intra_cluster_share(graph, clusters)
    bridging = analysis.bridging_technologies(
        graph, clusters, strong_thresh=cfg.strong_threshold, medium_thresh=cfg.medium_threshold
    )
    ri = analysis.cluster_ri_matrix(graph, clusters)
    trends = analysis.cluster_share_timeseries(
        graph, clusters, recluster_each_period=cfg.per_period_clusters
    )

    metrics: dict[str, dict[int, float]] = {
        "weighted_degree": degrees,
        "eigenvector": centrality,
        "intra_cluster_share": shares,
    }
    from .graph import slice_period

    for period in graph.scheme.periods:
        sliced = slice_period(graph, period)
        period_degree: dict[int, float] = {}
        period_ev: dict[int, float] = {}
        if sliced.n_nodes:
            slice_deg = analysis.weighted_degree(sliced)
            for node in sliced.nodes:
                period_degree[graph.node_by_label(node.label).node_id] = slice_deg[node.node_id]
        if sliced.n_nodes and sliced.n_edges:
            ev = analysis.eigenvector_centrality(
                sliced, tol=cfg.ev_tolerance, max_iter=cfg.ev_max_iter
            )
            for node in sliced.nodes:
                period_ev[graph.node_by_label(node.label).node_id] = ev[node.node_id]
        metrics[f"degree_{period.label}"] = period_degree
        metrics[f"ev_{period.label}"] = period_ev

    delta_pair = _delta_periods(cfg, graph.scheme)
    if delta_pair is not None:
        delta = analysis.centrality_delta(
            graph, graph.scheme, delta_pair[0], delta_pair[1],
            tol=cfg.ev_tolerance, max_iter=cfg.ev_max_iter,
        )
        metrics[f"ev_delta_{delta_pair[0].label}_to_{delta_pair[1].label}"] = delta
    else:
        delta = None

    _write_json(
        out_dir / "clusters.json",
        {
            "membership": {
                node.label: clusters.membership[node.node_id] for node in graph.nodes
            },
            "modularity_q": clusters.modularity_q,
            "resolution": clusters.resolution,
            "seed": clusters.seed,
            "n_clusters": clusters.n_clusters,
        },
    )
    exports.write_node_metrics_csv(graph, clusters, metrics, out_dir / "node_metrics.csv")
    exports.write_ri_csv(ri, out_dir / "ri_matrix.csv")
    exports.write_trends_csv(trends, out_dir / "trends.csv")
    exports.write_bridging_csv(graph, bridging, clusters, out_dir / "bridging.csv")

    def top(metric: dict[int, float], k: int) -> list[list]:
        ranked = sorted(
            ((graph.nodes[n].label, v) for n, v in metric.items()),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return [[label, value] for label, value in ranked[:k]]

    summary = {
        "nodes": graph.n_nodes,
        "edges": graph.n_edges,
        "clusters": clusters.n_clusters,
        "modularity_q": clusters.modularity_q,
        "mean_intra_cluster_share": mean_share,
        "top_by_degree": top(degrees, cfg.top_k),
        "top_by_eigenvector": top(centrality, cfg.top_k),
        "delta_periods": [p.label for p in delta_pair] if delta_pair else None,
        "risers": top(delta, cfg.top_k) if delta else [],
        "fallers": (
            [[label, value] for label, value in
             sorted(((graph.nodes[n].label, v) for n, v in delta.items()),
                    key=lambda pair: (pair[1], pair[0]))[:cfg.top_k]]
            if delta else []
        ),
        "overflow_documents": graph.overflow_documents,
        "bridging_count": len(bridging),
    }
    _write_json(out_dir / "summary.json", summary)
    _analyze_manifest(cfg, out_dir)
    log.info("analyze: %d clusters, Q=%.4f, mean intra share %.3f",
             clusters.n_clusters, clusters.modularity_q, mean_share)


def _empty_summary(cfg, graph) -> dict:
    return {
        "nodes": graph.n_nodes,
        "edges": graph.n_edges,
        "clusters": 0,
        "modularity_q": 0.0,
        "mean_intra_cluster_share": 0.0,
        "top_by_degree": [],
        "top_by_eigenvector": [],
        "delta_periods": None,
        "risers": [],
        "fallers": [],
        "overflow_documents": graph.overflow_documents,
        "bridging_count": 0,
    }


def _analyze_manifest(cfg, out_dir) -> None:
    manifest_mod.write_manifest(
        out_dir,
        "analyze",
        inputs={
            "graph_nodes.csv": out_dir / "graph_nodes.csv",
            "graph_edges.csv": out_dir / "graph_edges.csv",
            "graph_meta.json": out_dir / "graph_meta.json",
        },
        outputs={
            name: out_dir / name
            for name in (
                "clusters.json",
                "node_metrics.csv",
                "ri_matrix.csv",
                "trends.csv",
                "bridging.csv",
                "summary.json",
            )
        },
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
    )


def cmd_layout(cfg) -> None:
    out_dir = cfg.output_dir
    graph = _load_graph(out_dir)
    positions: dict[str, tuple[float, float]] = {}
    if graph.n_nodes:
        params = LayoutParams(
            k_repulsion=cfg.k_repulsion,
            gravity=cfg.gravity,
            edge_weight_influence=cfg.edge_weight_influence,
            use_barnes_hut=cfg.use_barnes_hut,
            theta=cfg.theta,
        )
        result = layout_mod.run(
            graph,
            params,
            max_iter=cfg.iterations,
            eps=cfg.layout_eps,
            seed=cfg.seed,
            backend=cfg.backend,
        )
        positions = result.positions
        log.info("layout: %d iterations on %s backend (converged=%s)",
                 result.iterations, result.backend, result.converged)
    else:
        log.warning("graph is empty; writing empty positions")
    exports.write_positions_csv(positions, out_dir / "positions.csv")
    manifest_mod.write_manifest(
        out_dir,
        "layout",
        inputs={
            "graph_nodes.csv": out_dir / "graph_nodes.csv",
            "graph_edges.csv": out_dir / "graph_edges.csv",
        },
        outputs={"positions.csv": out_dir / "positions.csv"},
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
    )


def _read_clusters(out_dir, graph):
    path = out_dir / "clusters.json"
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not payload["membership"]:
        return None
    membership = {
        graph.node_by_label(label).node_id: cluster
        for label, cluster in payload["membership"].items()
        if graph.has_label(label)
    }
    return analysis.ClusterAssignment(
        membership=membership,
        modularity_q=payload["modularity_q"],
        resolution=payload["resolution"],
        seed=payload["seed"],
    )


def _read_metrics(out_dir, graph) -> dict[str, dict[int, float]]:
    path = out_dir / "node_metrics.csv"
    if not path.exists():
        return {}
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return {}
    titles = rows[0][2:]
    metrics: dict[str, dict[int, float]] = {t: {} for t in titles}
    for row in rows[1:]:
        if not graph.has_label(row[0]):
            continue
        node_id = graph.node_by_label(row[0]).node_id
        for title, value in zip(titles, row[2:]):
            metrics[title][node_id] = float(value)
    return metrics


def cmd_export(cfg) -> None:
    out_dir = cfg.output_dir
    graph = _load_graph(out_dir)
    clusters = _read_clusters(out_dir, graph)
    metrics = _read_metrics(out_dir, graph)
    positions = None
    if (out_dir / "positions.csv").exists():
        positions = exports.read_positions_csv(out_dir / "positions.csv")
    outputs = {}
    if cfg.gexf:
        exports.write_gexf(
            graph,
            out_dir / "graph.gexf",
            clusters=clusters,
            node_metrics=metrics,
            positions=positions,
        )
        exports.validate_gexf(out_dir / "graph.gexf")
        outputs["graph.gexf"] = out_dir / "graph.gexf"
    if cfg.json:
        exports.write_graph_json(
            graph,
            out_dir / "graph.json",
            clusters=clusters,
            node_metrics=metrics,
            positions=positions,
            meta={"seed": cfg.seed, "config_hash": cfg.config_hash()},
        )
        outputs["graph.json"] = out_dir / "graph.json"
    manifest_mod.write_manifest(
        out_dir,
        "export",
        inputs={
            "graph_nodes.csv": out_dir / "graph_nodes.csv",
            "graph_edges.csv": out_dir / "graph_edges.csv",
        },
        outputs=outputs,
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
    )
    log.info("export: wrote %s", ", ".join(sorted(outputs)))


def cmd_report(cfg) -> str:
    out_dir = cfg.output_dir
    summary_path = _require(out_dir, "summary.json", "analyze")
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    lines = [
        "technology map report",
        "=====================",
        f"nodes:                  {summary['nodes']}",
        f"edges:                  {summary['edges']}",
        f"clusters:               {summary['clusters']}",
        f"modularity Q:           {summary['modularity_q']:.4f}",
        f"mean intra-cluster share: {summary['mean_intra_cluster_share']:.4f}",
    ]
    if summary["nodes"] == 0:
        lines.append("warning: empty graph")
    if summary.get("delta_periods"):
        lines.append(f"delta window:           {summary['delta_periods'][0]} -> "
                     f"{summary['delta_periods'][1]}")

    def section(title, rows):
        lines.append("")
        lines.append(title)
        for label, value in rows:
            lines.append(f"  {label:<40s} {value:.6f}")

    section("top by weighted degree:", summary["top_by_degree"])
    section("top by eigenvector centrality:", summary["top_by_eigenvector"])
    if summary["risers"]:
        section("fastest risers (eigenvector delta):", summary["risers"])
        section("fastest fallers (eigenvector delta):", summary["fallers"])
    text = "\n".join(lines) + "\n"
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return text


def cmd_pipeline(cfg) -> None:
    cmd_ingest(cfg)
    cmd_extract(cfg)
    cmd_build(cfg)
    cmd_analyze(cfg)
    cmd_layout(cfg)
    cmd_export(cfg)
    cmd_report(cfg)


def cmd_verify(cfg) -> None:
    errors = manifest_mod.verify_chain(cfg.output_dir)
    if errors:
        for err in errors:
            log.error("%s", err)
        raise StageError(f"manifest chain verification failed ({len(errors)} problems)")
    log.info("manifest chain OK")


# ---------------------------------------------------------------------------
# argument parsing


_COMMANDS = {
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "build": cmd_build,
    "analyze": cmd_analyze,
    "layout": cmd_layout,
    "export": cmd_export,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="techmap",
        description="corpus-to-technology-map pipeline",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS), help="pipeline stage to run")
    parser.add_argument("--config", help="INI config file", default=None)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    for section, key, kind, default, help_text in config_mod.registry():
        flag = "--" + key.replace("_", "-")
        parser.add_argument(
            flag,
            dest=f"opt_{key}",
            default=None,
            metavar=kind.upper().replace("OPT", ""),
            help=f"[{section}] {help_text} (default: {default})",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = {
        key: getattr(args, f"opt_{key}")
        for _, key, _, _, _ in config_mod.registry()
        if getattr(args, f"opt_{key}") is not None
    }
    try:
        cfg = config_mod.load_config(args.config, overrides)
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except (ConvergenceError, LayoutError) as exc:
        log.error("%s", exc)
        return 3
    except TechmapError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
