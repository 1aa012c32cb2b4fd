"""Technology graph construction.

Nodes are normalised terms; edge weights combine two link kinds:

* co-occurrence — every unordered term pair sharing an abstract gets one
  raw count, pairs sharing a sentence get one more, and each document's raw
  counts are normalised to sum to 1 so every article influences the map
  equally;
* semantic — a term whose token sequence is a strict contiguous prefix or
  suffix of another term's is linked to it, with one global weight s chosen
  so the semantic total equals the co-occurrence total.

Per-period weight breakdowns (default: consecutive two-year windows) drive
the temporal analyses.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from .errors import GraphError
from .extract import DocumentTerms

log = logging.getLogger(__name__)

# Documents whose year falls outside the period scheme land here.
OVERFLOW_PERIOD_LABEL = "overflow"


@dataclass(frozen=True, order=True)
class Period:
    start_year: int
    end_year: int  # inclusive

    def __post_init__(self):
        if self.end_year < self.start_year:
            raise GraphError(f"period end {self.end_year} before start {self.start_year}")

    def contains(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year

    @property
    def label(self) -> str:
        if self.start_year == Period.OVERFLOW_YEAR:
            return OVERFLOW_PERIOD_LABEL
        return f"{self.start_year}_{self.end_year}"

    OVERFLOW_YEAR = -1


OVERFLOW_PERIOD = Period(Period.OVERFLOW_YEAR, Period.OVERFLOW_YEAR)


@dataclass(frozen=True)
class PeriodScheme:
    periods: tuple[Period, ...]

    @classmethod
    def two_year(cls, min_year: int, max_year: int, window: int = 2) -> "PeriodScheme":
        """Consecutive windows anchored at min_year; the last window may
        extend past max_year (trailing partial window)."""
        if max_year < min_year:
            raise GraphError(f"max_year {max_year} before min_year {min_year}")
        if window < 1:
            raise GraphError(f"window must be >= 1, got {window}")
        periods = tuple(
            Period(y, y + window - 1) for y in range(min_year, max_year + 1, window)
        )
        return cls(periods=periods)

    @classmethod
    def from_labels(cls, labels) -> "PeriodScheme":
        periods = []
        for label in labels:
            start, _, end = label.partition("_")
            periods.append(Period(int(start), int(end)))
        return cls(periods=tuple(periods))

    def period_for(self, year: int) -> Period | None:
        for period in self.periods:
            if period.contains(year):
                return period
        return None

    def by_label(self, label: str) -> Period:
        for period in self.periods:
            if period.label == label:
                return period
        raise GraphError(f"unknown period {label!r}")


@dataclass
class TermNode:
    node_id: int
    label: str
    occurrences: dict[Period, int] = field(default_factory=dict)

    @property
    def total_occurrences(self) -> int:
        return sum(self.occurrences.values())


@dataclass
class WeightedEdge:
    u: int  # node ids, u < v
    v: int
    cooc_weight: float = 0.0
    semantic_weight: float = 0.0
    period_cooc: dict[Period, float] = field(default_factory=dict)

    @property
    def total_weight(self) -> float:
        return self.cooc_weight + self.semantic_weight

    @property
    def kind(self) -> str:
        if self.cooc_weight > 0 and self.semantic_weight > 0:
            return "both"
        return "cooc" if self.cooc_weight > 0 else "semantic"


@dataclass
class TechnologyGraph:
    nodes: list[TermNode] = field(default_factory=list)
    edges: dict[tuple[int, int], WeightedEdge] = field(default_factory=dict)
    scheme: PeriodScheme = field(default_factory=lambda: PeriodScheme(periods=()))
    calibration_s: float | None = None
    overflow_documents: int = 0
    _label_index: dict[str, int] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node_by_label(self, label: str) -> TermNode:
        return self.nodes[self._label_index[label]]

    def has_label(self, label: str) -> bool:
        return label in self._label_index

    def ensure_node(self, label: str) -> TermNode:
        idx = self._label_index.get(label)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append(TermNode(node_id=idx, label=label))
            self._label_index[label] = idx
        return self.nodes[idx]

    def edge(self, u: int, v: int) -> WeightedEdge:
        if u == v:
            raise GraphError("self-loops are not allowed")
        key = (u, v) if u < v else (v, u)
        edge = self.edges.get(key)
        if edge is None:
            edge = WeightedEdge(u=key[0], v=key[1])
            self.edges[key] = edge
        return edge

    def total_cooc_weight(self) -> float:
        return sum(e.cooc_weight for e in self.edges.values())

    def total_semantic_weight(self) -> float:
        return sum(e.semantic_weight for e in self.edges.values())

    def sorted_edges(self) -> list[WeightedEdge]:
        return [self.edges[key] for key in sorted(self.edges)]

    def incident_weights(self) -> list[float]:
        """Combined incident weight (weighted degree) per node id."""
        totals = [0.0] * len(self.nodes)
        for edge in self.edges.values():
            w = edge.total_weight
            totals[edge.u] += w
            totals[edge.v] += w
        return totals


def document_link_weights(terms: DocumentTerms) -> dict[tuple[str, str], float]:
    """Per-document link weights, normalised to sum to 1.

    Every unordered pair from the document-level term set counts once; each
    sentence adds one more count for pairs inside that sentence's set.
    Documents with fewer than two terms contribute nothing.
    """
    universe = terms.document_terms
    if len(universe) < 2:
        return {}
    raw: Counter = Counter()
    for pair in combinations(sorted(universe), 2):
        raw[pair] += 1.0
    for sentence_set in terms.sentence_terms:
        for pair in combinations(sorted(sentence_set), 2):
            raw[pair] += 1.0
    total = sum(raw.values())
    return {pair: weight / total for pair, weight in raw.items()}


def build_cooccurrence(
    corpus_terms: list[DocumentTerms], scheme: PeriodScheme | None = None
) -> TechnologyGraph:
    """Accumulate per-document link weights into the full graph.

    Nodes are assigned dense ids in first-seen order (terms sorted within a
    document); all floating accumulation follows document input order, so
    the result is bit-stable for a given input order.
    """
    years = [t.year for t in corpus_terms if t.year is not None]
    if scheme is None:
        if years:
            scheme = PeriodScheme.two_year(min(years), max(years))
        else:
            scheme = PeriodScheme(periods=())
    graph = TechnologyGraph(scheme=scheme)

    for doc_terms in corpus_terms:
        if doc_terms.year is None:
            raise GraphError(f"document {doc_terms.doc_id!r} has no year")
        period = scheme.period_for(doc_terms.year)
        if period is None:
            period = OVERFLOW_PERIOD
            graph.overflow_documents += 1
            log.warning(
                "document %s year %s outside period scheme; assigned to overflow",
                doc_terms.doc_id,
                doc_terms.year,
            )
        for label in sorted(doc_terms.document_terms):
            node = graph.ensure_node(label)
            node.occurrences[period] = node.occurrences.get(period, 0) + 1
        for (a, b), weight in document_link_weights(doc_terms).items():
            edge = graph.edge(graph.node_by_label(a).node_id, graph.node_by_label(b).node_id)
            edge.cooc_weight += weight
            edge.period_cooc[period] = edge.period_cooc.get(period, 0.0) + weight
    return graph


def detect_semantic_pairs(graph: TechnologyGraph) -> set[tuple[int, int]]:
    """Node pairs where one label's token sequence is a strict contiguous
    prefix or suffix of the other's."""
    token_index: dict[tuple[str, ...], int] = {}
    for node in graph.nodes:
        token_index[tuple(node.label.split())] = node.node_id
    pairs: set[tuple[int, int]] = set()
    for node in graph.nodes:
        tokens = tuple(node.label.split())
        k = len(tokens)
        for j in range(1, k):
            for sub in (tokens[:j], tokens[k - j:]):
                other = token_index.get(sub)
                if other is not None and other != node.node_id:
                    a, b = (other, node.node_id) if other < node.node_id else (node.node_id, other)
                    pairs.add((a, b))
    return pairs


def calibrate_semantic_weights(
    graph: TechnologyGraph, pairs: set[tuple[int, int]]
) -> TechnologyGraph:
    """Give every semantic pair the same weight s = total_cooc / n_pairs, so
    the semantic weight total equals the co-occurrence total."""
    if not pairs:
        log.warning("no semantic pairs detected; semantic weights skipped")
        graph.calibration_s = None
        return graph
    total_cooc = graph.total_cooc_weight()
    s = total_cooc / len(pairs)
    for u, v in sorted(pairs):
        graph.edge(u, v).semantic_weight = s
    graph.calibration_s = s
    return graph


def build_graph(
    corpus_terms: list[DocumentTerms],
    scheme: PeriodScheme | None = None,
    semantic: bool = True,
) -> TechnologyGraph:
    """Full build: co-occurrence accumulation plus calibrated semantic links."""
    graph = build_cooccurrence(corpus_terms, scheme)
    if semantic:
        calibrate_semantic_weights(graph, detect_semantic_pairs(graph))
    return graph


def slice_period(graph: TechnologyGraph, period: Period) -> TechnologyGraph:
    """Sub-graph of one period: nodes seen in it, edges with co-occurrence
    weight in it, semantic links re-detected and re-calibrated on the slice."""
    if period not in graph.scheme.periods and period != OVERFLOW_PERIOD:
        raise GraphError(f"period {period.label!r} not in scheme")
    sliced = TechnologyGraph(scheme=PeriodScheme(periods=(period,)))
    for node in graph.nodes:
        count = node.occurrences.get(period, 0)
        if count > 0:
            sliced.ensure_node(node.label).occurrences[period] = count
    for edge in graph.sorted_edges():
        weight = edge.period_cooc.get(period, 0.0)
        if weight <= 0.0:
            continue
        u_label = graph.nodes[edge.u].label
        v_label = graph.nodes[edge.v].label
        new_edge = sliced.edge(
            sliced.node_by_label(u_label).node_id, sliced.node_by_label(v_label).node_id
        )
        new_edge.cooc_weight = weight
        new_edge.period_cooc[period] = weight
    calibrate_semantic_weights(sliced, detect_semantic_pairs(sliced))
    return sliced


def filter_graph(graph: TechnologyGraph, min_total_weight: float) -> TechnologyGraph:
    """Drop nodes whose combined incident weight is below the threshold."""
    if min_total_weight < 0:
        raise GraphError("min_total_weight must be >= 0")
    totals = graph.incident_weights()
    keep = {node.node_id for node in graph.nodes if totals[node.node_id] >= min_total_weight}
    filtered = TechnologyGraph(
        scheme=graph.scheme,
        calibration_s=graph.calibration_s,
        overflow_documents=graph.overflow_documents,
    )
    for node in graph.nodes:
        if node.node_id in keep:
            filtered.ensure_node(node.label).occurrences.update(node.occurrences)
    for edge in graph.sorted_edges():
        if edge.u in keep and edge.v in keep:
            u_label = graph.nodes[edge.u].label
            v_label = graph.nodes[edge.v].label
            new_edge = filtered.edge(
                filtered.node_by_label(u_label).node_id,
                filtered.node_by_label(v_label).node_id,
            )
            new_edge.cooc_weight = edge.cooc_weight
            new_edge.semantic_weight = edge.semantic_weight
            new_edge.period_cooc.update(edge.period_cooc)
    return filtered


# ---------------------------------------------------------------------------
# dump / restore


def _fmt(x: float) -> str:
    return repr(float(x))


def _graph_periods(graph: TechnologyGraph) -> list[Period]:
    periods = list(graph.scheme.periods)
    if graph.overflow_documents or any(
        OVERFLOW_PERIOD in e.period_cooc for e in graph.edges.values()
    ):
        periods.append(OVERFLOW_PERIOD)
    return periods


def dump_csv(graph: TechnologyGraph, nodes_path, edges_path, meta_path=None) -> None:
    """Write node/edge CSVs (floats as shortest round-trip repr, so values
    restore bit-exactly) plus an optional meta JSON."""
    periods = _graph_periods(graph)
    with open(nodes_path, "w", encoding="utf-8", newline="") as fh:
        header = ["node_id", "label"] + [f"occ_{p.label}" for p in periods]
        fh.write(",".join(header) + "\n")
        for node in graph.nodes:
            row = [str(node.node_id), _csv_escape(node.label)]
            row += [str(node.occurrences.get(p, 0)) for p in periods]
            fh.write(",".join(row) + "\n")
    with open(edges_path, "w", encoding="utf-8", newline="") as fh:
        header = ["u_label", "v_label", "cooc_weight", "semantic_weight"]
        header += [f"cooc_{p.label}" for p in periods]
        fh.write(",".join(header) + "\n")
        for edge in graph.sorted_edges():
            row = [
                _csv_escape(graph.nodes[edge.u].label),
                _csv_escape(graph.nodes[edge.v].label),
                _fmt(edge.cooc_weight),
                _fmt(edge.semantic_weight),
            ]
            row += [_fmt(edge.period_cooc.get(p, 0.0)) for p in periods]
            fh.write(",".join(row) + "\n")
    if meta_path is not None:
        meta = {
            "periods": [p.label for p in graph.scheme.periods],
            "calibration_s": None if graph.calibration_s is None else _fmt(graph.calibration_s),
            "overflow_documents": graph.overflow_documents,
        }
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


def _csv_escape(value: str) -> str:
    if "," in value or '"' in value or "\n" in value:
        return '"' + value.replace('"', '""') + '"'
    return value


def load_csv(nodes_path, edges_path, meta_path=None) -> TechnologyGraph:
    """Restore a graph dumped by dump_csv."""
    import csv as _csv

    with open(nodes_path, encoding="utf-8", newline="") as fh:
        node_rows = list(_csv.reader(fh))
    header = node_rows[0]
    period_labels = [col[len("occ_"):] for col in header[2:]]
    periods = [
        OVERFLOW_PERIOD if label == OVERFLOW_PERIOD_LABEL else Period(*map(int, label.split("_")))
        for label in period_labels
    ]
    scheme_periods = tuple(p for p in periods if p != OVERFLOW_PERIOD)
    if meta_path is not None:
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
        scheme_periods = tuple(
            Period(*map(int, label.split("_"))) for label in meta["periods"]
        )
    graph = TechnologyGraph(scheme=PeriodScheme(periods=scheme_periods))
    for row in node_rows[1:]:
        node = graph.ensure_node(row[1])
        for period, count in zip(periods, row[2:]):
            if int(count):
                node.occurrences[period] = int(count)
    with open(edges_path, encoding="utf-8", newline="") as fh:
        edge_rows = list(_csv.reader(fh))
    for row in edge_rows[1:]:
        u = graph.node_by_label(row[0]).node_id
        v = graph.node_by_label(row[1]).node_id
        edge = graph.edge(u, v)
        edge.cooc_weight = float(row[2])
        edge.semantic_weight = float(row[3])
        for period, weight in zip(periods, row[4:]):
            if float(weight) != 0.0:
                edge.period_cooc[period] = float(weight)
    if meta_path is not None:
        graph.calibration_s = (
            None if meta["calibration_s"] is None else float(meta["calibration_s"])
        )
        graph.overflow_documents = int(meta.get("overflow_documents", 0))
    return graph
