import random

from techmap.extract import DocumentTerms
from techmap.graph import PeriodScheme, TechnologyGraph


def graph_from_edges(edges, labels=None, scheme=None):
    """Build a TechnologyGraph straight from (u, v, weight) triples."""
    graph = TechnologyGraph(scheme=scheme or PeriodScheme(periods=()))
    if labels:
        for label in labels:
            graph.ensure_node(label)
    for u, v, w in edges:
        nu = graph.ensure_node(str(u)).node_id
        nv = graph.ensure_node(str(v)).node_id
        graph.edge(nu, nv).cooc_weight += w
    return graph


def random_weighted_graph(rng: random.Random, n: int, p: float = 0.35):
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((f"n{u}", f"n{v}", rng.uniform(0.1, 3.0)))
    if not edges:  # keep at least one edge so analyses are defined
        edges.append(("n0", "n1", 1.0))
    return graph_from_edges(edges, labels=[f"n{i}" for i in range(n)])


def doc_terms(doc_id, year, *sentence_sets):
    return DocumentTerms(
        doc_id=doc_id, year=year, sentence_terms=[set(s) for s in sentence_sets]
    )
