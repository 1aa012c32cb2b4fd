"""Network measures over the technology graph.

All measures run on the combined (co-occurrence + semantic) edge weights:
weighted degree, eigenvector centrality via power iteration, Louvain
modularity clustering, intra-cluster link shares, cluster-bridging
detection, the cluster relative-importance matrix, per-period cluster
share series, and per-node centrality deltas between two periods.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, GraphError
from .graph import Period, PeriodScheme, TechnologyGraph, slice_period

log = logging.getLogger(__name__)


def _edge_arrays(graph: TechnologyGraph):
    us, vs, ws = [], [], []
    for edge in graph.sorted_edges():
        us.append(edge.u)
        vs.append(edge.v)
        ws.append(edge.total_weight)
    return (
        np.asarray(us, dtype=np.int64),
        np.asarray(vs, dtype=np.int64),
        np.asarray(ws, dtype=np.float64),
    )


def adjacency(graph: TechnologyGraph) -> dict[int, dict[int, float]]:
    adj: dict[int, dict[int, float]] = {node.node_id: {} for node in graph.nodes}
    for edge in graph.sorted_edges():
        w = edge.total_weight
        adj[edge.u][edge.v] = adj[edge.u].get(edge.v, 0.0) + w
        adj[edge.v][edge.u] = adj[edge.v].get(edge.u, 0.0) + w
    return adj


def weighted_degree(graph: TechnologyGraph) -> dict[int, float]:
    """Sum of combined incident edge weights per node."""
    return {node.node_id: w for node, w in zip(graph.nodes, graph.incident_weights())}


# ---------------------------------------------------------------------------
# eigenvector centrality


def eigenvector_centrality(
    graph: TechnologyGraph,
    tol: float = 1e-9,
    max_iter: int = 10000,
    per_component: bool = False,
) -> dict[int, float]:
    """Dominant-eigenvector scores, max-normalised to 1.

    Power iteration on the combined-weight adjacency from a uniform start,
    renormalising by the max each step; the update keeps the previous
    iterate as a unit shift (x <- x + Ax), which leaves the dominant
    eigenvector unchanged but converges on bipartite structures too. On a
    disconnected graph mass concentrates on the dominant component; use
    per_component to normalise each component separately.
    """
    n = graph.n_nodes
    if n == 0:
        raise GraphError("eigenvector centrality on an empty graph")
    us, vs, ws = _edge_arrays(graph)
    if len(us) == 0:
        log.warning("graph has no edges; eigenvector centrality all zero")
        return {node.node_id: 0.0 for node in graph.nodes}

    if per_component:
        return _per_component_eigenvector(graph, tol, max_iter)

    x = np.ones(n, dtype=np.float64)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        x_new = (
            x
            + np.bincount(us, weights=ws * x[vs], minlength=n)
            + np.bincount(vs, weights=ws * x[us], minlength=n)
        )
        peak = x_new.max()
        x_new /= peak
        residual = float(np.max(np.abs(x_new - x)))
        x = x_new
        if residual < tol:
            return {node.node_id: float(x[node.node_id]) for node in graph.nodes}
    raise ConvergenceError(
        f"eigenvector centrality did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})",
        iterations=max_iter,
        residual=residual,
    )


def _components(graph: TechnologyGraph) -> list[list[int]]:
    adj = adjacency(graph)
    seen: set[int] = set()
    components = []
    for node in graph.nodes:
        if node.node_id in seen:
            continue
        stack = [node.node_id]
        seen.add(node.node_id)
        comp = []
        while stack:
            current = stack.pop()
            comp.append(current)
            for nbr in adj[current]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        components.append(sorted(comp))
    return components


def _per_component_eigenvector(graph, tol, max_iter) -> dict[int, float]:
    adj = adjacency(graph)
    out: dict[int, float] = {}
    for comp in _components(graph):
        if len(comp) == 1:
            out[comp[0]] = 0.0 if not adj[comp[0]] else 1.0
            continue
        index = {node_id: i for i, node_id in enumerate(comp)}
        x = np.ones(len(comp))
        residual = np.inf
        for _ in range(max_iter):
            x_new = x.copy()
            for node_id in comp:
                i = index[node_id]
                for nbr, w in adj[node_id].items():
                    x_new[i] += w * x[index[nbr]]
            peak = x_new.max()
            if peak > 0:
                x_new /= peak
            residual = float(np.max(np.abs(x_new - x)))
            x = x_new
            if residual < tol:
                break
        else:
            raise ConvergenceError(
                "per-component eigenvector did not converge",
                iterations=max_iter,
                residual=residual,
            )
        for node_id in comp:
            out[node_id] = float(x[index[node_id]])
    return out


# ---------------------------------------------------------------------------
# Louvain clustering


@dataclass
class ClusterAssignment:
    membership: dict[int, int]
    modularity_q: float
    resolution: float
    seed: int

    @property
    def n_clusters(self) -> int:
        return len(set(self.membership.values()))

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for node_id in sorted(self.membership):
            out.setdefault(self.membership[node_id], []).append(node_id)
        return out


def modularity(
    adj: dict[int, dict[int, float]],
    membership: dict[int, int],
    resolution: float = 1.0,
    self_loops: dict[int, float] | None = None,
) -> float:
    """Newman modularity with a resolution-scaled null model.

    adj holds symmetric off-diagonal weights; self_loops holds per-node
    loop weights (each counts twice in the degree), as produced by the
    aggregation phase.
    """
    self_loops = self_loops or {}
    k = {
        node: sum(nbrs.values()) + 2.0 * self_loops.get(node, 0.0)
        for node, nbrs in adj.items()
    }
    two_m = sum(k.values())
    if two_m == 0:
        return 0.0
    inner: dict[int, float] = {}
    total: dict[int, float] = {}
    for node, nbrs in adj.items():
        c = membership[node]
        total[c] = total.get(c, 0.0) + k[node]
        inner[c] = inner.get(c, 0.0) + 2.0 * self_loops.get(node, 0.0)
        for nbr, w in nbrs.items():
            if membership[nbr] == c:
                inner[c] = inner.get(c, 0.0) + w  # ordered pairs: visited twice
    q = 0.0
    for c in total:
        q += inner.get(c, 0.0) / two_m - resolution * (total[c] / two_m) ** 2
    return q


def _one_level(adj, self_loops, membership, resolution, rng) -> bool:
    """Local-move phase; mutates membership, returns True if anything moved."""
    nodes = sorted(adj)
    k = {n: sum(adj[n].values()) + 2.0 * self_loops.get(n, 0.0) for n in nodes}
    two_m = sum(k.values())
    if two_m == 0:
        return False
    sigma_tot: dict[int, float] = {}
    for n in nodes:
        c = membership[n]
        sigma_tot[c] = sigma_tot.get(c, 0.0) + k[n]

    moved_any = False
    while True:
        moved_this_pass = False
        order = list(nodes)
        rng.shuffle(order)
        for node in order:
            old = membership[node]
            sigma_tot[old] -= k[node]
            weights_to: dict[int, float] = {}
            for nbr, w in adj[node].items():
                weights_to[membership[nbr]] = weights_to.get(membership[nbr], 0.0) + w
            candidates = set(weights_to) | {old}

            def score(c):
                return weights_to.get(c, 0.0) - resolution * sigma_tot.get(c, 0.0) * k[node] / two_m

            old_score = score(old)
            best_c, best_s = old, old_score
            for c in sorted(candidates):  # ascending id: lowest wins among ties
                s = score(c)
                if s > best_s + 1e-12:
                    best_c, best_s = c, s
            # exact tie with the current community is no gain: stay put
            if best_c == old or best_s <= old_score + 1e-12:
                best_c = old
            membership[node] = best_c
            sigma_tot[best_c] = sigma_tot.get(best_c, 0.0) + k[node]
            if best_c != old:
                moved_this_pass = True
                moved_any = True
        if not moved_this_pass:
            return moved_any


def _aggregate(adj, self_loops, membership):
    """Collapse communities into single nodes; returns (adj, self_loops, mapping)."""
    communities = sorted(set(membership.values()))
    relabel = {c: i for i, c in enumerate(communities)}
    new_adj: dict[int, dict[int, float]] = {i: {} for i in range(len(communities))}
    new_loops: dict[int, float] = {i: 0.0 for i in range(len(communities))}
    for node, nbrs in adj.items():
        cn = relabel[membership[node]]
        new_loops[cn] += self_loops.get(node, 0.0)
        for nbr, w in nbrs.items():
            cm = relabel[membership[nbr]]
            if cn == cm:
                if node < nbr:
                    new_loops[cn] += w  # each intra pair seen twice in adj
            else:
                new_adj[cn][cm] = new_adj[cn].get(cm, 0.0) + w
    return new_adj, new_loops, relabel


def louvain(
    graph: TechnologyGraph, resolution: float = 1.0, seed: int = 0
) -> ClusterAssignment:
    """Two-phase Louvain on combined weights.

    Node visit order is a seeded shuffle (deterministic for a fixed seed);
    among equal-gain moves the lowest community id wins; exact ties with
    the current community mean no move. Cluster ids are re-labelled densely
    by first appearance over ascending node id.
    """
    if graph.n_edges == 0:
        raise GraphError("louvain requires a graph with at least one edge")
    rng = random.Random(seed)
    adj = adjacency(graph)
    self_loops: dict[int, float] = {}
    membership = {n: n for n in adj}
    node_to_final = {node.node_id: node.node_id for node in graph.nodes}

    while True:
        local = dict(membership)
        moved = _one_level(adj, self_loops, local, resolution, rng)
        if not moved:
            break
        adj, self_loops, relabel = _aggregate(adj, self_loops, local)
        node_to_final = {
            node_id: relabel[local[coarse]] for node_id, coarse in node_to_final.items()
        }
        membership = {n: n for n in adj}

    # dense relabel by first appearance over ascending node id
    dense: dict[int, int] = {}
    final: dict[int, int] = {}
    for node_id in sorted(node_to_final):
        c = node_to_final[node_id]
        if c not in dense:
            dense[c] = len(dense)
        final[node_id] = dense[c]

    full_adj = adjacency(graph)
    q = modularity(full_adj, final, resolution)
    return ClusterAssignment(membership=final, modularity_q=q, resolution=resolution, seed=seed)


# ---------------------------------------------------------------------------
# cluster-level measures


def intra_cluster_share(
    graph: TechnologyGraph, clusters: ClusterAssignment
) -> tuple[dict[int, float], float]:
    """Per-node fraction of incident weight staying inside its own cluster,
    plus the unweighted mean over nodes with positive degree."""
    membership = clusters.membership
    intra = {node.node_id: 0.0 for node in graph.nodes}
    total = {node.node_id: 0.0 for node in graph.nodes}
    for edge in graph.sorted_edges():
        w = edge.total_weight
        total[edge.u] += w
        total[edge.v] += w
        if membership[edge.u] == membership[edge.v]:
            intra[edge.u] += w
            intra[edge.v] += w
    shares = {
        n: (intra[n] / total[n]) if total[n] > 0 else 0.0 for n in total
    }
    active = [shares[n] for n in shares if total[n] > 0]
    mean = sum(active) / len(active) if active else 0.0
    return shares, mean


def cluster_sizes(graph: TechnologyGraph, clusters: ClusterAssignment) -> dict[int, float]:
    """Cluster size measured as the sum of member weighted degrees."""
    degrees = weighted_degree(graph)
    sizes: dict[int, float] = {c: 0.0 for c in set(clusters.membership.values())}
    for node_id, c in clusters.membership.items():
        sizes[c] += degrees[node_id]
    return sizes


def cluster_link_shares(
    graph: TechnologyGraph, clusters: ClusterAssignment, node_id: int
) -> dict[int, tuple[float, float]]:
    """Per-cluster share of the node's incident weight, raw and normalised
    by cluster size. Isolated nodes get all-zero shares."""
    membership = clusters.membership
    if node_id not in membership:
        raise GraphError(f"unknown node id {node_id}")
    weights: dict[int, float] = {c: 0.0 for c in set(membership.values())}
    total = 0.0
    for edge in graph.sorted_edges():
        if edge.u == node_id:
            other = edge.v
        elif edge.v == node_id:
            other = edge.u
        else:
            continue
        weights[membership[other]] += edge.total_weight
        total += edge.total_weight
    sizes = cluster_sizes(graph, clusters)
    out: dict[int, tuple[float, float]] = {}
    for c in sorted(weights):
        share = weights[c] / total if total > 0 else 0.0
        normalised = share / sizes[c] if sizes[c] > 0 else 0.0
        out[c] = (share, normalised)
    return out


def bridging_technologies(
    graph: TechnologyGraph,
    clusters: ClusterAssignment,
    strong_thresh: float = 0.5,
    medium_thresh: float = 0.25,
) -> list[tuple[int, int, str]]:
    """Nodes whose size-normalised link share to a foreign cluster reaches a
    tier threshold relative to their own cluster's normalised share."""
    if not medium_thresh < strong_thresh:
        raise ValueError("medium threshold must be below strong threshold")
    membership = clusters.membership
    sizes = cluster_sizes(graph, clusters)
    # one edge pass: per-node incident weight grouped by the far cluster
    weights_to: dict[int, dict[int, float]] = {node.node_id: {} for node in graph.nodes}
    totals: dict[int, float] = {node.node_id: 0.0 for node in graph.nodes}
    for edge in graph.sorted_edges():
        w = edge.total_weight
        for near, far in ((edge.u, edge.v), (edge.v, edge.u)):
            c = membership[far]
            weights_to[near][c] = weights_to[near].get(c, 0.0) + w
            totals[near] += w
    out: list[tuple[int, int, str]] = []
    for node in graph.nodes:
        node_id = node.node_id
        if totals[node_id] <= 0.0:
            continue
        own = membership[node_id]

        def normalised(c: int) -> float:
            if sizes[c] <= 0.0:
                return 0.0
            return weights_to[node_id].get(c, 0.0) / totals[node_id] / sizes[c]

        own_norm = normalised(own)
        for c in sorted(weights_to[node_id]):
            if c == own or normalised(c) <= 0.0:
                continue
            if normalised(c) >= strong_thresh * own_norm:
                out.append((node_id, c, "strong"))
            elif normalised(c) >= medium_thresh * own_norm:
                out.append((node_id, c, "medium"))
    return out


@dataclass
class RIMatrix:
    """Inter-cluster weights with size-normalised relative importance."""

    clusters: list[int]
    sizes: dict[int, float]
    raw: dict[tuple[int, int], float] = field(default_factory=dict)
    ri: dict[tuple[int, int], float] = field(default_factory=dict)
    bins: dict[tuple[int, int], str] = field(default_factory=dict)

    def _key(self, a: int, b: int) -> tuple[int, int]:
        return (a, b) if a <= b else (b, a)

    def raw_weight(self, a: int, b: int) -> float:
        return self.raw.get(self._key(a, b), 0.0) if a != b else 0.0

    def ri_value(self, a: int, b: int) -> float:
        return self.ri.get(self._key(a, b), 0.0) if a != b else 0.0

    def bin_of(self, a: int, b: int) -> str:
        if a == b:
            return "self"
        return self.bins.get(self._key(a, b), "low")


def _tercile_thresholds(values: list[float]) -> tuple[float, float]:
    ordered = sorted(values)
    n = len(ordered)

    def quantile(q: float) -> float:
        if n == 1:
            return ordered[0]
        pos = q * (n - 1)
        lo = int(pos)
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        return ordered[lo] * (1 - frac) + ordered[hi] * frac

    return quantile(1 / 3), quantile(2 / 3)


def cluster_ri_matrix(graph: TechnologyGraph, clusters: ClusterAssignment) -> RIMatrix:
    """Inter-cluster edge weight, normalised by both clusters' sizes, with
    display bins from the terciles of the off-diagonal values."""
    membership = clusters.membership
    cluster_ids = sorted(set(membership.values()))
    sizes = cluster_sizes(graph, clusters)
    matrix = RIMatrix(clusters=cluster_ids, sizes=sizes)
    for edge in graph.sorted_edges():
        ca, cb = membership[edge.u], membership[edge.v]
        if ca == cb:
            continue
        key = (ca, cb) if ca < cb else (cb, ca)
        matrix.raw[key] = matrix.raw.get(key, 0.0) + edge.total_weight
    values = []
    for i, a in enumerate(cluster_ids):
        for b in cluster_ids[i + 1:]:
            w = matrix.raw.get((a, b), 0.0)
            denom = sizes[a] * sizes[b]
            matrix.ri[(a, b)] = w / denom if denom > 0 else 0.0
            values.append(matrix.ri[(a, b)])
    if values:
        q1, q2 = _tercile_thresholds(values)
        for key, value in matrix.ri.items():
            if value == 0.0:  # no inter-cluster edge at all
                matrix.bins[key] = "low"
            elif value >= q2:
                matrix.bins[key] = "high"
            elif value >= q1:
                matrix.bins[key] = "mid"
            else:
                matrix.bins[key] = "low"
    return matrix


# ---------------------------------------------------------------------------
# temporal analyses


@dataclass
class TrendSeries:
    """Per-period cluster shares of total weighted degree."""

    periods: list[Period]
    shares: list[dict[int, float]]
    empty_periods: list[Period] = field(default_factory=list)

    def share(self, period: Period, cluster: int) -> float:
        return self.shares[self.periods.index(period)].get(cluster, 0.0)


def cluster_share_timeseries(
    graph: TechnologyGraph,
    clusters: ClusterAssignment,
    scheme: PeriodScheme | None = None,
    recluster_each_period: bool = False,
) -> TrendSeries:
    """For each period: slice the graph, sum member weighted degrees per
    full-graph cluster, and divide by the slice's total degree.

    recluster_each_period is a sensitivity mode: each slice is clustered
    on its own (cluster ids are then slice-local, not comparable across
    periods)."""
    scheme = scheme or graph.scheme
    label_to_cluster = {
        node.label: clusters.membership[node.node_id] for node in graph.nodes
    }
    cluster_ids = sorted(set(clusters.membership.values()))
    periods: list[Period] = []
    shares: list[dict[int, float]] = []
    empty: list[Period] = []
    for period in scheme.periods:
        sliced = slice_period(graph, period)
        periods.append(period)
        if sliced.n_nodes == 0:
            shares.append({c: 0.0 for c in cluster_ids})
            empty.append(period)
            log.warning("period %s has no documents; shares set to 0", period.label)
            continue
        if recluster_each_period and sliced.n_edges > 0:
            local = louvain(sliced, resolution=clusters.resolution, seed=clusters.seed)
            membership = {
                node.label: local.membership[node.node_id] for node in sliced.nodes
            }
            ids = sorted(set(membership.values()))
        else:
            membership = label_to_cluster
            ids = cluster_ids
        degrees = weighted_degree(sliced)
        by_cluster: dict[int, float] = {c: 0.0 for c in ids}
        total = 0.0
        for node in sliced.nodes:
            c = membership[node.label]
            by_cluster[c] += degrees[node.node_id]
            total += degrees[node.node_id]
        if total > 0:
            shares.append({c: w / total for c, w in by_cluster.items()})
        else:
            shares.append({c: 0.0 for c in ids})
            empty.append(period)
    return TrendSeries(periods=periods, shares=shares, empty_periods=empty)


def centrality_delta(
    graph: TechnologyGraph,
    scheme: PeriodScheme,
    period_a: Period,
    period_b: Period,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> dict[int, float]:
    """Eigenvector centrality change from period_a's slice to period_b's;
    nodes absent from a slice score 0 there."""
    for period in (period_a, period_b):
        if period not in scheme.periods:
            raise GraphError(f"period {period.label!r} not in scheme")

    def slice_scores(period: Period) -> dict[str, float]:
        sliced = slice_period(graph, period)
        if sliced.n_nodes == 0:
            return {}
        scores = eigenvector_centrality(sliced, tol=tol, max_iter=max_iter)
        return {node.label: scores[node.node_id] for node in sliced.nodes}

    a = slice_scores(period_a)
    b = slice_scores(period_b)
    return {
        node.node_id: b.get(node.label, 0.0) - a.get(node.label, 0.0)
        for node in graph.nodes
    }
