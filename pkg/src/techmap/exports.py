"""Graph exports: GEXF 1.3, JSON, and CSV report files.

The GEXF writer targets the GEXF 1.3 static-graph schema (namespace
http://gexf.net/1.3 with the viz extension for positions); validate_gexf
checks the written structure, including referential constraints between
edges, nodes, and declared attributes. The JSON export is lossless: floats
are serialised with shortest round-trip precision and the reader rebuilds
an identical graph.
"""
from __future__ import annotations

import json
import xml.etree.ElementTree as ET

from .analyze import ClusterAssignment
from .errors import GexfValidationError
from .graph import (
    OVERFLOW_PERIOD,
    Period,
    PeriodScheme,
    TechnologyGraph,
    _graph_periods,
)

GEXF_NS = "http://gexf.net/1.3"
VIZ_NS = "http://gexf.net/1.3/viz"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"

_NODE_ATTR_TYPES = {"integer", "long", "double", "float", "boolean", "string", "liststring"}
_EDGE_TYPES = {"directed", "undirected", "mutual"}


# ---------------------------------------------------------------------------
# GEXF


def write_gexf(
    graph: TechnologyGraph,
    path,
    clusters: ClusterAssignment | None = None,
    node_metrics: dict[str, dict[int, float]] | None = None,
    positions: dict[str, tuple[float, float]] | None = None,
    description: str = "technology co-occurrence map",
) -> None:
    """Write the graph as GEXF 1.3.

    node_metrics maps attribute title -> {node_id: value}; cluster,
    weighted degree, eigenvector, and per-period degree columns are the
    conventional set.
    """
    ET.register_namespace("", GEXF_NS)
    ET.register_namespace("viz", VIZ_NS)
    ET.register_namespace("xsi", XSI_NS)
    root = ET.Element(
        f"{{{GEXF_NS}}}gexf",
        {
            "version": "1.3",
            f"{{{XSI_NS}}}schemaLocation": f"{GEXF_NS} {GEXF_NS}/gexf.xsd",
        },
    )
    meta = ET.SubElement(root, f"{{{GEXF_NS}}}meta")
    ET.SubElement(meta, f"{{{GEXF_NS}}}creator").text = "techmap"
    ET.SubElement(meta, f"{{{GEXF_NS}}}description").text = description
    graph_el = ET.SubElement(
        root, f"{{{GEXF_NS}}}graph", {"defaultedgetype": "undirected", "mode": "static"}
    )

    node_attrs: list[tuple[str, str]] = []
    if clusters is not None:
        node_attrs.append(("cluster", "integer"))
    for title in node_metrics or {}:
        node_attrs.append((title, "double"))

    if node_attrs:
        attrs_el = ET.SubElement(graph_el, f"{{{GEXF_NS}}}attributes", {"class": "node"})
        for idx, (title, atype) in enumerate(node_attrs):
            ET.SubElement(
                attrs_el,
                f"{{{GEXF_NS}}}attribute",
                {"id": str(idx), "title": title, "type": atype},
            )
    edge_attrs = [("cooc_weight", "double"), ("semantic_weight", "double"), ("kind", "string")]
    attrs_el = ET.SubElement(graph_el, f"{{{GEXF_NS}}}attributes", {"class": "edge"})
    for idx, (title, atype) in enumerate(edge_attrs):
        ET.SubElement(
            attrs_el,
            f"{{{GEXF_NS}}}attribute",
            {"id": f"e{idx}", "title": title, "type": atype},
        )

    nodes_el = ET.SubElement(graph_el, f"{{{GEXF_NS}}}nodes")
    for node in graph.nodes:
        node_el = ET.SubElement(
            nodes_el, f"{{{GEXF_NS}}}node", {"id": str(node.node_id), "label": node.label}
        )
        values: list[tuple[str, str]] = []
        if clusters is not None:
            values.append(("0", str(clusters.membership[node.node_id])))
        offset = 1 if clusters is not None else 0
        for i, (title, metric) in enumerate((node_metrics or {}).items()):
            values.append((str(offset + i), repr(float(metric.get(node.node_id, 0.0)))))
        if values:
            attvalues = ET.SubElement(node_el, f"{{{GEXF_NS}}}attvalues")
            for attr_id, value in values:
                ET.SubElement(
                    attvalues, f"{{{GEXF_NS}}}attvalue", {"for": attr_id, "value": value}
                )
        if positions is not None and node.label in positions:
            x, y = positions[node.label]
            ET.SubElement(
                node_el,
                f"{{{VIZ_NS}}}position",
                {"x": repr(float(x)), "y": repr(float(y)), "z": "0.0"},
            )

    edges_el = ET.SubElement(graph_el, f"{{{GEXF_NS}}}edges")
    for idx, edge in enumerate(graph.sorted_edges()):
        edge_el = ET.SubElement(
            edges_el,
            f"{{{GEXF_NS}}}edge",
            {
                "id": str(idx),
                "source": str(edge.u),
                "target": str(edge.v),
                "weight": repr(float(edge.total_weight)),
            },
        )
        attvalues = ET.SubElement(edge_el, f"{{{GEXF_NS}}}attvalues")
        ET.SubElement(
            attvalues, f"{{{GEXF_NS}}}attvalue",
            {"for": "e0", "value": repr(float(edge.cooc_weight))},
        )
        ET.SubElement(
            attvalues, f"{{{GEXF_NS}}}attvalue",
            {"for": "e1", "value": repr(float(edge.semantic_weight))},
        )
        ET.SubElement(attvalues, f"{{{GEXF_NS}}}attvalue", {"for": "e2", "value": edge.kind})

    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    tree.write(path, encoding="UTF-8", xml_declaration=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("\n")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _ns(tag: str) -> str:
    return tag.split("}", 1)[0][1:] if tag.startswith("{") else ""


def validate_gexf(path) -> None:
    """Structural validation against the GEXF 1.3 static-graph schema.

    Checks the namespace/version, element nesting and ordering, attribute
    declarations and typed attvalues, unique node/edge ids, and that edge
    endpoints reference declared nodes. Raises GexfValidationError on the
    first violation.
    """
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise GexfValidationError(f"not well-formed XML: {exc}")
    root = tree.getroot()
    if _local(root.tag) != "gexf" or _ns(root.tag) != GEXF_NS:
        raise GexfValidationError(f"root element must be {{{GEXF_NS}}}gexf, got {root.tag}")
    if root.get("version") != "1.3":
        raise GexfValidationError(f"version attribute must be '1.3', got {root.get('version')!r}")

    children = [c for c in root]
    locals_ = [_local(c.tag) for c in children]
    if "graph" not in locals_:
        raise GexfValidationError("missing <graph> element")
    if locals_.count("graph") > 1:
        raise GexfValidationError("more than one <graph> element")
    if "meta" in locals_ and locals_.index("meta") > locals_.index("graph"):
        raise GexfValidationError("<meta> must precede <graph>")
    graph_el = children[locals_.index("graph")]

    if graph_el.get("defaultedgetype", "undirected") not in _EDGE_TYPES:
        raise GexfValidationError(
            f"invalid defaultedgetype {graph_el.get('defaultedgetype')!r}"
        )
    if graph_el.get("mode", "static") not in ("static", "dynamic", "slice"):
        raise GexfValidationError(f"invalid graph mode {graph_el.get('mode')!r}")

    declared: dict[str, dict[str, str]] = {"node": {}, "edge": {}}
    nodes_seen: set[str] = set()
    edges_seen: set[str] = set()
    order = {"attributes": 0, "nodes": 1, "edges": 2}
    last = -1
    nodes_el = edges_el = None
    for child in graph_el:
        name = _local(child.tag)
        if name not in order:
            raise GexfValidationError(f"unexpected element <{name}> under <graph>")
        if order[name] < last:
            raise GexfValidationError("<attributes>, <nodes>, <edges> out of order")
        last = order[name]
        if name == "attributes":
            cls = child.get("class")
            if cls not in ("node", "edge"):
                raise GexfValidationError(f"attributes class must be node or edge, got {cls!r}")
            for attr in child:
                if _local(attr.tag) != "attribute":
                    raise GexfValidationError("only <attribute> allowed in <attributes>")
                attr_id, atype = attr.get("id"), attr.get("type")
                if attr_id is None or attr.get("title") is None:
                    raise GexfValidationError("<attribute> requires id and title")
                if atype not in _NODE_ATTR_TYPES:
                    raise GexfValidationError(f"invalid attribute type {atype!r}")
                if attr_id in declared[cls]:
                    raise GexfValidationError(f"duplicate attribute id {attr_id!r}")
                declared[cls][attr_id] = atype
        elif name == "nodes":
            nodes_el = child
        else:
            edges_el = child

    if nodes_el is None:
        raise GexfValidationError("missing <nodes> element")

    def check_attvalues(parent, cls: str, owner: str) -> None:
        for attvalues in parent:
            if _local(attvalues.tag) == "attvalues":
                for av in attvalues:
                    if _local(av.tag) != "attvalue":
                        raise GexfValidationError("only <attvalue> allowed in <attvalues>")
                    ref, value = av.get("for"), av.get("value")
                    if ref not in declared[cls]:
                        raise GexfValidationError(
                            f"{owner}: attvalue references undeclared attribute {ref!r}"
                        )
                    if value is None:
                        raise GexfValidationError(f"{owner}: attvalue missing value")
                    atype = declared[cls][ref]
                    try:
                        if atype in ("integer", "long"):
                            int(value)
                        elif atype in ("double", "float"):
                            float(value)
                        elif atype == "boolean" and value not in ("true", "false"):
                            raise ValueError(value)
                    except ValueError:
                        raise GexfValidationError(
                            f"{owner}: attvalue {value!r} is not a valid {atype}"
                        )

    for node in nodes_el:
        if _local(node.tag) != "node":
            raise GexfValidationError("only <node> allowed in <nodes>")
        node_id = node.get("id")
        if node_id is None:
            raise GexfValidationError("<node> requires an id")
        if node_id in nodes_seen:
            raise GexfValidationError(f"duplicate node id {node_id!r}")
        nodes_seen.add(node_id)
        check_attvalues(node, "node", f"node {node_id}")
        for child in node:
            if _local(child.tag) == "position":
                if _ns(child.tag) != VIZ_NS:
                    raise GexfValidationError("position element must be in the viz namespace")
                for coord in ("x", "y"):
                    try:
                        float(child.get(coord, ""))
                    except ValueError:
                        raise GexfValidationError(f"node {node_id}: bad viz position {coord}")

    if edges_el is not None:
        for edge in edges_el:
            if _local(edge.tag) != "edge":
                raise GexfValidationError("only <edge> allowed in <edges>")
            edge_id = edge.get("id")
            if edge_id is not None:
                if edge_id in edges_seen:
                    raise GexfValidationError(f"duplicate edge id {edge_id!r}")
                edges_seen.add(edge_id)
            source, target = edge.get("source"), edge.get("target")
            if source is None or target is None:
                raise GexfValidationError("<edge> requires source and target")
            for endpoint in (source, target):
                if endpoint not in nodes_seen:
                    raise GexfValidationError(
                        f"edge {edge_id!r} references undeclared node {endpoint!r}"
                    )
            weight = edge.get("weight")
            if weight is not None:
                try:
                    float(weight)
                except ValueError:
                    raise GexfValidationError(f"edge {edge_id!r}: bad weight {weight!r}")
            check_attvalues(edge, "edge", f"edge {edge_id}")


# ---------------------------------------------------------------------------
# JSON


def graph_to_json_dict(
    graph: TechnologyGraph,
    clusters: ClusterAssignment | None = None,
    node_metrics: dict[str, dict[int, float]] | None = None,
    positions: dict[str, tuple[float, float]] | None = None,
    meta: dict | None = None,
) -> dict:
    """Stable-key-order dict for the JSON export; lossless for the graph."""
    periods = _graph_periods(graph)
    out_meta = {
        "format": "techmap-graph",
        "version": 1,
        "periods": [p.label for p in graph.scheme.periods],
        "calibration_s": graph.calibration_s,
        "overflow_documents": graph.overflow_documents,
    }
    if meta:
        out_meta.update(meta)
    nodes = []
    for node in graph.nodes:
        entry: dict = {"id": node.node_id, "label": node.label}
        if positions is not None and node.label in positions:
            entry["x"], entry["y"] = positions[node.label]
        if clusters is not None:
            entry["cluster"] = clusters.membership[node.node_id]
        metrics = {
            title: metric.get(node.node_id, 0.0)
            for title, metric in (node_metrics or {}).items()
        }
        if metrics:
            entry["metrics"] = metrics
        entry["occurrences"] = {
            p.label: node.occurrences[p] for p in periods if p in node.occurrences
        }
        nodes.append(entry)
    edges = []
    for edge in graph.sorted_edges():
        entry = {
            "source": edge.u,
            "target": edge.v,
            "weight": edge.total_weight,
            "kind": edge.kind,
            "cooc_weight": edge.cooc_weight,
            "semantic_weight": edge.semantic_weight,
            "period_cooc": {
                p.label: edge.period_cooc[p] for p in periods if p in edge.period_cooc
            },
        }
        edges.append(entry)
    return {"meta": out_meta, "nodes": nodes, "edges": edges}


def write_graph_json(graph, path, **kwargs) -> None:
    payload = graph_to_json_dict(graph, **kwargs)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _period_from_label(label: str) -> Period:
    if label == OVERFLOW_PERIOD.label:
        return OVERFLOW_PERIOD
    start, _, end = label.partition("_")
    return Period(int(start), int(end))


def read_graph_json(path) -> TechnologyGraph:
    """Rebuild the internal graph from a JSON export (lossless round-trip)."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    meta = payload["meta"]
    scheme = PeriodScheme.from_labels(meta.get("periods", []))
    graph = TechnologyGraph(scheme=scheme)
    graph.calibration_s = meta.get("calibration_s")
    graph.overflow_documents = meta.get("overflow_documents", 0)
    for entry in payload["nodes"]:
        node = graph.ensure_node(entry["label"])
        if node.node_id != entry["id"]:
            raise GexfValidationError(  # ids must be dense and in file order
                f"non-contiguous node ids in {path}: {entry['id']} vs {node.node_id}"
            )
        for label, count in entry.get("occurrences", {}).items():
            node.occurrences[_period_from_label(label)] = count
    for entry in payload["edges"]:
        edge = graph.edge(entry["source"], entry["target"])
        edge.cooc_weight = entry["cooc_weight"]
        edge.semantic_weight = entry["semantic_weight"]
        for label, weight in entry.get("period_cooc", {}).items():
            edge.period_cooc[_period_from_label(label)] = weight
    return graph


# ---------------------------------------------------------------------------
# CSV report files


def _fmt(x: float) -> str:
    return repr(float(x))


def write_positions_csv(positions: dict[str, tuple[float, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("label,x,y\n")
        for label in positions:
            x, y = positions[label]
            fh.write(f"{_csv(label)},{_fmt(x)},{_fmt(y)}\n")


def read_positions_csv(path) -> dict[str, tuple[float, float]]:
    import csv

    out: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in list(csv.reader(fh))[1:]:
            out[row[0]] = (float(row[1]), float(row[2]))
    return out


def _csv(value: str) -> str:
    if "," in value or '"' in value or "\n" in value:
        return '"' + value.replace('"', '""') + '"'
    return value


def write_node_metrics_csv(graph, clusters, metrics: dict[str, dict[int, float]], path) -> None:
    """label, cluster, then one column per metric (insertion order)."""
    titles = list(metrics)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("label,cluster," + ",".join(titles) + "\n")
        for node in graph.nodes:
            row = [
                _csv(node.label),
                str(clusters.membership[node.node_id]) if clusters else "",
            ]
            row += [_fmt(metrics[t].get(node.node_id, 0.0)) for t in titles]
            fh.write(",".join(row) + "\n")


def write_ri_csv(matrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("cluster_a,cluster_b,inter_weight,ri,bin\n")
        for a in matrix.clusters:
            for b in matrix.clusters:
                if a >= b:
                    continue
                fh.write(
                    f"{a},{b},{_fmt(matrix.raw_weight(a, b))},"
                    f"{_fmt(matrix.ri_value(a, b))},{matrix.bin_of(a, b)}\n"
                )


def write_trends_csv(series, path) -> None:
    clusters = sorted({c for shares in series.shares for c in shares})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("period," + ",".join(f"cluster_{c}" for c in clusters) + "\n")
        for period, shares in zip(series.periods, series.shares):
            row = [period.label] + [_fmt(shares.get(c, 0.0)) for c in clusters]
            fh.write(",".join(row) + "\n")


def write_bridging_csv(graph, bridging, clusters, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("label,own_cluster,foreign_cluster,tier\n")
        for node_id, foreign, tier in bridging:
            fh.write(
                f"{_csv(graph.nodes[node_id].label)},"
                f"{clusters.membership[node_id]},{foreign},{tier}\n"
            )
