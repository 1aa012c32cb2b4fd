"""Pipeline configuration.

One declarative INI file with nested sections; every key can be overridden
on the command line by a flag of the same name (keys are globally unique
across sections for that reason). Relative paths are resolved against the
config file's directory.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

# (section, key, type, default, help)
_REGISTRY: list[tuple[str, str, str, object, str]] = [
    ("paths", "corpus", "path", None, "bibliographic corpus (JSONL or CSV)"),
    ("paths", "conllu", "path", None, "dependency-parsed abstracts (CoNLL-U)"),
    ("paths", "annotations", "path", None, "head-annotation JSONL (annotation mode)"),
    ("paths", "gazetteer", "path", None, "gazetteer of head lemmas"),
    ("paths", "blacklist", "path", None, "blacklisted normalized terms"),
    ("paths", "leading_words", "path", None, "leading words stripped from term fronts"),
    ("paths", "head_suffix_rules", "path", None, "head suffix rules (TSV)"),
    ("paths", "concept_terms", "path", None, "concept search terms (TSV)"),
    ("paths", "output", "path", "out", "output directory"),
    ("run", "seed", "int", 42, "seed recorded in outputs; drives clustering and layout"),
    ("run", "threads", "int", 1, "worker processes for per-document extraction"),
    ("corpus", "corpus_format", "str", "auto", "jsonl, csv, or auto"),
    ("corpus", "min_year", "int", 2011, "lower bound of the year window"),
    ("corpus", "max_year", "optint", None, "upper bound of the year window (open if unset)"),
    ("corpus", "whole_word", "bool", True, "word-boundary concept matching (substring if false)"),
    ("corpus", "skip_malformed", "bool", False, "skip malformed corpus records instead of aborting"),
    ("periods", "window", "int", 2, "period window length in years"),
    ("periods", "anchor_year", "optint", None, "first period start (corpus minimum if unset)"),
    ("extract", "mode", "str", "gazetteer", "annotation, gazetteer, or heuristic"),
    ("graph", "min_node_weight", "float", 0.0, "drop nodes below this incident weight"),
    ("graph", "semantic_links", "bool", True, "add calibrated sub-term links"),
    ("analyze", "resolution", "float", 1.0, "modularity resolution"),
    ("analyze", "ev_tolerance", "float", 1e-9, "power-iteration stop tolerance"),
    ("analyze", "ev_max_iter", "int", 10000, "power-iteration cap"),
    ("analyze", "strong_threshold", "float", 0.5, "strong bridging tier threshold"),
    ("analyze", "medium_threshold", "float", 0.25, "medium bridging tier threshold"),
    ("analyze", "delta_from", "str", "", "centrality-delta base period label (e.g. 2017_2018)"),
    ("analyze", "delta_to", "str", "", "centrality-delta target period label"),
    ("analyze", "per_period_clusters", "bool", False,
     "re-cluster every period slice for the trend series (sensitivity mode)"),
    ("layout", "k_repulsion", "float", 10.0, "repulsion constant"),
    ("layout", "gravity", "float", 1.0, "gravity constant"),
    ("layout", "edge_weight_influence", "float", 1.0, "attraction weight exponent"),
    ("layout", "use_barnes_hut", "bool", False, "approximate repulsion with Barnes-Hut"),
    ("layout", "theta", "float", 1.2, "Barnes-Hut opening angle"),
    ("layout", "iterations", "int", 1000, "layout iteration cap"),
    ("layout", "layout_eps", "optfloat", None, "stop displacement (default 1e-3 * sqrt(n))"),
    ("layout", "backend", "str", "auto", "layout kernel: auto, c, or numpy"),
    ("export", "gexf", "bool", True, "write graph.gexf"),
    ("export", "json", "bool", True, "write graph.json"),
    ("report", "top_k", "int", 10, "list length in the report"),
]

_PATH_KEYS = {key for section, key, kind, _, _ in _REGISTRY if kind == "path"}


def _default_data(name: str) -> str:
    return str(resources.files("techmap").joinpath(f"data/{name}"))


@dataclass
class PipelineConfig:
    values: dict[str, object] = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        defaults = {key: default for _, key, _, default, _ in _REGISTRY}
        merged = dict(defaults)
        merged.update(self.values)
        self.values = merged
        if self.values.get("gazetteer") is None:
            self.values["gazetteer"] = _default_data("gazetteer.txt")
        if self.values.get("blacklist") is None:
            self.values["blacklist"] = _default_data("blacklist.txt")
        if self.values.get("leading_words") is None:
            self.values["leading_words"] = _default_data("leading_words.txt")
        if self.values.get("head_suffix_rules") is None:
            self.values["head_suffix_rules"] = _default_data("head_suffix_rules.tsv")
        if self.values.get("concept_terms") is None:
            self.values["concept_terms"] = _default_data("concept_terms.tsv")

    def __getattr__(self, key: str):
        values = object.__getattribute__(self, "__dict__").get("values", {})
        if key in values:
            return values[key]
        raise AttributeError(key)

    def path(self, key: str) -> Path | None:
        value = self.values.get(key)
        if value is None:
            return None
        p = Path(str(value))
        return p if p.is_absolute() else (self.base_dir / p)

    @property
    def output_dir(self) -> Path:
        return self.path("output")

    def to_dict(self) -> dict:
        return {key: self.values[key] for _, key, _, _, _ in _REGISTRY}

    def config_hash(self) -> str:
        """Hash of the behavioural configuration. Path keys are excluded:
        input content is covered by the manifests' file hashes, and output
        location must not change the recorded provenance."""
        canon = json.dumps(
            {k: v for k, v in self.to_dict().items() if k not in _PATH_KEYS},
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def validate_inputs(self, keys) -> None:
        missing = []
        for key in keys:
            p = self.path(key)
            if p is None or not p.exists():
                missing.append(f"{key}: {p}")
        if missing:
            raise ConfigError("missing input paths: " + "; ".join(missing))


def _coerce(kind: str, raw: str, key: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "optint":
            return None if raw == "" else int(raw)
        if kind == "float":
            return float(raw)
        if kind == "optfloat":
            return None if raw == "" else float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw if raw != "" else None
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r} (expected {kind})")


def load_config(path=None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Read the INI file (if any) and apply command-line overrides."""
    values: dict[str, object] = {}
    base_dir = Path.cwd()
    known = {key: (section, kind) for section, key, kind, _, _ in _REGISTRY}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        base_dir = path.parent.resolve()
        parser = configparser.ConfigParser(interpolation=None)
        parser.read(path, encoding="utf-8")
        for section in parser.sections():
            for key, raw in parser.items(section):
                if key not in known:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                expected_section, kind = known[key]
                if section != expected_section:
                    raise ConfigError(
                        f"key {key!r} belongs in [{expected_section}], found in [{section}]"
                    )
                values[key] = _coerce(kind, raw, key)
    for key, raw in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(known[key][1], raw, key) if isinstance(raw, str) else raw
    return PipelineConfig(values=values, base_dir=base_dir)


def registry():
    """(section, key, kind, default, help) rows for CLI flag generation."""
    return list(_REGISTRY)
