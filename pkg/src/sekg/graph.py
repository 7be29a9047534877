"""Assemble the bipartite medication/side-effect graph and export it.

Edge weight counts relations for a (medication, side effect) pair; a
side-effect node's frequency is the sum of its incident edge weights.
Render geometry uses natural logs: ``radius = base_size + ln(frequency)``
for nodes and ``thickness = base_thickness * ln(weight)`` for edges, so
weight-1 edges come out at zero thickness and the viewer applies its own
render floor.

The exported document is a single JSON file with deterministic key order
and floats rounded to 6 significant digits, so export → parse → export
is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DataError
from .extract import Brand, Relation

MEDICATION_NODE = "medication"
SIDE_EFFECT_NODE = "side_effect"


@dataclass(frozen=True)
class RenderParams:
    """Cosmetic scaling constants for the exported geometry."""

    base_size: float = 6.0
    base_thickness: float = 1.5

    def __post_init__(self):
        if self.base_size <= 0:
            raise ValueError(f"base_size must be positive, got {self.base_size}")
        if self.base_thickness <= 0:
            raise ValueError(
                f"base_thickness must be positive, got {self.base_thickness}"
            )


@dataclass(frozen=True)
class Edge:
    medication: Brand
    side_effect: str
    weight: int
    severity_hist: Mapping[str, int]
    duration_hist: Mapping[str, int]
    dosage_hist: Mapping[str, int]
    examples: tuple[tuple[str, str], ...]  # (description, source_id), newest first


@dataclass(frozen=True)
class KnowledgeGraph:
    medications: frozenset[Brand]
    side_effects: Mapping[str, int]  # canonical term -> frequency
    edges: tuple[Edge, ...]

    def edge_for(self, medication: Brand, side_effect: str) -> Edge | None:
        for edge in self.edges:
            if edge.medication == medication and edge.side_effect == side_effect:
                return edge
        return None

    @property
    def relation_count(self) -> int:
        return sum(edge.weight for edge in self.edges)


def node_radius(frequency: int, params: RenderParams) -> float:
    """Node radius for a term mentioned ``frequency`` times."""
    if frequency < 1:
        raise ValueError(
            f"a node needs at least one mention, got frequency={frequency}"
        )
    return params.base_size + math.log(frequency)


def edge_thickness(weight: int, params: RenderParams) -> float:
    """Edge thickness for a pair co-occurring ``weight`` times.

    Weight 1 yields exactly 0; the viewer floors it at render time.
    """
    if weight < 1:
        raise ValueError(f"an edge needs at least one relation, got weight={weight}")
    return params.base_thickness * math.log(weight)


def build_graph(
    relations: Sequence[Relation], example_cap: int = 5
) -> KnowledgeGraph:
    """Aggregate normalized relations into the bipartite graph.

    Severity strings are lowercased before histogramming; duration and
    dosage buckets keep the stated strings verbatim. Up to
    ``example_cap`` example descriptions are kept per edge, most recent
    first.
    """
    weights: dict[tuple[Brand, str], int] = {}
    severity: dict[tuple[Brand, str], dict[str, int]] = {}
    duration: dict[tuple[Brand, str], dict[str, int]] = {}
    dosage: dict[tuple[Brand, str], dict[str, int]] = {}
    examples: dict[tuple[Brand, str], list[tuple[int, str, str]]] = {}

    for relation in relations:
        key = (relation.medication, relation.side_effect)
        weights[key] = weights.get(key, 0) + 1
        if relation.severity is not None:
            hist = severity.setdefault(key, {})
            bucket = relation.severity.lower()
            hist[bucket] = hist.get(bucket, 0) + 1
        if relation.duration is not None:
            hist = duration.setdefault(key, {})
            hist[relation.duration] = hist.get(relation.duration, 0) + 1
        if relation.dosage is not None:
            hist = dosage.setdefault(key, {})
            hist[relation.dosage] = hist.get(relation.dosage, 0) + 1
        examples.setdefault(key, []).append(
            (relation.source_date, relation.description, relation.source_id)
        )

    edges: list[Edge] = []
    side_effects: dict[str, int] = {}
    medications: set[Brand] = set()
    for key in sorted(weights, key=lambda k: (k[0].value, k[1])):
        brand, term = key
        medications.add(brand)
        side_effects[term] = side_effects.get(term, 0) + weights[key]
        # stable sort: ties on date keep input order, newest first overall
        ordered = sorted(
            enumerate(examples[key]), key=lambda pair: (-pair[1][0], pair[0])
        )
        kept = tuple(
            (description, source_id)
            for _, (_, description, source_id) in ordered[:example_cap]
        )
        edges.append(
            Edge(
                medication=brand,
                side_effect=term,
                weight=weights[key],
                severity_hist=dict(sorted(severity.get(key, {}).items())),
                duration_hist=dict(sorted(duration.get(key, {}).items())),
                dosage_hist=dict(sorted(dosage.get(key, {}).items())),
                examples=kept,
            )
        )
    return KnowledgeGraph(
        medications=frozenset(medications),
        side_effects=dict(sorted(side_effects.items())),
        edges=tuple(edges),
    )


def _sig6(x: float) -> float:
    """Round to 6 significant digits; idempotent, so re-exports are stable."""
    return float(f"{x:.6g}")


def medication_node_id(brand: Brand) -> str:
    return f"med:{brand.value}"


def side_effect_node_id(term: str) -> str:
    return f"se:{term}"


def export_viewer_document(
    kg: KnowledgeGraph,
    params: RenderParams,
    corpus_window: tuple[int, int] | None = None,
) -> dict:
    """Build the viewer document: metadata, nodes, links.

    Medication nodes also carry a frequency (their incident weight sum)
    so the viewer can size every node with the same rule.
    """
    med_frequency: dict[Brand, int] = {brand: 0 for brand in kg.medications}
    for edge in kg.edges:
        med_frequency[edge.medication] += edge.weight

    nodes: list[dict] = []
    for brand in sorted(kg.medications, key=lambda b: b.value):
        freq = med_frequency[brand]
        nodes.append(
            {
                "id": medication_node_id(brand),
                "type": MEDICATION_NODE,
                "label": brand.value,
                "frequency": freq,
                "radius": _sig6(node_radius(freq, params) if freq else params.base_size),
            }
        )
    for term in sorted(kg.side_effects):
        freq = kg.side_effects[term]
        nodes.append(
            {
                "id": side_effect_node_id(term),
                "type": SIDE_EFFECT_NODE,
                "label": term,
                "frequency": freq,
                "radius": _sig6(node_radius(freq, params)),
            }
        )
    links: list[dict] = []
    for edge in sorted(kg.edges, key=lambda e: (e.medication.value, e.side_effect)):
        links.append(
            {
                "source": medication_node_id(edge.medication),
                "target": side_effect_node_id(edge.side_effect),
                "weight": edge.weight,
                "thickness": _sig6(edge_thickness(edge.weight, params)),
                "severity": dict(edge.severity_hist),
                "duration": dict(edge.duration_hist),
                "dosage": dict(edge.dosage_hist),
                "examples": [
                    {"description": d, "source_id": s} for d, s in edge.examples
                ],
            }
        )
    metadata = {
        "medication_count": len(kg.medications),
        "side_effect_count": len(kg.side_effects),
        "link_count": len(links),
        "relation_count": kg.relation_count,
        "params": {
            "base_size": _sig6(params.base_size),
            "base_thickness": _sig6(params.base_thickness),
            "log_base": "e",
        },
        "corpus_window": (
            {"start": corpus_window[0], "end": corpus_window[1]}
            if corpus_window
            else None
        ),
    }
    return {"metadata": metadata, "nodes": nodes, "links": links}


def document_to_json(document: dict) -> str:
    """Canonical serialization: sorted keys, 2-space indent, newline-terminated."""
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_viewer_document(
    kg: KnowledgeGraph,
    params: RenderParams,
    path: str | Path,
    corpus_window: tuple[int, int] | None = None,
) -> dict:
    document = export_viewer_document(kg, params, corpus_window)
    Path(path).write_text(document_to_json(document), encoding="utf-8")
    return document


def parse_viewer_document(
    source: str | dict,
) -> tuple[KnowledgeGraph, RenderParams, dict]:
    """Rebuild the graph, params, and metadata from an exported document."""
    document = json.loads(source) if isinstance(source, str) else source
    try:
        metadata = document["metadata"]
        node_list = document["nodes"]
        link_list = document["links"]
        params = RenderParams(
            base_size=float(metadata["params"]["base_size"]),
            base_thickness=float(metadata["params"]["base_thickness"]),
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"viewer document missing required structure: {exc}") from exc

    medications: set[Brand] = set()
    side_effects: dict[str, int] = {}
    for node in node_list:
        if node["type"] == MEDICATION_NODE:
            medications.add(Brand.from_label(node["label"]))
        elif node["type"] == SIDE_EFFECT_NODE:
            side_effects[node["label"]] = int(node["frequency"])
        else:
            raise DataError(f"unknown node type {node['type']!r}")
    edges: list[Edge] = []
    for link in link_list:
        source_id = link["source"]
        target_id = link["target"]
        if not source_id.startswith("med:") or not target_id.startswith("se:"):
            raise DataError(
                f"link endpoints must be med:->se:, got {source_id!r}->{target_id!r}"
            )
        edges.append(
            Edge(
                medication=Brand.from_label(source_id[len("med:") :]),
                side_effect=target_id[len("se:") :],
                weight=int(link["weight"]),
                severity_hist=dict(sorted(link["severity"].items())),
                duration_hist=dict(sorted(link["duration"].items())),
                dosage_hist=dict(sorted(link["dosage"].items())),
                examples=tuple(
                    (ex["description"], ex["source_id"]) for ex in link["examples"]
                ),
            )
        )
    kg = KnowledgeGraph(
        medications=frozenset(medications),
        side_effects=dict(sorted(side_effects.items())),
        edges=tuple(
            sorted(edges, key=lambda e: (e.medication.value, e.side_effect))
        ),
    )
    return kg, params, metadata
