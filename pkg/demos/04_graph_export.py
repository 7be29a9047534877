"""Build the bipartite knowledge graph and export the viewer document.

    python demos/04_graph_export.py
"""

import tempfile
from pathlib import Path

from sekg.extract import read_relations
from sekg.graph import (
    RenderParams,
    build_graph,
    edge_thickness,
    node_radius,
    write_viewer_document,
)

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

relations = read_relations(GOLDEN / "relations_normalized.jsonl")
kg = build_graph(relations, example_cap=5)
params = RenderParams(base_size=6.0, base_thickness=1.5)

print(f"relations: {kg.relation_count}")
print(f"medication nodes: {sorted(b.value for b in kg.medications)}")
print(f"side-effect nodes: {len(kg.side_effects)}")

# Node radius grows with the log of total mentions, edge thickness with
# the log of pair co-occurrences, so a weight-1 edge sits at 0 and the
# viewer applies a 1-unit render floor.
print("\ntop side effects by mentions:")
for term in sorted(kg.side_effects, key=kg.side_effects.get, reverse=True)[:5]:
    freq = kg.side_effects[term]
    print(f"  {term:16s} mentions={freq:3d} radius={node_radius(freq, params):.3f}")

heaviest = max(kg.edges, key=lambda e: e.weight)
print(
    f"\nheaviest edge: {heaviest.medication.value} -> {heaviest.side_effect} "
    f"(weight {heaviest.weight}, thickness "
    f"{edge_thickness(heaviest.weight, params):.3f})"
)
print(f"  severity histogram: {dict(heaviest.severity_hist)}")
print(f"  example: {heaviest.examples[0][0]!r}")

out = Path(tempfile.mkdtemp()) / "graph.json"
document = write_viewer_document(kg, params, out)
print(f"\nviewer document written to {out}")
print(f"  nodes={len(document['nodes'])} links={len(document['links'])}")
print("serve it with:  sekg serve-viewer --root frontend/dist --doc", out)
