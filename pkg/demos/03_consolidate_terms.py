"""Consolidate raw side-effect strings into canonical terms.

Shows the three mechanisms in order: similarity-threshold grouping over
cached embeddings, the sequential clustering pass, and the override file
that wins unconditionally.

    python demos/03_consolidate_terms.py
"""

from pathlib import Path

from sekg.extract import read_relations
from sekg.normalize import (
    compose_canonical_map,
    effective_map,
    embed_terms,
    group_by_threshold,
    llm_cluster,
    load_overrides,
    term_frequencies,
)
from sekg.providers import ReplayCache, UnavailableProvider

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

relations = read_relations(GOLDEN / "relations.jsonl")
frequencies = term_frequencies(relations)
terms = sorted(frequencies)
print(f"unique raw terms: {len(terms)}")

cache = ReplayCache(FIXTURES / "cache")
offline = UnavailableProvider("any")

# Step 1: merge terms whose embedding cosine similarity reaches 0.9,
# transitively, and elect the most frequent surface form of each group.
embeddings = embed_terms(terms, offline, cache, "mini-embed-test")
groups, residual = group_by_threshold(embeddings, 0.9, frequencies)
print(f"threshold groups: {len(groups)} (residual for clustering: {len(residual)})")
for g in groups:
    if len(g.members) > 1:
        print(f"  merged {sorted(g.members)} -> {g.canonical!r}")

# Step 2: walk the residual most-frequent-first; each term either joins
# an existing key or becomes a new one.
assignment = llm_cluster(residual, offline, cache, "test-extractor-v1")
merged = {t: k for t, k in assignment.items() if t != k}
print(f"clustering merges: {merged}")

# Step 3: the override file replaces manual review and wins over both.
overrides = load_overrides(FIXTURES / "overrides.csv")
final = effective_map(compose_canonical_map(groups, assignment), overrides)
print(f"\nfinal canonical terms: {len(final.groups)}")
for group in final.groups:
    mechanisms = sorted(set(group.provenance.values()))
    print(f"  {group.canonical:24s} members={len(group.members)} via={mechanisms}")
