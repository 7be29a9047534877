"""Compare crowdsourced side-effect frequencies against registry counts.

Each matched term pair becomes a 2x2 table; the closed-form two-group
binomial regression gives the log odds ratio (crowdsourced vs registry)
with a Wald test, Bonferroni-adjusted across the run.

    python demos/05_registry_comparison.py
"""

from pathlib import Path

from sekg.extract import read_rows
from sekg.ingest import faers_products, load_faers
from sekg.stats import (
    combine_faers,
    compare,
    load_matchmap,
    reddit_term_counts,
    spearman,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

rows = read_rows(GOLDEN / "rows_normalized.jsonl")
counts = reddit_term_counts(rows)
print(f"rows reporting side effects: {counts.total}")

products = faers_products(FIXTURES / "faers_totals.csv")
registry = combine_faers(
    [load_faers(FIXTURES / "faers.csv", p, FIXTURES / "faers_totals.csv") for p in products]
)
print(f"registry reports across {len(products)} products: {registry.total_reports}")

match_map = load_matchmap(FIXTURES / "matchmap.csv")
result = compare(counts, registry, match_map)

print(f"\n{'pair':28s} {'crowd':>7s} {'registry':>9s} {'logOR':>7s} {'p.adj':>7s}")
for row in result.rows:
    print(
        f"{row.reddit_term + '|' + row.fda_pt:28s} "
        f"{row.freq_reddit:7.3f} {row.freq_fda:9.3f} "
        f"{row.test.beta1:7.3f} {row.test.p_adjusted:7.3f}"
        + ("  (zero-cell corrected)" if row.test.corrected else "")
    )

rho = spearman(
    [row.freq_reddit for row in result.rows],
    [row.freq_fda for row in result.rows],
)
print(f"\nrank correlation of matched frequencies: {rho:.3f}")

print("\nreported but unmatched on the crowdsourced side:")
for term, count in result.unmatched_reddit:
    print(f"  {term} ({count} mentions)")
