"""Flatten nested discussion threads and apply the cleaning filters.

Runs entirely offline against the bundled fixture corpus:

    python demos/01_flatten_and_filter.py
"""

from pathlib import Path

from sekg.ingest import (
    FilterConfig,
    failing_rule,
    filter_items,
    parse_window_date,
    read_thread_dump,
)

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# One JSON object per line, each a whole thread tree; flattening walks the
# tree depth-first and tags depth 0 as post, depth 1 as comment, deeper
# nodes as replies.
items = read_thread_dump(FIXTURES / "threads.jsonl", mode="threads")
print(f"flattened items: {len(items)}")
for kind in ("post", "comment", "reply"):
    print(f"  {kind:8s} {sum(1 for i in items if i.kind == kind)}")

# The cleaning pass drops URL-only bodies, bot authors and bot boilerplate,
# non-English text (cheap stopword heuristic), and anything outside the
# collection window.
config = FilterConfig(
    window_start=parse_window_date("2017-12-01"),
    window_end=parse_window_date("2025-01-31", end_of_day=True),
)
kept = filter_items(items, config)
print(f"\nkept after filtering: {len(kept)} of {len(items)}")

print("\nremovals and the rule that fired:")
for item in items:
    rule = failing_rule(item, config)
    if rule is not None:
        preview = item.text.strip()[:50] or "<blank>"
        print(f"  {item.id}  {rule:12s}  {preview}")
