"""Extract medication→side-effect relations using the replay cache.

No endpoint or API key is needed: every provider response for the
fixture corpus is already cached, so extraction replays deterministically.

    python demos/02_extract_from_cache.py
"""

from pathlib import Path

from sekg.extract import build_prompt, dedupe_records, extract_corpus
from sekg.ingest import FilterConfig, filter_items, parse_window_date, read_thread_dump
from sekg.providers import ReplayCache, UnavailableProvider

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

items = filter_items(
    read_thread_dump(FIXTURES / "threads.jsonl", mode="threads"),
    FilterConfig(
        window_start=parse_window_date("2017-12-01"),
        window_end=parse_window_date("2025-01-31", end_of_day=True),
    ),
)

# The prompt template ships as a package asset; the item text is spliced
# into it in a single pass, so the exact request bytes are reproducible.
print("prompt for the first item starts with:")
print("  " + build_prompt(items[0].text).splitlines()[0][:99])

# UnavailableProvider raises if anything misses the cache, proving the
# run is fully offline.
cache = ReplayCache(FIXTURES / "cache")
rows, rejects = extract_corpus(
    items, UnavailableProvider("completion"), cache, "test-extractor-v1"
)
rows = dedupe_records(rows)

print(f"\nrows with at least one relation: {len(rows)}")
print(f"quarantined responses: {len(rejects)}")
for reject in rejects:
    print(f"  {reject.source_id}: {reject.error_kind} -> {reject.response_excerpt[:60]}")

print("\na few extracted relations:")
for _, relations in rows[:4]:
    for r in relations:
        props = ", ".join(
            f"{k}={v}" for k, v in
            (("severity", r.severity), ("duration", r.duration), ("dosage", r.dosage))
            if v is not None
        )
        print(f"  {r.medication.value} -> {r.side_effect}  ({props or 'no properties'})")
