"""Load raw discussion dumps into flat records and parse registry summaries.

Two input families are handled here:

* thread dumps: either nested thread trees (one JSON object per thread)
  or pre-flattened records (one JSON object per item), plus the cleaning
  filters applied before extraction;
* registry adverse-event summaries: a per-product CSV of preferred-term
  counts with a sidecar CSV of report totals.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from .errors import ConfigurationError, FaersFormatError, ThreadStructureError

logger = logging.getLogger(__name__)

KIND_POST = "post"
KIND_COMMENT = "comment"
KIND_REPLY = "reply"

_URL_RE = re.compile(r"(?:https?://\S+|www\.\S+)", re.IGNORECASE)
_URL_ONLY_RE = re.compile(
    r"^\s*(?:(?:https?://\S+|www\.\S+)\s*)+$", re.IGNORECASE
)
_BOT_PHRASE = "i am a bot"
_TOKEN_STRIP = ".,;:!?\"'()[]{}<>*~`^|\\/"

DEFAULT_BOT_AUTHORS = frozenset({"automoderator"})


@dataclass(frozen=True)
class RawItem:
    """One flattened post, comment, or reply."""

    id: str
    kind: str
    author: str
    created_at: int
    score: int
    text: str
    subreddit: str
    parent_id: str | None = None

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "kind": self.kind,
            "author": self.author,
            "created_at": self.created_at,
            "score": self.score,
            "text": self.text,
            "subreddit": self.subreddit,
        }
        if self.parent_id is not None:
            rec["parent_id"] = self.parent_id
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "RawItem":
        return cls(
            id=str(rec["id"]),
            kind=str(rec["kind"]),
            author=str(rec["author"]),
            created_at=int(rec["created_at"]),
            score=int(rec["score"]),
            text=str(rec["text"]),
            subreddit=str(rec["subreddit"]),
            parent_id=rec.get("parent_id"),
        )


@dataclass(frozen=True)
class FaersSummary:
    """Aggregate adverse-event counts for one product."""

    product: str
    rows: tuple[tuple[str, int], ...]
    total_reports: int
    as_of_quarter: str

    def count_for(self, preferred_term: str) -> int | None:
        for term, count in self.rows:
            if term == preferred_term:
                return count
        return None


def _load_stopwords() -> frozenset[str]:
    text = (
        resources.files("sekg")
        .joinpath("assets/english_stopwords.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(w.strip().lower() for w in text.split() if w.strip())


_STOPWORDS: frozenset[str] | None = None


def default_english_heuristic(text: str) -> bool:
    """True when the text looks English enough to keep.

    Texts with fewer than 5 whitespace tokens always pass; longer texts
    must have at least 20% of tokens in the bundled stopword list.
    """
    global _STOPWORDS
    if _STOPWORDS is None:
        _STOPWORDS = _load_stopwords()
    tokens = [t.strip(_TOKEN_STRIP).lower() for t in text.split()]
    tokens = [t for t in tokens if t]
    if len(tokens) < 5:
        return True
    hits = sum(1 for t in tokens if t in _STOPWORDS)
    return hits >= 0.2 * len(tokens)


@dataclass(frozen=True)
class FilterConfig:
    """Cleaning rules applied to flattened items.

    ``window_start``/``window_end`` are inclusive epoch-second bounds;
    items outside are dropped under the ``window`` rule. ``is_english``
    is a pluggable classifier returning True for items to keep.
    """

    bot_authors: frozenset[str] = DEFAULT_BOT_AUTHORS
    keep_deleted_authors: bool = True
    window_start: int | None = None
    window_end: int | None = None
    is_english: Callable[[str], bool] = default_english_heuristic

    def with_window(self, start: int | None, end: int | None) -> "FilterConfig":
        return replace(self, window_start=start, window_end=end)


def flatten_thread(tree: dict) -> list[RawItem]:
    """Flatten one nested thread into depth-first, document-order items.

    The root object must carry id/author/created_at/score/text/subreddit
    and an optional ``children`` list; children nest arbitrarily deep via
    their own ``children``. A child may carry an explicit ``parent_id``,
    which must then match its actual parent.
    """
    items: list[RawItem] = []
    seen: set[str] = set()

    def visit(node: dict, parent_id: str | None, depth: int, subreddit: str) -> None:
        node_id = str(node["id"])
        if node_id in seen:
            raise ThreadStructureError(f"duplicate id {node_id!r} in thread")
        seen.add(node_id)
        declared_parent = node.get("parent_id")
        if depth == 0:
            if declared_parent is not None:
                raise ThreadStructureError(
                    f"root node {node_id!r} must not carry a parent_id"
                )
        elif declared_parent is not None and str(declared_parent) != parent_id:
            raise ThreadStructureError(
                f"node {node_id!r} declares parent {declared_parent!r} "
                f"but is attached under {parent_id!r}"
            )
        kind = KIND_POST if depth == 0 else KIND_COMMENT if depth == 1 else KIND_REPLY
        sub = str(node.get("subreddit", subreddit))
        items.append(
            RawItem(
                id=node_id,
                kind=kind,
                author=str(node.get("author", "[deleted]")),
                created_at=int(node["created_at"]),
                score=int(node.get("score", 0)),
                text=str(node.get("text", "")),
                subreddit=sub,
                parent_id=parent_id,
            )
        )
        for child in node.get("children", []):
            visit(child, node_id, depth + 1, sub)

    visit(tree, None, 0, str(tree.get("subreddit", "")))
    return items


def _is_bot(item: RawItem, config: FilterConfig) -> bool:
    author = item.author.strip().lower()
    if author.endswith("bot"):
        return True
    if author in config.bot_authors:
        return True
    return _BOT_PHRASE in item.text.lower()


def _is_url_only(text: str) -> bool:
    stripped = text.strip()
    return bool(stripped) and _URL_ONLY_RE.match(stripped) is not None


def failing_rule(item: RawItem, config: FilterConfig) -> str | None:
    """Name of the first cleaning rule the item fails, or None if kept."""
    if config.window_start is not None and item.created_at < config.window_start:
        return "window"
    if config.window_end is not None and item.created_at > config.window_end:
        return "window"
    if not item.text.strip():
        return "empty"
    if _is_url_only(item.text):
        return "url_only"
    if _is_bot(item, config):
        return "bot"
    if not config.keep_deleted_authors and item.author.strip().lower() == "[deleted]":
        return "deleted_author"
    if not config.is_english(item.text):
        return "non_english"
    return None


def filter_items(
    items: Iterable[RawItem], config: FilterConfig | None = None
) -> list[RawItem]:
    """Keep the subsequence of items passing every cleaning rule.

    Each removal is logged with the item id and the rule that fired.
    Filters are pure predicates, so the pass is idempotent.
    """
    config = config or FilterConfig()
    kept: list[RawItem] = []
    for item in items:
        rule = failing_rule(item, config)
        if rule is None:
            kept.append(item)
        else:
            logger.info("ingest filtered id=%s rule=%s", item.id, rule)
    return kept


def read_thread_dump(path: str | Path, mode: str = "threads") -> list[RawItem]:
    """Read a newline-delimited dump in either input mode.

    ``threads`` mode expects one nested thread object per line and
    flattens each; ``flat`` mode expects one pre-flattened item record
    per line.
    """
    if mode not in ("threads", "flat"):
        raise ConfigurationError(f"unknown thread dump mode {mode!r}")
    items: list[RawItem] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if mode == "threads":
                items.extend(flatten_thread(obj))
            else:
                items.append(RawItem.from_record(obj))
    return items


def write_items(items: Iterable[RawItem], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_record(), sort_keys=True) + "\n")
            n += 1
    return n


def read_items(path: str | Path) -> list[RawItem]:
    with open(path, encoding="utf-8") as fh:
        return [RawItem.from_record(json.loads(line)) for line in fh if line.strip()]


def parse_window_date(value: str, *, end_of_day: bool = False) -> int:
    """Parse a YYYY-MM-DD collection-window bound into epoch seconds UTC."""
    try:
        day = datetime.strptime(value, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise ConfigurationError(f"bad window date {value!r}: {exc}") from exc
    epoch = int(day.timestamp())
    return epoch + 86399 if end_of_day else epoch


def _totals_path_for(path: Path) -> Path:
    return path.with_name(path.stem + "_totals" + path.suffix)


def load_faers(
    path: str | Path,
    product: str,
    totals_path: str | Path | None = None,
) -> FaersSummary:
    """Parse one product's adverse-event summary.

    The main CSV carries ``product,preferred_term,case_count`` rows; the
    sidecar CSV (default: ``<stem>_totals<ext>`` next to the main file)
    carries ``product,total_reports,as_of_quarter``. Preferred terms are
    trimmed but case-preserved.
    """
    path = Path(path)
    totals_path = Path(totals_path) if totals_path else _totals_path_for(path)
    if not path.exists():
        raise FaersFormatError(f"summary file not found: {path}")
    if not totals_path.exists():
        raise FaersFormatError(f"totals sidecar not found: {totals_path}")

    total_reports: int | None = None
    as_of: str | None = None
    with open(totals_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"product", "total_reports", "as_of_quarter"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise FaersFormatError(
                f"totals sidecar must have columns {sorted(required)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if row["product"].strip() != product:
                continue
            try:
                total_reports = int(row["total_reports"])
            except ValueError:
                raise FaersFormatError(
                    f"non-integer total_reports {row['total_reports']!r}",
                    line=lineno,
                ) from None
            if total_reports <= 0:
                raise FaersFormatError(
                    f"total_reports must be positive, got {total_reports}",
                    line=lineno,
                )
            as_of = row["as_of_quarter"].strip()
    if total_reports is None or as_of is None:
        raise FaersFormatError(
            f"no totals row for product {product!r} in {totals_path}"
        )

    rows: list[tuple[str, int]] = []
    seen_terms: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"product", "preferred_term", "case_count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise FaersFormatError(
                f"summary must have columns {sorted(required)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if row["product"].strip() != product:
                continue
            term = row["preferred_term"].strip()
            if not term:
                raise FaersFormatError("empty preferred_term", line=lineno)
            if term in seen_terms:
                raise FaersFormatError(
                    f"duplicate preferred_term {term!r}", line=lineno
                )
            seen_terms.add(term)
            try:
                count = int(row["case_count"])
            except ValueError:
                raise FaersFormatError(
                    f"non-integer case_count {row['case_count']!r}", line=lineno
                ) from None
            if count < 0:
                raise FaersFormatError(
                    f"negative case_count {count}", line=lineno
                )
            if count > total_reports:
                raise FaersFormatError(
                    f"case_count {count} exceeds total_reports {total_reports}",
                    line=lineno,
                )
            rows.append((term, count))

    if not rows:
        logger.warning("ingest faers product=%s has no preferred-term rows", product)
    return FaersSummary(
        product=product,
        rows=tuple(rows),
        total_reports=total_reports,
        as_of_quarter=as_of,
    )


def faers_products(totals_path: str | Path) -> list[str]:
    """Products listed in a totals sidecar, in file order."""
    products: list[str] = []
    with open(totals_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "product" not in reader.fieldnames:
            raise FaersFormatError("totals sidecar lacks a product column", line=1)
        for row in reader:
            name = row["product"].strip()
            if name and name not in products:
                products.append(name)
    return products


def save_faers(
    summary: FaersSummary,
    path: str | Path,
    totals_path: str | Path | None = None,
) -> None:
    """Serialize a summary back to the CSV pair read by :func:`load_faers`."""
    path = Path(path)
    totals_path = Path(totals_path) if totals_path else _totals_path_for(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["product", "preferred_term", "case_count"])
        for term, count in summary.rows:
            writer.writerow([summary.product, term, count])
    with open(totals_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["product", "total_reports", "as_of_quarter"])
        writer.writerow(
            [summary.product, summary.total_reports, summary.as_of_quarter]
        )
