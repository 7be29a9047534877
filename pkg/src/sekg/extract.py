"""Turn item text into validated medication→side-effect relations.

The extraction prompt ships as a repo asset and is interpolated in a
single pass, so the exact bytes sent to the provider are stable across
runs. Responses are parsed strictly: the literal ``null`` (optionally
code-fenced) means "nothing to extract"; anything else must be a JSON
array of relation objects. Relations naming a medication outside the
closed brand whitelist are dropped and logged rather than failing the
response.
"""

from __future__ import annotations

import enum
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    BrandWhitelistError,
    ConfigurationError,
    ProviderError,
    ResponseFormatError,
)
from .ingest import RawItem
from .providers import LLMProvider, ReplayCache, cached_complete

logger = logging.getLogger(__name__)

_PROMPT_PLACEHOLDER = "{text}"
_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*\n?(.*?)\n?```$", re.DOTALL)


class Brand(enum.Enum):
    """Closed set of admissible medication entities."""

    OZEMPIC = "Ozempic"
    WEGOVY = "Wegovy"
    RYBELSUS = "Rybelsus"
    UNSPECIFIED = "Unspecified Brands"

    @classmethod
    def from_label(cls, label: str) -> "Brand":
        for brand in cls:
            if brand.value == label:
                return brand
        raise BrandWhitelistError(f"unknown brand label {label!r}")


# Whitelisted provider-facing names; the generic drug name maps to the
# brand-unspecified bucket.
_BRAND_LOOKUP = {
    "ozempic": Brand.OZEMPIC,
    "wegovy": Brand.WEGOVY,
    "rybelsus": Brand.RYBELSUS,
    "semaglutide": Brand.UNSPECIFIED,
}


def canonical_brand(name: str) -> Brand:
    """Map a medication name from a response onto the brand whitelist.

    Matching is case-insensitive after trimming surrounding whitespace.
    Non-whitelisted names raise, and the caller drops the enclosing
    relation: side effects of other drugs must not enter the graph.
    """
    if not name or not name.strip():
        raise BrandWhitelistError("empty medication name")
    brand = _BRAND_LOOKUP.get(name.strip().lower())
    if brand is None:
        raise BrandWhitelistError(f"medication {name!r} is not whitelisted")
    return brand


@dataclass(frozen=True)
class Relation:
    """One medication→side-effect triple with optional stated properties."""

    medication: Brand
    side_effect: str
    description: str
    severity: str | None = None
    duration: str | None = None
    dosage: str | None = None
    source_id: str = ""
    source_date: int = 0

    def to_record(self) -> dict:
        return {
            "medication": self.medication.value,
            "side_effect": self.side_effect,
            "severity": self.severity,
            "duration": self.duration,
            "dosage": self.dosage,
            "description": self.description,
            "source_id": self.source_id,
            "source_date": self.source_date,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Relation":
        return cls(
            medication=Brand.from_label(rec["medication"]),
            side_effect=rec["side_effect"],
            severity=rec.get("severity"),
            duration=rec.get("duration"),
            dosage=rec.get("dosage"),
            description=rec["description"],
            source_id=rec.get("source_id", ""),
            source_date=int(rec.get("source_date", 0)),
        )


_DEFAULT_TEMPLATE: str | None = None


def load_prompt_template(path: str | Path | None = None) -> str:
    """Load the extraction template, from the bundled asset by default."""
    global _DEFAULT_TEMPLATE
    if path is not None:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(
                f"extraction prompt template not readable: {path} ({exc})"
            ) from exc
    if _DEFAULT_TEMPLATE is None:
        try:
            _DEFAULT_TEMPLATE = (
                resources.files("sekg")
                .joinpath("assets/extraction_prompt.txt")
                .read_text(encoding="utf-8")
            )
        except (FileNotFoundError, OSError) as exc:
            raise ConfigurationError(
                f"bundled extraction prompt asset is missing: {exc}"
            ) from exc
    return _DEFAULT_TEMPLATE


def build_prompt(text: str, template: str | None = None) -> str:
    """Interpolate the item text into the extraction template.

    Single-pass substitution of the ``{text}`` placeholder; braces in the
    input are preserved literally and never re-interpolated.
    """
    if not text:
        raise ValueError("cannot build a prompt for empty text")
    template = template if template is not None else load_prompt_template()
    if _PROMPT_PLACEHOLDER not in template:
        raise ConfigurationError(
            "extraction template lacks the {text} placeholder"
        )
    return template.replace(_PROMPT_PLACEHOLDER, text, 1)


def strip_code_fence(text: str) -> str:
    """Unwrap one Markdown code fence if the whole payload is fenced."""
    stripped = text.strip()
    m = _FENCE_RE.match(stripped)
    return m.group(1).strip() if m else stripped


def _relation_from_obj(obj: dict, raw: str) -> Relation | None:
    """Build one relation from a response object; None drops it (whitelist)."""

    def fail(msg: str) -> ResponseFormatError:
        return ResponseFormatError(msg, response_text=raw)

    if not isinstance(obj, dict):
        raise fail(f"relation entry is not an object: {obj!r}")
    try:
        med_name = obj["start"]["properties"]["name"]
        se_name = obj["end"]["properties"]["name"]
    except (KeyError, TypeError):
        raise fail("relation entry lacks start/end properties.name") from None
    props = obj.get("properties")
    if not isinstance(props, dict):
        raise fail("relation entry lacks a properties object")
    if not isinstance(se_name, str) or not se_name.strip():
        raise fail("side-effect name must be a non-empty string")
    description = props.get("description")
    if not isinstance(description, str) or not description.strip():
        raise fail("description must be a non-empty string")

    optional: dict[str, str | None] = {}
    for key in ("severity", "duration", "dosage"):
        value = props.get(key)
        if value is None:
            optional[key] = None
        elif isinstance(value, str):
            optional[key] = value
        else:
            raise fail(f"{key} must be a string or null, got {value!r}")

    try:
        medication = canonical_brand(str(med_name))
    except BrandWhitelistError:
        logger.info("extract dropped relation reason=whitelist name=%r", med_name)
        return None
    return Relation(
        medication=medication,
        side_effect=se_name.strip(),
        description=description,
        severity=optional["severity"],
        duration=optional["duration"],
        dosage=optional["dosage"],
    )


def parse_response(text: str) -> list[Relation]:
    """Parse one raw provider response into relations.

    The literal ``null`` (after trimming, optionally fenced) yields an
    empty list. Otherwise the payload must be a JSON array of relation
    objects; schema violations raise with the offending text attached.
    """
    payload = strip_code_fence(text)
    if payload == "null":
        return []
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ResponseFormatError(
            f"response is not valid JSON: {exc}", response_text=text
        ) from exc
    if data is None:
        return []
    if not isinstance(data, list):
        raise ResponseFormatError(
            "response must be a JSON array of relation objects",
            response_text=text,
        )
    relations: list[Relation] = []
    for obj in data:
        relation = _relation_from_obj(obj, text)
        if relation is not None:
            relations.append(relation)
    return relations


def extract_relations(
    item: RawItem,
    provider: LLMProvider,
    cache: ReplayCache,
    model_id: str,
    template: str | None = None,
) -> list[Relation]:
    """Prompt → (cache-first) completion → parse, stamped with provenance."""
    prompt = build_prompt(item.text, template)
    response = cached_complete(provider, cache, model_id, prompt)
    relations = parse_response(response)
    return [
        Relation(
            medication=r.medication,
            side_effect=r.side_effect,
            description=r.description,
            severity=r.severity,
            duration=r.duration,
            dosage=r.dosage,
            source_id=item.id,
            source_date=item.created_at,
        )
        for r in relations
    ]


@dataclass(frozen=True)
class RejectRecord:
    """One quarantined item: extraction failed but the pipeline went on."""

    source_id: str
    error_kind: str
    response_excerpt: str

    def to_record(self) -> dict:
        return {
            "source_id": self.source_id,
            "error_kind": self.error_kind,
            "response_excerpt": self.response_excerpt,
        }


def extract_corpus(
    items: Sequence[RawItem],
    provider: LLMProvider,
    cache: ReplayCache,
    model_id: str,
    template: str | None = None,
    max_in_flight: int = 4,
) -> tuple[list[tuple[RawItem, list[Relation]]], list[RejectRecord]]:
    """Extract over a corpus with bounded provider parallelism.

    Items whose responses cannot be parsed, or whose provider calls
    exhausted their retries, are quarantined as rejects; everything else
    flows through. Output order follows input order regardless of worker
    scheduling, so a fully cached corpus reproduces byte-identical
    artifacts.
    """
    rows: list[tuple[RawItem, list[Relation]]] = []
    rejects: list[RejectRecord] = []

    def work(item: RawItem) -> list[Relation]:
        return extract_relations(item, provider, cache, model_id, template)

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        futures = [(item, pool.submit(work, item)) for item in items]
        for item, future in futures:
            try:
                rows.append((item, future.result()))
            except ResponseFormatError as exc:
                logger.warning(
                    "extract rejected id=%s kind=parse error=%s", item.id, exc
                )
                rejects.append(
                    RejectRecord(item.id, "parse", exc.response_text[:200])
                )
            except ProviderError as exc:
                logger.warning(
                    "extract rejected id=%s kind=provider error=%s", item.id, exc
                )
                rejects.append(RejectRecord(item.id, "provider", str(exc)[:200]))
    return rows, rejects


def dedupe_records(
    rows: Iterable[tuple[RawItem, list[Relation]]],
) -> list[tuple[RawItem, list[Relation]]]:
    """Drop relation-less rows, then keep the first of each (id, text) pair.

    Order is preserved; the result is a subsequence of the input and the
    pass is idempotent.
    """
    seen: set[tuple[str, str]] = set()
    kept: list[tuple[RawItem, list[Relation]]] = []
    for item, relations in rows:
        if not relations:
            continue
        key = (item.id, item.text)
        if key in seen:
            continue
        seen.add(key)
        kept.append((item, relations))
    return kept


def write_rows(
    rows: Iterable[tuple[RawItem, list[Relation]]], path: str | Path
) -> int:
    """Write deduplicated rows (item + its relations) as JSON lines."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for item, relations in rows:
            fh.write(
                json.dumps(
                    {
                        "item": item.to_record(),
                        "relations": [r.to_record() for r in relations],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            n += 1
    return n


def read_rows(path: str | Path) -> list[tuple[RawItem, list[Relation]]]:
    rows: list[tuple[RawItem, list[Relation]]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            rows.append(
                (
                    RawItem.from_record(rec["item"]),
                    [Relation.from_record(r) for r in rec["relations"]],
                )
            )
    return rows


def write_relations(relations: Iterable[Relation], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for relation in relations:
            fh.write(json.dumps(relation.to_record(), sort_keys=True) + "\n")
            n += 1
    return n


def read_relations(path: str | Path) -> list[Relation]:
    with open(path, encoding="utf-8") as fh:
        return [
            Relation.from_record(json.loads(line)) for line in fh if line.strip()
        ]


def write_rejects(rejects: Iterable[RejectRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for reject in rejects:
            fh.write(json.dumps(reject.to_record(), sort_keys=True) + "\n")
            n += 1
    return n
