"""Consolidate raw side-effect strings into canonical terms.

Three mechanisms, applied in order:

1. embedding similarity: terms whose vectors are connected by a chain of
   cosine similarities at or above the threshold merge into one group
   (union-find, so the partition is independent of input order);
2. provider-assisted clustering of the remaining group representatives:
   each is either matched to an existing key or becomes a new key;
3. a user override file that wins unconditionally, replacing manual
   review; it can redirect individual raw terms or rename whole groups.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    OverrideCycleError,
    ProviderContractError,
)
from .extract import Relation, strip_code_fence
from .providers import EmbeddingProvider, LLMProvider, ReplayCache, cached_complete, cached_embed

logger = logging.getLogger(__name__)

PROVENANCE_THRESHOLD = "threshold"
PROVENANCE_LLM = "llm"
PROVENANCE_OVERRIDE = "override"

NEW_KEY_TOKEN = "NEW"


@dataclass(frozen=True)
class TermEmbedding:
    """A term with its L2-normalized vector and the original norm."""

    term: str
    vector: tuple[float, ...]
    norm: float


@dataclass(frozen=True)
class CanonicalGroup:
    canonical: str
    members: frozenset[str]
    provenance: Mapping[str, str]


@dataclass(frozen=True)
class CanonicalMap:
    """Partition of raw terms into canonical groups.

    Every canonical name is a member of its own group; lookups outside
    the partition return None and callers decide whether to warn.
    """

    groups: tuple[CanonicalGroup, ...]

    def lookup(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for group in self.groups:
            for member in group.members:
                out[member] = group.canonical
        return out

    def all_members(self) -> set[str]:
        return set().union(*(g.members for g in self.groups)) if self.groups else set()


def embed_terms(
    terms: Sequence[str],
    provider: EmbeddingProvider,
    cache: ReplayCache,
    model_id: str,
) -> list[TermEmbedding]:
    """Embed unique terms, cache-first, and L2-normalize the vectors."""
    if len(set(terms)) != len(terms):
        raise ValueError("terms must be unique")
    if any(not t for t in terms):
        raise ValueError("terms must be non-empty")
    if not terms:
        return []
    raw_vectors = cached_embed(provider, cache, model_id, terms)
    width = len(raw_vectors[0])
    out: list[TermEmbedding] = []
    for term, vec in zip(terms, raw_vectors):
        if len(vec) != width:
            raise ProviderContractError(
                f"embedding width changed mid-run: {len(vec)} != {width} "
                f"(term {term!r})"
            )
        norm = math.sqrt(math.fsum(x * x for x in vec))
        if norm == 0.0 or not math.isfinite(norm):
            raise ProviderContractError(
                f"embedding for {term!r} has invalid norm {norm!r}"
            )
        out.append(
            TermEmbedding(
                term=term,
                vector=tuple(x / norm for x in vec),
                norm=norm,
            )
        )
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _representative(
    members: list[str], frequencies: Mapping[str, int] | None
) -> str:
    def freq(term: str) -> int:
        return frequencies.get(term, 0) if frequencies else 0

    return min(members, key=lambda t: (-freq(t), t))


def group_by_threshold(
    embeddings: Sequence[TermEmbedding],
    threshold: float = 0.9,
    frequencies: Mapping[str, int] | None = None,
) -> tuple[list[CanonicalGroup], list[str]]:
    """Merge terms connected by pairwise cosine similarity >= threshold.

    Merging is transitive closure over qualifying pairs, so the partition
    is invariant under permutation of the input. Each group's canonical
    is its most frequent member (ties break lexicographically), with
    ``frequencies`` counting mentions in the relation corpus.

    Returns the groups plus the residual: one representative per group
    (singletons included), ordered by descending group frequency then
    lexicographically, ready for the clustering pass.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if not embeddings:
        return [], []
    terms = [e.term for e in embeddings]
    matrix = np.array([e.vector for e in embeddings], dtype=np.float64)
    sims = matrix @ matrix.T
    n = len(terms)
    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if sims[i, j] >= threshold:
                uf.union(i, j)
    clusters: dict[int, list[str]] = {}
    for i in range(n):
        clusters.setdefault(uf.find(i), []).append(terms[i])

    def group_freq(members: list[str]) -> int:
        if not frequencies:
            return 0
        return sum(frequencies.get(m, 0) for m in members)

    groups: list[CanonicalGroup] = []
    for members in clusters.values():
        rep = _representative(members, frequencies)
        provenance = {
            m: PROVENANCE_THRESHOLD for m in members
        }
        groups.append(
            CanonicalGroup(
                canonical=rep,
                members=frozenset(members),
                provenance=provenance,
            )
        )
    groups.sort(key=lambda g: (-group_freq(sorted(g.members)), g.canonical))
    residual = [g.canonical for g in groups]
    return groups, residual


_CLUSTER_TEMPLATE: str | None = None


def load_cluster_template(path: str | Path | None = None) -> str:
    global _CLUSTER_TEMPLATE
    if path is not None:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(
                f"clustering prompt template not readable: {path} ({exc})"
            ) from exc
    if _CLUSTER_TEMPLATE is None:
        try:
            _CLUSTER_TEMPLATE = (
                resources.files("sekg")
                .joinpath("assets/clustering_prompt.txt")
                .read_text(encoding="utf-8")
            )
        except (FileNotFoundError, OSError) as exc:
            raise ConfigurationError(
                f"bundled clustering prompt asset is missing: {exc}"
            ) from exc
    return _CLUSTER_TEMPLATE


def build_cluster_prompt(term: str, keys: Sequence[str], template: str | None = None) -> str:
    template = template if template is not None else load_cluster_template()
    keys_block = "\n".join(f"- {k}" for k in keys) if keys else "(none)"
    return template.replace("{keys}", keys_block, 1).replace("{term}", term, 1)


def llm_cluster(
    residual: Sequence[str],
    llm: LLMProvider,
    cache: ReplayCache,
    model_id: str,
    template: str | None = None,
) -> dict[str, str]:
    """Sequentially assign each residual term to an existing key or itself.

    The provider sees the keys accumulated so far and answers either an
    existing key verbatim or the NEW token. Unparseable answers make the
    term its own key (logged), so one bad response cannot stall the run.
    """
    if not residual:
        raise ValueError("residual must be non-empty")
    assignment: dict[str, str] = {}
    keys: list[str] = []
    for term in residual:
        prompt = build_cluster_prompt(term, keys, template)
        answer = strip_code_fence(cached_complete(llm, cache, model_id, prompt))
        answer = answer.strip()
        if answer in keys:
            assignment[term] = answer
            continue
        if answer != NEW_KEY_TOKEN:
            logger.warning(
                "normalize cluster unparseable term=%r answer=%r; kept as own key",
                term,
                answer,
            )
        assignment[term] = term
        keys.append(term)
    return assignment


def compose_canonical_map(
    threshold_groups: Sequence[CanonicalGroup],
    cluster_assignment: Mapping[str, str],
) -> CanonicalMap:
    """Fold the clustering pass into the threshold partition.

    Threshold groups whose representatives share a key merge; members
    keep ``threshold`` provenance when a similarity chain attached them
    to their representative and get ``llm`` provenance when the
    clustering pass placed them (representatives and their groups).
    """
    merged: dict[str, dict[str, str]] = {}
    for group in threshold_groups:
        key = cluster_assignment.get(group.canonical, group.canonical)
        bucket = merged.setdefault(key, {})
        for member in group.members:
            if member == group.canonical:
                bucket[member] = PROVENANCE_LLM
            else:
                bucket[member] = PROVENANCE_THRESHOLD
    groups = []
    for canonical in sorted(merged):
        provenance = merged[canonical]
        provenance.setdefault(canonical, PROVENANCE_LLM)
        groups.append(
            CanonicalGroup(
                canonical=canonical,
                members=frozenset(provenance),
                provenance=provenance,
            )
        )
    return CanonicalMap(groups=tuple(groups))


def load_overrides(path: str | Path) -> dict[str, str]:
    """Read the override CSV (``raw_term,canonical_term``), reject cycles.

    Raw terms are case-sensitive; duplicate raw terms and cyclic rename
    chains are configuration errors.
    """
    overrides: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"raw_term", "canonical_term"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConfigurationError(
                f"override file must have columns {sorted(required)}"
            )
        for row in reader:
            raw = row["raw_term"]
            target = row["canonical_term"]
            if raw in overrides:
                raise ConfigurationError(
                    f"duplicate override for raw term {raw!r}"
                )
            overrides[raw] = target
    _check_override_cycles(overrides)
    return overrides


def _check_override_cycles(overrides: Mapping[str, str]) -> None:
    for start in overrides:
        seen = {start}
        current = overrides[start]
        while current in overrides:
            if current in seen:
                raise OverrideCycleError(
                    f"override chain starting at {start!r} forms a cycle"
                )
            seen.add(current)
            current = overrides[current]


def resolve_term(
    raw: str,
    lookup: Mapping[str, str],
    overrides: Mapping[str, str],
) -> tuple[str, str | None]:
    """Final canonical for one raw term plus the deciding mechanism.

    Precedence: an override on the raw term, else its group canonical,
    else unchanged (mechanism None signals the pass-through warning).
    Overrides also apply to the group canonical, so one line renames a
    whole group. Rename chains are followed to their end; resolution is
    idempotent, which keeps the exported map a true partition. A loop
    through the override/map graph is a configuration error.
    """
    term = raw
    mechanism: str | None = None
    seen: set[str] = set()
    while True:
        if term in seen:
            raise OverrideCycleError(
                f"override resolution for {raw!r} loops at {term!r}"
            )
        seen.add(term)
        if term in overrides:
            term = overrides[term]
            mechanism = PROVENANCE_OVERRIDE
            continue
        canonical = lookup.get(term)
        if canonical is None or canonical == term:
            if mechanism is None and canonical is not None:
                mechanism = "map"
            return term, mechanism
        term = canonical
        if mechanism != PROVENANCE_OVERRIDE:
            mechanism = "map"


def apply_canonical_map(
    relations: Sequence[Relation],
    cmap: CanonicalMap,
    overrides: Mapping[str, str] | None = None,
) -> list[Relation]:
    """Rewrite each relation's side effect to its canonical term.

    Output length equals input length and every other field is left
    untouched. Terms absent from both the map and the overrides pass
    through with a warning.
    """
    overrides = overrides or {}
    _check_override_cycles(overrides)
    lookup = cmap.lookup()
    warned: set[str] = set()
    out: list[Relation] = []
    for relation in relations:
        canonical, mechanism = resolve_term(relation.side_effect, lookup, overrides)
        if mechanism is None and relation.side_effect not in warned:
            logger.warning(
                "normalize unmapped term=%r passes through unchanged",
                relation.side_effect,
            )
            warned.add(relation.side_effect)
        if canonical == relation.side_effect:
            out.append(relation)
        else:
            out.append(
                Relation(
                    medication=relation.medication,
                    side_effect=canonical,
                    description=relation.description,
                    severity=relation.severity,
                    duration=relation.duration,
                    dosage=relation.dosage,
                    source_id=relation.source_id,
                    source_date=relation.source_date,
                )
            )
    return out


def effective_map(
    cmap: CanonicalMap, overrides: Mapping[str, str] | None = None
) -> CanonicalMap:
    """The canonical map with overrides folded in, for export and audit.

    Members redirected by the override file carry ``override``
    provenance; override targets join their own group so the partition
    invariant (every canonical is a member of its group) holds.
    """
    overrides = overrides or {}
    _check_override_cycles(overrides)
    lookup = cmap.lookup()
    final: dict[str, dict[str, str]] = {}
    for group in cmap.groups:
        for member in group.members:
            canonical, mechanism = resolve_term(member, lookup, overrides)
            provenance = (
                PROVENANCE_OVERRIDE
                if mechanism == PROVENANCE_OVERRIDE
                else group.provenance.get(member, PROVENANCE_LLM)
            )
            final.setdefault(canonical, {})[member] = provenance
    groups = []
    for canonical in sorted(final):
        provenance = final[canonical]
        provenance.setdefault(canonical, PROVENANCE_OVERRIDE)
        groups.append(
            CanonicalGroup(
                canonical=canonical,
                members=frozenset(provenance),
                provenance=provenance,
            )
        )
    return CanonicalMap(groups=tuple(groups))


def write_canonical_map(cmap: CanonicalMap, path: str | Path) -> int:
    """Export the map as audit CSV rows ``canonical,member,provenance``."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["canonical", "member", "provenance"])
        for group in sorted(cmap.groups, key=lambda g: g.canonical):
            for member in sorted(group.members):
                writer.writerow(
                    [group.canonical, member, group.provenance.get(member, "")]
                )
                n += 1
    return n


def read_canonical_map(path: str | Path) -> CanonicalMap:
    by_canonical: dict[str, dict[str, str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            by_canonical.setdefault(row["canonical"], {})[row["member"]] = row[
                "provenance"
            ]
    groups = tuple(
        CanonicalGroup(
            canonical=canonical,
            members=frozenset(provenance),
            provenance=provenance,
        )
        for canonical, provenance in sorted(by_canonical.items())
    )
    return CanonicalMap(groups=groups)


def term_frequencies(relations: Iterable[Relation]) -> dict[str, int]:
    """Mention counts per raw side-effect string."""
    counts: dict[str, int] = {}
    for relation in relations:
        counts[relation.side_effect] = counts.get(relation.side_effect, 0) + 1
    return counts
