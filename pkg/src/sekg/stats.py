"""Frequencies, the two-group binomial comparison, and eval scoring.

The crowdsourced and registry sides are compared per matched term pair
with a closed-form two-group binomial regression: the slope is the log
odds ratio for the crowdsourced source versus the registry, its standard
error is the usual 2x2 sum of inverse cells, and p-values are two-sided
normal tails, Bonferroni-adjusted across the rows of one comparison run.
Zero cells get the Haldane-Anscombe correction (0.5 added to all four
cells) and are flagged.
"""

from __future__ import annotations

import csv
import logging
import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence, TypeVar

from .errors import ConfigurationError, DataError
from .extract import Brand, Relation
from .ingest import FaersSummary, RawItem

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Registry product name carrying each brand's reports; the generic
# product collects the brand-unspecified ones.
BRAND_PRODUCT = {
    Brand.OZEMPIC: "Ozempic",
    Brand.WEGOVY: "Wegovy",
    Brand.RYBELSUS: "Rybelsus",
    Brand.UNSPECIFIED: "Semaglutide",
}


def frequency(count: int, total: int) -> float:
    """Share of reports naming an event: count / total."""
    if total <= 0:
        raise ValueError(f"total must be positive, got {total}")
    if count < 0 or count > total:
        raise ValueError(f"count must be in [0, {total}], got {count}")
    return count / total


@dataclass(frozen=True)
class TestResult:
    """Closed-form two-group binomial regression fit.

    ``beta0`` is the log odds in the registry group, ``beta1`` the log
    odds ratio of the crowdsourced group against it. ``corrected`` marks
    tables that needed the zero-cell adjustment.
    """

    beta0: float
    beta1: float
    se: float
    z: float
    p: float
    p_adjusted: float
    corrected: bool = False


def _two_sided_normal_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def logor_test(a: int, n1: int, b: int, n0: int) -> TestResult:
    """Fit the two-group binomial model for a 2x2 table in closed form.

    ``a`` of ``n1`` crowdsourced rows versus ``b`` of ``n0`` registry
    reports. The MLE is the empirical log odds ratio; any zero cell
    triggers the 0.5 correction on all four cells.
    """
    if n1 <= 0 or n0 <= 0:
        raise ValueError(f"group totals must be positive, got n1={n1}, n0={n0}")
    if not 0 <= a <= n1:
        raise ValueError(f"a must be in [0, {n1}], got {a}")
    if not 0 <= b <= n0:
        raise ValueError(f"b must be in [0, {n0}], got {b}")
    cells = (a, n1 - a, b, n0 - b)
    corrected = any(c == 0 for c in cells)
    fa, fn1, fb, fn0 = float(a), float(n1), float(b), float(n0)
    if corrected:
        fa += 0.5
        fb += 0.5
        fn1 += 1.0
        fn0 += 1.0
    odds1 = fa / (fn1 - fa)
    odds0 = fb / (fn0 - fb)
    beta0 = math.log(odds0)
    beta1 = math.log(odds1 / odds0)
    se = math.sqrt(
        1.0 / fa + 1.0 / (fn1 - fa) + 1.0 / fb + 1.0 / (fn0 - fb)
    )
    z = beta1 / se
    p = _two_sided_normal_p(z)
    return TestResult(
        beta0=beta0, beta1=beta1, se=se, z=z, p=p, p_adjusted=p, corrected=corrected
    )


def bonferroni(p_values: Sequence[float]) -> list[float]:
    """Multiply each p by the family size and clamp at 1."""
    m = len(p_values)
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-values must be in [0, 1], got {p}")
    return [min(1.0, p * m) for p in p_values]


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation: Pearson correlation of average ranks.

    Ties receive the mean of the rank positions they span.
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least two observations")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    n = len(rx)
    mean_x = math.fsum(rx) / n
    mean_y = math.fsum(ry) / n
    dx = [r - mean_x for r in rx]
    dy = [r - mean_y for r in ry]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise ValueError("rank variance is zero; correlation undefined")
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    return cov / math.sqrt(var_x * var_y)


@dataclass(frozen=True)
class MatchMap:
    """Hand-curated pairing of crowdsourced terms with registry PTs."""

    pairs: tuple[tuple[str, str], ...]
    unmatched_reddit: tuple[str, ...] = ()
    unmatched_fda: tuple[str, ...] = ()

    def __post_init__(self):
        reddit_terms = [r for r, _ in self.pairs]
        fda_terms = [f for _, f in self.pairs]
        if len(set(reddit_terms)) != len(reddit_terms):
            raise DataError("a crowdsourced term appears in more than one pair")
        if len(set(fda_terms)) != len(fda_terms):
            raise DataError("a registry PT appears in more than one pair")


def load_matchmap(path: str | Path) -> MatchMap:
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"reddit_term", "fda_pt"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConfigurationError(
                f"match map must have columns {sorted(required)}"
            )
        for row in reader:
            pairs.append((row["reddit_term"].strip(), row["fda_pt"].strip()))
    return MatchMap(pairs=tuple(pairs))


@dataclass(frozen=True)
class SourceCounts:
    """Per-term event counts plus the report denominator for one source."""

    counts: Mapping[str, int]
    total: int


def reddit_term_counts(
    rows: Sequence[tuple[RawItem, list[Relation]]],
    brand: Brand | None = None,
) -> SourceCounts:
    """Mention counts per canonical term over deduplicated rows.

    The denominator is the number of rows reporting at least one side
    effect (of the given brand, when restricted), matching the share
    definition used for the crowdsourced source.
    """
    counts: dict[str, int] = {}
    total = 0
    for _, relations in rows:
        matching = [
            r for r in relations if brand is None or r.medication == brand
        ]
        if matching:
            total += 1
        for relation in matching:
            counts[relation.side_effect] = counts.get(relation.side_effect, 0) + 1
    return SourceCounts(counts=counts, total=total)


def combine_faers(summaries: Sequence[FaersSummary]) -> FaersSummary:
    """Aggregate per-product summaries into an all-products view."""
    if not summaries:
        raise ValueError("need at least one summary to combine")
    counts: dict[str, int] = {}
    total = 0
    for summary in summaries:
        total += summary.total_reports
        for term, count in summary.rows:
            counts[term] = counts.get(term, 0) + count
    return FaersSummary(
        product="All",
        rows=tuple(sorted(counts.items())),
        total_reports=total,
        as_of_quarter=max(s.as_of_quarter for s in summaries),
    )


@dataclass(frozen=True)
class ComparisonRow:
    reddit_term: str
    fda_pt: str
    a: int
    n1: int
    b: int
    n0: int
    freq_reddit: float
    freq_fda: float
    test: TestResult
    brand: Brand | None = None


@dataclass(frozen=True)
class ComparisonResult:
    rows: tuple[ComparisonRow, ...]
    unmatched_reddit: tuple[tuple[str, int], ...]
    unmatched_fda: tuple[tuple[str, int], ...]


def compare(
    reddit: SourceCounts,
    faers: FaersSummary,
    match_map: MatchMap,
    brand: Brand | None = None,
) -> ComparisonResult:
    """One comparison row per matched pair, Bonferroni-adjusted together.

    When a brand is given the crowdsourced counts must already be
    restricted to it and the registry summary must be the matching
    product's. Unmatched terms on both sides are reported, not dropped.
    """
    if brand is not None:
        expected = BRAND_PRODUCT[brand]
        if faers.product != expected:
            raise ConfigurationError(
                f"brand {brand.value!r} needs registry product {expected!r}, "
                f"got {faers.product!r}"
            )
    faers_counts = dict(faers.rows)
    rows: list[ComparisonRow] = []
    for reddit_term, fda_pt in match_map.pairs:
        if reddit_term not in reddit.counts:
            raise DataError(
                f"matched crowdsourced term {reddit_term!r} has no counts"
            )
        if fda_pt not in faers_counts:
            raise DataError(
                f"matched registry PT {fda_pt!r} is absent from product "
                f"{faers.product!r}"
            )
        a = reddit.counts[reddit_term]
        b = faers_counts[fda_pt]
        n1 = reddit.total
        n0 = faers.total_reports
        if a > n1:
            raise DataError(
                f"term {reddit_term!r} has more mentions ({a}) than rows ({n1})"
            )
        rows.append(
            ComparisonRow(
                reddit_term=reddit_term,
                fda_pt=fda_pt,
                a=a,
                n1=n1,
                b=b,
                n0=n0,
                freq_reddit=frequency(a, n1),
                freq_fda=frequency(b, n0),
                test=logor_test(a, n1, b, n0),
                brand=brand,
            )
        )
    adjusted = bonferroni([row.test.p for row in rows])
    rows = [
        replace(row, test=replace(row.test, p_adjusted=p_adj))
        for row, p_adj in zip(rows, adjusted)
    ]
    paired_reddit = {r for r, _ in match_map.pairs}
    paired_fda = {f for _, f in match_map.pairs}
    unmatched_reddit = tuple(
        sorted(
            ((t, c) for t, c in reddit.counts.items() if t not in paired_reddit),
            key=lambda tc: (-tc[1], tc[0]),
        )
    )
    unmatched_fda = tuple(
        sorted(
            ((t, c) for t, c in faers_counts.items() if t not in paired_fda),
            key=lambda tc: (-tc[1], tc[0]),
        )
    )
    for term, _ in unmatched_reddit:
        logger.info("stats unmatched source=reddit term=%r", term)
    for term, _ in unmatched_fda:
        logger.info("stats unmatched source=fda term=%r", term)
    return ComparisonResult(
        rows=tuple(rows),
        unmatched_reddit=unmatched_reddit,
        unmatched_fda=unmatched_fda,
    )


def _format_float(x: float) -> str:
    return format(x, ".10g")


def write_comparison_csv(result: ComparisonResult, path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "term_pair",
                "brand",
                "a",
                "n1",
                "b",
                "n0",
                "freq_reddit",
                "freq_fda",
                "beta1",
                "se",
                "z",
                "p",
                "p_adjusted",
                "corrected_flag",
            ]
        )
        for row in result.rows:
            writer.writerow(
                [
                    f"{row.reddit_term}|{row.fda_pt}",
                    row.brand.value if row.brand else "",
                    row.a,
                    row.n1,
                    row.b,
                    row.n0,
                    _format_float(row.freq_reddit),
                    _format_float(row.freq_fda),
                    _format_float(row.test.beta1),
                    _format_float(row.test.se),
                    _format_float(row.test.z),
                    _format_float(row.test.p),
                    _format_float(row.test.p_adjusted),
                    "true" if row.test.corrected else "false",
                ]
            )
            n += 1
    return n


def write_unmatched_csv(result: ComparisonResult, path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "term", "count"])
        for term, count in result.unmatched_reddit:
            writer.writerow(["reddit", term, count])
            n += 1
        for term, count in result.unmatched_fda:
            writer.writerow(["fda", term, count])
            n += 1
    return n


def sample_for_eval(
    rows: Sequence[T], fraction: float = 0.05, seed: int = 0
) -> list[T]:
    """Uniform sample without replacement of ceil(fraction * len(rows)).

    The fraction is interpreted as the decimal written in config (via
    Fraction-of-string), so 5% of 60 rows is 3, not a float artifact's 4.
    Deterministic for a given seed.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if not rows:
        return []
    size = math.ceil(Fraction(str(fraction)) * len(rows))
    rng = random.Random(seed)
    return rng.sample(list(rows), size)


def score_annotations(
    annotations: Mapping[str, Sequence[int]],
) -> tuple[float, list[int]]:
    """Majority-vote verdict per relation plus the overall accuracy.

    Every relation must be scored by the same odd number (>= 3) of
    annotators with 0/1 scores.
    """
    if not annotations:
        raise DataError("no annotations to score")
    k = None
    for rid, scores in annotations.items():
        if any(s not in (0, 1) for s in scores):
            raise DataError(f"relation {rid!r} has a score outside 0/1")
        if k is None:
            k = len(scores)
        elif len(scores) != k:
            raise DataError(
                f"relation {rid!r} has {len(scores)} scores, expected {k}"
            )
    assert k is not None
    if k < 3 or k % 2 == 0:
        raise ConfigurationError(
            f"annotator count must be odd and at least 3, got {k}"
        )
    verdicts = [
        1 if 2 * sum(scores) > k else 0 for scores in annotations.values()
    ]
    accuracy = sum(verdicts) / len(verdicts)
    return accuracy, verdicts


def load_annotations(
    path: str | Path,
) -> tuple[dict[str, list[int]], dict[str, list[int]]]:
    """Read annotator scores: one row per (relation, annotator).

    Returns side-effect and severity score lists per relation, annotators
    ordered consistently. A relation missing any annotator's row is an
    input error naming the relation.
    """
    per_relation: dict[str, dict[str, tuple[int, int]]] = {}
    annotators: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"relation_id", "annotator", "side_effect_score", "severity_score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConfigurationError(
                f"annotation file must have columns {sorted(required)}"
            )
        for row in reader:
            rid = row["relation_id"].strip()
            annotator = row["annotator"].strip()
            if annotator not in annotators:
                annotators.append(annotator)
            try:
                scores = (
                    int(row["side_effect_score"]),
                    int(row["severity_score"]),
                )
            except ValueError:
                raise DataError(
                    f"relation {rid!r} annotator {annotator!r} has "
                    "non-integer scores"
                ) from None
            per_relation.setdefault(rid, {})[annotator] = scores
    ordered = sorted(annotators)
    side_effect: dict[str, list[int]] = {}
    severity: dict[str, list[int]] = {}
    for rid, by_annotator in per_relation.items():
        missing = [a for a in ordered if a not in by_annotator]
        if missing:
            raise DataError(
                f"relation {rid!r} is missing scores from {missing}"
            )
        side_effect[rid] = [by_annotator[a][0] for a in ordered]
        severity[rid] = [by_annotator[a][1] for a in ordered]
    return side_effect, severity
