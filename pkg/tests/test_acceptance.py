"""End-to-end and numerical acceptance checks.

One test per criterion; each prints a PASS line when its assertions
hold, so `pytest tests/test_acceptance.py -v -s` reads as a checklist.
"""

import json
import math
import time

import numpy as np
import pytest

from sekg import cli
from sekg.extract import (
    Brand,
    Relation,
    dedupe_records,
    parse_response,
)
from sekg.graph import (
    RenderParams,
    build_graph,
    document_to_json,
    edge_thickness,
    export_viewer_document,
    node_radius,
    parse_viewer_document,
)
from sekg.ingest import FilterConfig, RawItem, filter_items
from sekg.normalize import TermEmbedding, group_by_threshold
from sekg.stats import bonferroni, logor_test, sample_for_eval, spearman

from _oracles import brute_force_groups, irls_two_group_binomial, naive_spearman


def _pass(name: str) -> None:
    print(f"PASS: {name}")


class TestFixturePipeline:
    def test_run_reproduces_golden_artifacts_byte_for_byte(
        self, fixture_workdir, golden_dir
    ):
        started = time.monotonic()
        code = cli.main(["run", "--config", str(fixture_workdir / "config.ini")])
        elapsed = time.monotonic() - started
        assert code == 0
        assert elapsed < 10.0, f"pipeline took {elapsed:.1f}s, budget is 10s"

        out = fixture_workdir / "out"
        golden_names = sorted(p.name for p in golden_dir.iterdir())
        out_names = sorted(p.name for p in out.iterdir())
        assert out_names == golden_names
        for name in golden_names:
            assert (out / name).read_bytes() == (golden_dir / name).read_bytes(), (
                f"artifact {name} differs from its golden copy"
            )
        _pass(f"fixture pipeline matches golden bundle in {elapsed:.2f}s")

    def test_manifest_counts_equal_artifact_line_counts(
        self, fixture_workdir, golden_dir
    ):
        code = cli.main(["run", "--config", str(fixture_workdir / "config.ini")])
        assert code == 0
        out = fixture_workdir / "out"
        counts = json.loads((out / "manifest.json").read_text())["counts"]

        def lines(name: str) -> int:
            return len((out / name).read_text().splitlines())

        assert counts["items_kept"] == lines("items.jsonl")
        assert counts["rows"] == lines("rows.jsonl")
        assert counts["relations"] == lines("relations.jsonl")
        assert counts["rejects"] == lines("rejects.jsonl")
        assert counts["rows_normalized"] == lines("rows_normalized.jsonl")
        assert counts["relations_normalized"] == lines("relations_normalized.jsonl")
        assert counts["map_rows"] == lines("canonical_map.csv") - 1  # header
        assert counts["comparison_rows"] == lines("comparison.csv") - 1
        assert counts["comparison_unmatched"] == lines("comparison_unmatched.csv") - 1
        for slug in ("ozempic", "wegovy", "rybelsus", "unspecified_brands"):
            assert counts[f"comparison_rows_{slug}"] == lines(
                f"comparison_{slug}.csv"
            ) - 1
        document = json.loads((out / "graph.json").read_text())
        assert counts["graph_nodes"] == len(document["nodes"])
        assert counts["graph_links"] == len(document["links"])
        assert counts["relations"] == document["metadata"]["relation_count"]
        _pass("manifest stage counts equal artifact line counts")


# The three worked extraction responses and the fields they must parse to.
WORKED_RESPONSES = [
    (
        '[{"start": {"label": "Medication", "properties": {"name": "Ozempic"}}, '
        '"end": {"label": "SideEffect", "properties": {"name": "Stomach Cramps"}}, '
        '"properties": {"severity": "severe", "duration": "1 day", '
        '"dosage": "0.25 mg", "description": "The user experienced severe cramping '
        'in the stomach the day after the 0.25 mg injection."}}]',
        (Brand.OZEMPIC, "Stomach Cramps", "severe", "0.25 mg"),
    ),
    (
        '[{"start": {"label": "Medication", "properties": {"name": "Semaglutide"}}, '
        '"end": {"label": "SideEffect", "properties": {"name": "Nausea"}}, '
        '"properties": {"severity": "mild", "duration": null, "dosage": "1.2 mg", '
        '"description": "The user experienced mild nausea from semaglutide at the '
        '1.2 mg dose."}}]',
        (Brand.UNSPECIFIED, "Nausea", "mild", "1.2 mg"),
    ),
    (
        '[{"start": {"label": "Medication", "properties": {"name": "Ozempic"}}, '
        '"end": {"label": "SideEffect", "properties": {"name": "Depression"}}, '
        '"properties": {"severity": "severe", "duration": null, "dosage": "0.5 mg", '
        '"description": "The user experienced severe side effects after increasing '
        'the dosage of Ozempic to 0.5 mg."}}]',
        (Brand.OZEMPIC, "Depression", "severe", "0.5 mg"),
    ),
]


class TestWorkedExamples:
    def test_three_worked_responses_parse_exactly(self):
        for response, (brand, term, severity, dosage) in WORKED_RESPONSES:
            relations = parse_response(response)
            assert len(relations) == 1
            relation = relations[0]
            assert relation.medication is brand
            assert relation.side_effect == term
            assert relation.severity == severity
            assert relation.dosage == dosage
        _pass("the three worked extraction responses parse to the printed fields")


class TestRegressionOracle:
    def test_closed_form_equals_iterative_fit(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 100:
            n1 = int(rng.integers(5, 1000))
            n0 = int(rng.integers(5, 1000))
            a = int(rng.integers(1, n1))
            b = int(rng.integers(1, n0))
            ours = logor_test(a, n1, b, n0)
            assert not ours.corrected
            _, beta1, _, se1 = irls_two_group_binomial(a, n1, b, n0)
            assert abs(ours.beta1 - beta1) < 1e-8, (a, n1, b, n0)
            assert abs(ours.se - se1) < 1e-6, (a, n1, b, n0)
            checked += 1
        result = logor_test(20, 100, 10, 100)
        assert abs(result.beta1 - 0.81093) < 1e-5
        assert abs(result.se - 0.41667) < 1e-5
        _pass("closed-form regression matches the iterative fit on 100 tables")


class TestSpearmanOracle:
    def test_matches_naive_oracle_with_ties(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(3, 40))
            # integer draws force ties
            xs = rng.integers(0, max(2, n // 2), size=n).astype(float).tolist()
            ys = rng.integers(0, max(2, n // 2), size=n).astype(float).tolist()
            if len(set(xs)) < 2 or len(set(ys)) < 2:
                continue
            assert abs(spearman(xs, ys) - naive_spearman(xs, ys)) < 1e-12
        assert spearman([1, 5, 9, 11], [2, 4, 8, 100]) == pytest.approx(1.0)
        assert spearman([1, 5, 9, 11], [3, 2, 1, 0]) == pytest.approx(-1.0)
        _pass("rank correlation matches the naive oracle on 1000 tied vectors")


class TestBonferroniProperties:
    def test_bounds_scaling_and_example(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = int(rng.integers(1, 40))
            ps = rng.uniform(0.0, 1.0, size=m).tolist()
            adjusted = bonferroni(ps)
            assert all(q >= p for p, q in zip(ps, adjusted))
            assert all(q <= 1.0 for q in adjusted)
            assert all(
                q == min(1.0, p * m) for p, q in zip(ps, adjusted)
            )
        assert bonferroni([0.01, 0.02, 0.03, 0.04, 0.05]) == pytest.approx(
            [0.05, 0.10, 0.15, 0.20, 0.25]
        )
        _pass("family-size correction is pointwise bounded and exact on the example")


def _random_relations(rng, size: int) -> list[Relation]:
    brands = list(Brand)
    terms = ["Nausea", "Fatigue", "Hair Loss", "Dizziness", "Vomiting", "Chills"]
    severities = [None, "mild", "Severe", "moderate"]
    extras = [None, "1 day", "2 weeks", "0.5 mg"]
    out = []
    for i in range(size):
        out.append(
            Relation(
                medication=brands[int(rng.integers(len(brands)))],
                side_effect=terms[int(rng.integers(len(terms)))],
                description=f"d{i}",
                severity=severities[int(rng.integers(len(severities)))],
                duration=extras[int(rng.integers(len(extras)))],
                dosage=extras[int(rng.integers(len(extras)))],
                source_id=f"s{int(rng.integers(10))}",
                source_date=int(rng.integers(0, 100_000)),
            )
        )
    return out


class TestGraphInvariants:
    def test_invariants_on_random_relation_lists(self):
        rng = np.random.default_rng(5)
        params = RenderParams()
        for i in range(1000):
            relations = _random_relations(rng, int(rng.integers(0, 25)))
            kg = build_graph(relations)
            assert kg.relation_count == len(relations)
            for term, freq in kg.side_effects.items():
                incident = sum(e.weight for e in kg.edges if e.side_effect == term)
                assert freq == incident
            for edge in kg.edges:
                assert isinstance(edge.medication, Brand)
                assert not isinstance(edge.side_effect, Brand)
            if i % 20 == 0:
                blob = document_to_json(export_viewer_document(kg, params))
                kg2, params2, _ = parse_viewer_document(blob)
                assert kg2 == kg and params2 == params
        _pass("graph invariants and export round-trip hold on 1000 random lists")


class TestRenderGeometry:
    def test_exact_at_one_and_strictly_monotone(self):
        params = RenderParams(base_size=6.0, base_thickness=1.5)
        assert node_radius(1, params) == 6.0
        assert edge_thickness(1, params) == 0.0
        previous_r, previous_t = -math.inf, -math.inf
        for count in range(1, 10_001):
            r = node_radius(count, params)
            t = edge_thickness(count, params)
            assert r > previous_r and t > previous_t
            previous_r, previous_t = r, t
        _pass("geometry is exact at count=1 and strictly monotone to 10^4")


class TestNormalizationGrouping:
    def test_matches_brute_force_closure_on_random_matrices(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = int(rng.integers(2, 14))
            dim = int(rng.integers(2, 8))
            vectors = rng.normal(size=(n, dim))
            vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
            threshold = float(rng.uniform(0.3, 0.99))
            embeddings = [
                TermEmbedding(term=f"t{i:02d}", vector=tuple(v), norm=1.0)
                for i, v in enumerate(vectors)
            ]
            groups, residual = group_by_threshold(embeddings, threshold)
            # partition: every term in exactly one group
            members = sorted(m for g in groups for m in g.members)
            assert members == sorted(e.term for e in embeddings)
            assert sorted(residual) == sorted(g.canonical for g in groups)
            # must equal the BFS closure over the same similarity matrix
            sims = vectors @ vectors.T
            expected = brute_force_groups(sims, threshold)
            got = {
                frozenset(int(m[1:]) for m in g.members) for g in groups
            }
            assert got == expected
            # permutation invariance
            order = rng.permutation(n)
            shuffled = [embeddings[i] for i in order]
            groups2, _ = group_by_threshold(shuffled, threshold)
            assert {frozenset(g.members) for g in groups2} == {
                frozenset(g.members) for g in groups
            }
        _pass("threshold grouping matches the closure oracle on 200 matrices")

    def test_threshold_one_with_distinct_vectors_gives_singletons(self):
        rng = np.random.default_rng(17)
        vectors = rng.normal(size=(10, 6))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        embeddings = [
            TermEmbedding(term=f"t{i}", vector=tuple(v), norm=1.0)
            for i, v in enumerate(vectors)
        ]
        groups, _ = group_by_threshold(embeddings, 1.0)
        assert all(len(g.members) == 1 for g in groups)
        _pass("threshold 1.0 with distinct vectors yields all singletons")


class TestSampling:
    def test_five_percent_and_determinism(self):
        rows = list(range(4242))
        sample = sample_for_eval(rows, 0.05, seed=17)
        assert len(sample) == 213
        for _ in range(100):
            assert sample_for_eval(rows, 0.05, seed=17) == sample
        assert len(set(sample)) == len(sample)
        _pass("sampling draws 213 of 4242 at 5% and is seed-deterministic")


class TestIdempotence:
    def test_filters_and_dedupe_are_idempotent(self):
        rng = np.random.default_rng(19)
        texts = [
            "the shot made me dizzy for a few days but it passed",
            "https://spam.example/link",
            "I am a bot, and this was automatic",
            "totally fine here, no issues at all so far",
            "   ",
        ]
        items = [
            RawItem(
                id=f"i{k}",
                kind="post",
                author="alice" if k % 3 else "AutoModerator",
                created_at=int(rng.integers(1_600_000_000, 1_700_000_000)),
                score=0,
                text=texts[int(rng.integers(len(texts)))],
                subreddit="s",
            )
            for k in range(60)
        ]
        config = FilterConfig()
        once = filter_items(items, config)
        assert filter_items(once, config) == once

        relations = _random_relations(rng, 40)
        rows = []
        for k in range(30):
            item = items[int(rng.integers(len(items)))]
            chosen = [
                relations[int(rng.integers(len(relations)))]
                for _ in range(int(rng.integers(0, 3)))
            ]
            rows.append((item, chosen))
        deduped = dedupe_records(rows)
        assert dedupe_records(deduped) == deduped
        keys = [(item.id, item.text) for item, _ in deduped]
        assert len(set(keys)) == len(keys)
        _pass("cleaning filters and dedup are idempotent")
