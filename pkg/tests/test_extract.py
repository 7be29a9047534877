"""Prompt building, response parsing, brand whitelisting, and dedup."""

import json

import pytest
from hypothesis import given, strategies as st

from sekg.errors import BrandWhitelistError, ConfigurationError, ResponseFormatError
from sekg.extract import (
    Brand,
    Relation,
    build_prompt,
    canonical_brand,
    dedupe_records,
    extract_relations,
    load_prompt_template,
    parse_response,
)
from sekg.ingest import RawItem
from sekg.providers import ReplayCache


def make_item(item_id="x1", text="some text", created_at=1_700_000_000) -> RawItem:
    return RawItem(
        id=item_id,
        kind="post",
        author="alice",
        created_at=created_at,
        score=1,
        text=text,
        subreddit="sub",
    )


class ScriptedLLM:
    """Answers from a prompt-substring table; counts calls."""

    def __init__(self, by_text: dict[str, str]):
        self.by_text = by_text
        self.calls = 0

    def complete(self, model_id: str, prompt: str) -> str:
        self.calls += 1
        for text, response in self.by_text.items():
            if text in prompt:
                return response
        raise AssertionError(f"no scripted response for prompt: {prompt[:80]}...")


class TestBuildPrompt:
    def test_contains_guidelines_and_text(self):
        prompt = build_prompt("abc")
        assert "### Guidelines:" in prompt
        assert "Here is the given text: abc" in prompt

    def test_braces_in_text_not_reinterpolated(self):
        prompt = build_prompt("brace {x} and {text} inside")
        assert "brace {x} and {text} inside" in prompt
        # the template's own placeholder was consumed by the first pass
        assert prompt.count("Here is the given text:") == 1

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            build_prompt("")

    def test_missing_template_file_is_configuration_error(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_prompt_template(tmp_path / "nope.txt")

    def test_template_without_placeholder_rejected(self):
        with pytest.raises(ConfigurationError):
            build_prompt("abc", template="no placeholder here")


# Responses printed for the three worked extraction examples.
TABLE1_RESPONSES = [
    '[{"start": {"label": "Medication", "properties": {"name": "Ozempic"}}, '
    '"end": {"label": "SideEffect", "properties": {"name": "Stomach Cramps"}}, '
    '"properties": {"severity": "severe", "duration": "1 day", "dosage": "0.25 mg", '
    '"description": "The user experienced severe cramping in the stomach the day '
    'after the 0.25 mg injection."}}]',
    '[{"start": {"label": "Medication", "properties": {"name": "Semaglutide"}}, '
    '"end": {"label": "SideEffect", "properties": {"name": "Nausea"}}, '
    '"properties": {"severity": "mild", "duration": null, "dosage": "1.2 mg", '
    '"description": "The user experienced mild nausea from semaglutide at the '
    '1.2 mg dose."}}]',
    '[{"start": {"label": "Medication", "properties": {"name": "Ozempic"}}, '
    '"end": {"label": "SideEffect", "properties": {"name": "Depression"}}, '
    '"properties": {"severity": "severe", "duration": null, "dosage": "0.5 mg", '
    '"description": "The user experienced severe side effects after increasing '
    'the dosage of Ozempic to 0.5 mg."}}]',
]


class TestParseResponse:
    def test_stomach_cramps_example(self):
        relations = parse_response(TABLE1_RESPONSES[0])
        assert len(relations) == 1
        r = relations[0]
        assert r.medication is Brand.OZEMPIC
        assert r.side_effect == "Stomach Cramps"
        assert r.severity == "severe"
        assert r.duration == "1 day"
        assert r.dosage == "0.25 mg"

    def test_generic_name_maps_to_unspecified(self):
        relations = parse_response(TABLE1_RESPONSES[1])
        assert relations[0].medication is Brand.UNSPECIFIED
        assert relations[0].side_effect == "Nausea"
        assert relations[0].severity == "mild"
        assert relations[0].duration is None
        assert relations[0].dosage == "1.2 mg"

    def test_null_means_no_relations(self):
        assert parse_response("null") == []
        assert parse_response("  null\n") == []
        assert parse_response("```\nnull\n```") == []

    def test_json_null_means_no_relations(self):
        assert parse_response("```json\nnull\n```") == []

    def test_prose_is_parse_error(self):
        with pytest.raises(ResponseFormatError) as err:
            parse_response("I think the side effects are nausea and fatigue.")
        assert "side effects" in err.value.response_text

    def test_fenced_json_unwrapped(self):
        fenced = f"```json\n{TABLE1_RESPONSES[0]}\n```"
        assert len(parse_response(fenced)) == 1

    def test_missing_description_is_parse_error(self):
        bad = json.dumps(
            [
                {
                    "start": {"properties": {"name": "Ozempic"}},
                    "end": {"properties": {"name": "Nausea"}},
                    "properties": {"severity": None},
                }
            ]
        )
        with pytest.raises(ResponseFormatError):
            parse_response(bad)

    def test_non_array_is_parse_error(self):
        with pytest.raises(ResponseFormatError):
            parse_response('{"start": {}}')

    def test_non_whitelisted_brand_dropped_not_fatal(self):
        mixed = json.dumps(
            [
                {
                    "start": {"properties": {"name": "Mounjaro"}},
                    "end": {"properties": {"name": "Headache"}},
                    "properties": {"description": "other drug"},
                },
                {
                    "start": {"properties": {"name": "Wegovy"}},
                    "end": {"properties": {"name": "Nausea"}},
                    "properties": {"description": "kept"},
                },
            ]
        )
        relations = parse_response(mixed)
        assert [r.medication for r in relations] == [Brand.WEGOVY]

    def test_every_parsed_medication_is_in_the_enum(self):
        for response in TABLE1_RESPONSES:
            for relation in parse_response(response):
                assert relation.medication in Brand


class TestCanonicalBrand:
    def test_semaglutide_maps_to_unspecified(self):
        assert canonical_brand("Semaglutide") is Brand.UNSPECIFIED

    def test_case_insensitive(self):
        assert canonical_brand("OZEMPIC") is Brand.OZEMPIC
        assert canonical_brand(" wegovy ") is Brand.WEGOVY
        assert canonical_brand("Rybelsus") is Brand.RYBELSUS

    def test_other_drug_rejected(self):
        with pytest.raises(BrandWhitelistError):
            canonical_brand("Mounjaro")

    def test_empty_rejected(self):
        with pytest.raises(BrandWhitelistError):
            canonical_brand("   ")


class TestRelationRoundTrip:
    def test_serialize_parse_identity(self):
        relation = Relation(
            medication=Brand.UNSPECIFIED,
            side_effect="Nausea",
            description="felt sick",
            severity="mild",
            duration=None,
            dosage="1 mg",
            source_id="abc",
            source_date=123,
        )
        assert Relation.from_record(relation.to_record()) == relation

    @given(
        st.builds(
            Relation,
            medication=st.sampled_from(list(Brand)),
            side_effect=st.text(min_size=1, max_size=30),
            description=st.text(min_size=1, max_size=50),
            severity=st.none() | st.text(min_size=1, max_size=10),
            duration=st.none() | st.text(min_size=1, max_size=10),
            dosage=st.none() | st.text(min_size=1, max_size=10),
            source_id=st.text(max_size=10),
            source_date=st.integers(min_value=0, max_value=2_000_000_000),
        )
    )
    def test_round_trip_property(self, relation):
        assert Relation.from_record(json.loads(json.dumps(relation.to_record()))) == relation


class TestExtractRelations:
    def test_stamps_source_and_uses_cache(self, tmp_path):
        item = make_item(item_id="post9", text="felt mild nausea on 1.2mg", created_at=42)
        llm = ScriptedLLM({"felt mild nausea on 1.2mg": TABLE1_RESPONSES[1]})
        cache = ReplayCache(tmp_path / "cache")
        relations = extract_relations(item, llm, cache, "test-model")
        assert relations[0].source_id == "post9"
        assert relations[0].source_date == 42
        assert llm.calls == 1
        # cached now: identical output, zero further provider calls
        again = extract_relations(item, llm, cache, "test-model")
        assert again == relations
        assert llm.calls == 1


class TestExtractCorpus:
    def test_provider_failure_quarantines_item(self, tmp_path):
        from sekg.errors import ProviderError
        from sekg.extract import extract_corpus

        class FailingLLM:
            def complete(self, model_id, prompt):
                raise ProviderError("transport down after 3 attempts", retryable=True)

        items = [make_item(item_id="a", text="some experience text here")]
        rows, rejects = extract_corpus(
            items, FailingLLM(), ReplayCache(tmp_path), "m"
        )
        assert rows == []
        assert len(rejects) == 1
        assert rejects[0].source_id == "a"
        assert rejects[0].error_kind == "provider"

    def test_configuration_error_is_fatal_not_quarantined(self, tmp_path):
        from sekg.errors import ConfigurationError
        from sekg.extract import extract_corpus
        from sekg.providers import UnavailableProvider

        items = [make_item(item_id="a", text="needs a live provider")]
        with pytest.raises(ConfigurationError):
            extract_corpus(
                items, UnavailableProvider("completion"), ReplayCache(tmp_path), "m"
            )


class TestDedupe:
    def row(self, item_id, text, n_relations=1):
        item = make_item(item_id=item_id, text=text)
        relations = [
            Relation(
                medication=Brand.OZEMPIC,
                side_effect=f"effect {i}",
                description="d",
                source_id=item_id,
            )
            for i in range(n_relations)
        ]
        return (item, relations)

    def test_identical_id_text_collapses(self):
        rows = [self.row("a", "same"), self.row("a", "same")]
        assert len(dedupe_records(rows)) == 1

    def test_same_id_different_text_both_kept(self):
        rows = [self.row("a", "before edit"), self.row("a", "after edit")]
        assert len(dedupe_records(rows)) == 2

    def test_relationless_rows_removed_first(self):
        rows = [self.row("a", "t", n_relations=0), self.row("b", "u")]
        kept = dedupe_records(rows)
        assert [item.id for item, _ in kept] == ["b"]

    def test_idempotent(self):
        rows = [
            self.row("a", "x"),
            self.row("a", "x"),
            self.row("b", "y", n_relations=0),
            self.row("c", "z"),
        ]
        once = dedupe_records(rows)
        assert dedupe_records(once) == once

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["a", "b", "c"]),
                st.sampled_from(["t1", "t2"]),
                st.integers(min_value=0, max_value=2),
            ),
            max_size=20,
        )
    )
    def test_output_is_subsequence_with_unique_keys(self, spec):
        rows = [self.row(i, t, n) for i, t, n in spec]
        kept = dedupe_records(rows)
        keys = [(item.id, item.text) for item, _ in kept]
        assert len(set(keys)) == len(keys)
        # subsequence check: kept rows appear in input order
        it = iter(rows)
        assert all(any(row == candidate for candidate in it) for row in kept)
