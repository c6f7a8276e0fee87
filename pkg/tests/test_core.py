"""Data model, reasoning-block stripping, and rubric JSON parsing."""

import json

import pytest
from hypothesis import given, strategies as st

from rubrickit.core import (
    ConversationQuery,
    Criterion,
    Message,
    RubricSet,
    parse_rubric_json,
    render_conversation,
    rubric_set_to_obj,
    serialize_rubric_set,
    strip_code_fences,
    strip_reasoning,
)
from rubrickit.errors import (
    EmptyAfterStrip,
    MalformedJson,
    RubricParseError,
    SchemaViolation,
)

VALID = '{"rubrics": [{"criterion": "mentions hydration", "points": 3}]}'


class TestCriterion:
    def test_holds_text_and_points(self):
        c = Criterion("advises rest", -4, tags=("safety",))
        assert c.text == "advises rest"
        assert c.points == -4
        assert c.tags == ("safety",)

    def test_rejects_blank_text(self):
        with pytest.raises(ValueError):
            Criterion("   ", 1)

    def test_rejects_bool_points(self):
        with pytest.raises(ValueError):
            Criterion("x", True)

    def test_rejects_float_points(self):
        with pytest.raises(ValueError):
            Criterion("x", 1.5)


class TestRubricSet:
    def test_len_iter_texts(self):
        rs = RubricSet((Criterion("a b", 1), Criterion("c d", 2)))
        assert len(rs) == 2
        assert [c.points for c in rs] == [1, 2]
        assert rs.texts() == ["a b", "c d"]

    def test_positive_total_ignores_negatives(self):
        rs = RubricSet((Criterion("a", 5), Criterion("b", 3), Criterion("c", -4)))
        assert rs.positive_total() == 8

    def test_empty_set_is_legal(self):
        assert len(RubricSet()) == 0
        assert RubricSet().positive_total() == 0


class TestConversation:
    def test_role_validation(self):
        with pytest.raises(ValueError):
            Message("tool", "hi")

    def test_requires_one_message(self):
        with pytest.raises(ValueError):
            ConversationQuery("q", ())

    def test_ends_with_user_turn(self):
        q = ConversationQuery(
            "q",
            (Message("user", "hi"), Message("assistant", "hello"), Message("user", "more")),
        )
        assert q.ends_with_user_turn()

    def test_render_conversation_order_and_prefixes(self):
        q = ConversationQuery("q", (Message("user", "first"), Message("assistant", "second")))
        assert render_conversation(q) == "user: first\nassistant: second"


class TestStripReasoning:
    # oracle: hand-traced outcomes for crafted nesting cases
    CASES = [
        ("no markers at all", "no markers at all"),
        ("pre <think>hidden</think> post", "pre  post"),
        ("a <think>x <think>y</think> z</think> b", "a  b"),
        ("a <think>never closed", "a "),
        ("stray </think> stays", "stray </think> stays"),
        ("<think>all</think>", ""),
    ]

    @pytest.mark.parametrize("raw,expected", CASES)
    def test_hand_cases(self, raw, expected):
        assert strip_reasoning(raw) == expected

    def test_custom_markers(self):
        assert strip_reasoning("x [r]gone[/r] y", markers=("[r]", "[/r]")) == "x  y"

    @given(st.text(alphabet="<think>/ab ", max_size=60))
    def test_idempotent(self, text):
        once = strip_reasoning(text)
        assert strip_reasoning(once) == once

    @given(st.text(alphabet="abc <>/", max_size=40), st.text(alphabet="xy<think>/ ", max_size=40))
    def test_wrapped_block_removed(self, before, after):
        # a fresh balanced block around arbitrary marker-free text vanishes
        payload = "payload"
        text = before.replace("<think>", "") + "<think>" + payload + "</think>" + after
        assert payload not in strip_reasoning(text) or payload in (before + after)


class TestStripFences:
    def test_fence_lines_removed_payload_kept(self):
        text = "```json\n" + VALID + "\n```"
        assert strip_code_fences(text).strip() == VALID

    def test_inline_backticks_untouched(self):
        assert strip_code_fences("use ``` inline") == "use ``` inline"


class TestStrictParse:
    def test_valid_single_rubric(self):
        rs = parse_rubric_json(VALID)
        assert rs.texts() == ["mentions hydration"]
        assert rs.criteria[0].points == 3

    def test_empty_rubrics_list_accepted(self):
        assert len(parse_rubric_json('{"rubrics": []}')) == 0

    def test_not_json(self):
        with pytest.raises(MalformedJson):
            parse_rubric_json("not json at all")

    def test_extra_top_level_field(self):
        with pytest.raises(SchemaViolation) as err:
            parse_rubric_json('{"rubrics": [], "notes": "x"}')
        assert err.value.field == "notes"

    def test_missing_rubrics_key(self):
        with pytest.raises(SchemaViolation):
            parse_rubric_json('{"criteria": []}')

    def test_entry_extra_field(self):
        raw = '{"rubrics": [{"criterion": "a", "points": 1, "tag": "x"}]}'
        with pytest.raises(SchemaViolation) as err:
            parse_rubric_json(raw)
        assert err.value.field == "rubrics[0].tag"

    def test_entry_missing_points(self):
        with pytest.raises(SchemaViolation) as err:
            parse_rubric_json('{"rubrics": [{"criterion": "a"}]}')
        assert err.value.field == "rubrics[0].points"

    def test_float_points_rejected(self):
        with pytest.raises(SchemaViolation) as err:
            parse_rubric_json('{"rubrics": [{"criterion": "a", "points": 1.5}]}')
        assert err.value.field == "rubrics[0].points"

    def test_bool_points_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_rubric_json('{"rubrics": [{"criterion": "a", "points": true}]}')

    def test_surrounding_prose_rejected_in_strict(self):
        with pytest.raises(RubricParseError):
            parse_rubric_json("Here you go:\n" + VALID)


class TestLenientParse:
    def test_fenced_with_reasoning_equals_manual_extraction(self):
        wrapped = "<think>figuring out criteria</think>\n```json\n" + VALID + "\n```"
        assert parse_rubric_json(wrapped, mode="lenient") == parse_rubric_json(VALID)

    def test_prose_around_object(self):
        raw = "Sure! " + VALID + " Hope that helps."
        assert parse_rubric_json(raw, mode="lenient").texts() == ["mentions hydration"]

    def test_braces_inside_strings_do_not_confuse_extraction(self):
        raw = 'x {"rubrics": [{"criterion": "uses {braces} safely", "points": 1}]} y'
        assert parse_rubric_json(raw, mode="lenient").texts() == ["uses {braces} safely"]

    def test_reasoning_only_input(self):
        with pytest.raises(EmptyAfterStrip):
            parse_rubric_json("<think>only thoughts</think>", mode="lenient")

    def test_schema_still_enforced(self):
        with pytest.raises(SchemaViolation):
            parse_rubric_json('prose {"rubrics": [{"criterion": "a"}]} more', mode="lenient")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            parse_rubric_json(VALID, mode="relaxed")


criteria_strategy = st.lists(
    st.builds(
        Criterion,
        text=st.text(
            alphabet="abcdefghij ", min_size=1, max_size=30
        ).filter(lambda s: s.strip()),
        points=st.integers(min_value=-10, max_value=10),
    ),
    max_size=6,
)


class TestSerialization:
    @given(criteria_strategy)
    def test_round_trip(self, criteria):
        rs = RubricSet(tuple(criteria))
        # tags are not part of the wire schema, so compare texts/points
        parsed = parse_rubric_json(serialize_rubric_set(rs))
        assert parsed.texts() == rs.texts()
        assert [c.points for c in parsed] == [c.points for c in rs]

    def test_obj_shape(self):
        rs = RubricSet((Criterion("a", 1, tags=("t",)),))
        assert rubric_set_to_obj(rs) == {"rubrics": [{"criterion": "a", "points": 1}]}
        with_tags = rubric_set_to_obj(rs, include_tags=True)
        assert with_tags["rubrics"][0]["tags"] == ["t"]

    def test_serialized_is_strict_parseable(self):
        rs = RubricSet((Criterion("a", 1),))
        payload = serialize_rubric_set(rs, indent=2)
        json.loads(payload)
        assert parse_rubric_json(payload) == RubricSet((Criterion("a", 1),))
