"""JSON extraction, schema subset validation, normalization, canonical form."""

from __future__ import annotations

import math

import pytest

from ctax.errors import ConfigError
from ctax.validation import (
    canonical_digest,
    canonical_serialize,
    check_schema_doc,
    extract_final_answer,
    extract_json,
    normalize_answer,
    strict_loads,
    validate_regex,
    validate_schema,
)


# ---------------------------------------------------------------------------
# strict_loads
# ---------------------------------------------------------------------------

def test_strict_loads_plain_object():
    assert strict_loads('{"a": 1, "b": [true, null]}') == {"a": 1, "b": [True, None]}


def test_strict_loads_rejects_duplicate_keys():
    with pytest.raises(ValueError):
        strict_loads('{"a": 1, "a": 2}')


def test_strict_loads_rejects_nested_duplicate_keys():
    with pytest.raises(ValueError):
        strict_loads('{"outer": {"a": 1, "a": 2}}')


def test_strict_loads_rejects_non_finite():
    for text in ("NaN", "Infinity", "-Infinity", '{"x": NaN}', "[Infinity]"):
        with pytest.raises(ValueError):
            strict_loads(text)


# ---------------------------------------------------------------------------
# extract_json
# ---------------------------------------------------------------------------

def test_extract_whole_text_object():
    out = extract_json('{"answer": "9"}')
    assert out.ok and out.value == {"answer": "9"}


def test_extract_fenced_block_wins_over_inline():
    text = 'ignore {"answer": "1"}\n```json\n{"answer": "2"}\n```\ntail'
    out = extract_json(text)
    assert out.ok and out.value == {"answer": "2"}


def test_extract_fenced_block_case_insensitive():
    text = '```JSON\n{"answer": "3"}\n```'
    out = extract_json(text)
    assert out.ok and out.value == {"answer": "3"}


def test_extract_balanced_object_from_prose():
    text = 'The result is {"answer": "42"} as computed above.'
    out = extract_json(text)
    assert out.ok and out.value == {"answer": "42"}


def test_extract_first_balanced_object():
    text = 'a {"answer": "1"} b {"answer": "2"}'
    out = extract_json(text)
    assert out.value == {"answer": "1"}


def test_extract_braces_inside_strings_do_not_split_objects():
    text = 'x {"answer": "a}b", "note": "{"} y'
    out = extract_json(text)
    assert out.ok and out.value == {"answer": "a}b", "note": "{"}


def test_extract_nested_object():
    text = 'call: {"tool": "t", "arguments": {"duration_minutes": 30}} done'
    out = extract_json(text)
    assert out.ok and out.value["arguments"] == {"duration_minutes": 30}


def test_extract_malformed_when_brace_present():
    out = extract_json('{"answer": broken')
    assert not out.ok and out.status == "malformed_json"


def test_extract_no_json_found():
    out = extract_json("the answer is nine")
    assert not out.ok and out.status == "no_json_found"


def test_extract_empty_text():
    assert extract_json("").status == "no_json_found"


def test_extract_duplicate_keys_malformed():
    out = extract_json('{"a": 1, "a": 2}')
    assert out.status == "malformed_json"


def test_extract_strict_whole_text_only():
    ok = extract_json('{"answer": "9"}', strict=True)
    assert ok.ok
    embedded = extract_json('text {"answer": "9"} text', strict=True)
    assert not embedded.ok and embedded.status == "malformed_json"
    absent = extract_json("no braces here", strict=True)
    assert absent.status == "no_json_found"


def test_extract_strict_tolerates_surrounding_whitespace():
    out = extract_json('  {"answer": "9"}\n', strict=True)
    assert out.ok


def test_extract_non_object_top_level():
    # arrays and scalars parse but are not objects; extraction still reports them
    out = extract_json("[1, 2]")
    assert out.ok and out.value == [1, 2]


# ---------------------------------------------------------------------------
# schema document checking
# ---------------------------------------------------------------------------

def test_check_schema_doc_accepts_subset():
    check_schema_doc({
        "type": "object",
        "required": ["answer"],
        "properties": {"answer": {"type": "string", "pattern": "^[a-z]+$"}},
        "additionalProperties": False,
    })


def test_check_schema_doc_rejects_unknown_keyword():
    with pytest.raises(ConfigError):
        check_schema_doc({"type": "object", "maxLength": 4})


def test_check_schema_doc_rejects_nested_unknown_keyword():
    with pytest.raises(ConfigError):
        check_schema_doc({"properties": {"a": {"anyOf": []}}})


def test_check_schema_doc_rejects_bad_pattern():
    with pytest.raises(ConfigError):
        check_schema_doc({"pattern": "["})


def test_check_schema_doc_rejects_additional_properties_true():
    with pytest.raises(ConfigError):
        check_schema_doc({"additionalProperties": True})


# ---------------------------------------------------------------------------
# validate_schema
# ---------------------------------------------------------------------------

def test_validate_type_and_required():
    schema = {"type": "object", "required": ["answer"],
              "properties": {"answer": {"type": "string"}}}
    assert validate_schema({"answer": "x"}, schema) == []
    missing = validate_schema({}, schema)
    assert missing and missing[0].keyword == "required"
    wrong_type = validate_schema({"answer": 3}, schema)
    assert wrong_type and wrong_type[0].keyword == "type"
    assert wrong_type[0].path == "/answer"


def test_validate_additional_properties():
    schema = {"type": "object", "properties": {"a": {}},
              "additionalProperties": False}
    assert validate_schema({"a": 1}, schema) == []
    extra = validate_schema({"a": 1, "b": 2}, schema)
    assert extra and extra[0].keyword == "additionalProperties"


def test_validate_pattern_search_vs_anchored():
    assert validate_schema("xbx", {"pattern": "b"}) == []
    assert validate_schema("xbx", {"pattern": "^b$"}) != []
    assert validate_schema("b", {"pattern": "^b$"}) == []


def test_validate_pattern_ignored_on_non_strings():
    assert validate_schema(5, {"pattern": "^[a-z]+$"}) == []


def test_validate_integer_excludes_bool_and_float():
    assert validate_schema(3, {"type": "integer"}) == []
    assert validate_schema(True, {"type": "integer"}) != []
    assert validate_schema(3.0, {"type": "integer"}) != []


def test_validate_number_excludes_bool():
    assert validate_schema(3, {"type": "number"}) == []
    assert validate_schema(2.5, {"type": "number"}) == []
    assert validate_schema(False, {"type": "number"}) != []


def test_validate_const_bool_guard():
    assert validate_schema(True, {"const": True}) == []
    assert validate_schema(1, {"const": True}) != []
    assert validate_schema(True, {"const": 1}) != []
    assert validate_schema(1.0, {"const": 1}) == []


def test_validate_enum():
    schema = {"enum": ["a", 2, None]}
    assert validate_schema("a", schema) == []
    assert validate_schema(2, schema) == []
    assert validate_schema(None, schema) == []
    assert validate_schema(True, schema) != []
    assert validate_schema("b", schema) != []


def test_validate_minimum_inclusive():
    assert validate_schema(0, {"minimum": 0}) == []
    assert validate_schema(-1, {"minimum": 0}) != []
    assert validate_schema("abc", {"minimum": 0}) == []  # vacuous off-type


def test_validate_items():
    schema = {"type": "array", "items": {"type": "integer"}}
    assert validate_schema([1, 2], schema) == []
    bad = validate_schema([1, "x"], schema)
    assert bad and bad[0].path == "/1"


def test_validate_nested_path_reporting():
    schema = {"type": "object", "properties": {
        "arguments": {"type": "object", "properties": {
            "date": {"type": "string", "pattern": "^\\d{4}-\\d{2}-\\d{2}$"}}}}}
    bad = validate_schema({"arguments": {"date": "2025-3-01"}}, schema)
    assert bad and bad[0].path == "/arguments/date" and bad[0].keyword == "pattern"


def test_validate_type_mismatch_short_circuits_children():
    schema = {"type": "object", "required": ["a"],
              "properties": {"a": {"type": "string"}}}
    violations = validate_schema("not an object", schema)
    assert len(violations) == 1 and violations[0].keyword == "type"


def test_validate_collects_multiple_violations():
    schema = {"type": "object", "required": ["a", "b"],
              "properties": {"a": {"type": "string"}},
              "additionalProperties": False}
    violations = validate_schema({"a": 1, "z": 2}, schema)
    keywords = sorted(v.keyword for v in violations)
    assert keywords == ["additionalProperties", "required", "type"]


# ---------------------------------------------------------------------------
# validate_regex
# ---------------------------------------------------------------------------

def test_regex_full_match_only():
    assert validate_regex("42", "^-?\\d+$")
    assert not validate_regex("42 balls", "^-?\\d+$")
    assert not validate_regex("x42", "^-?\\d+$")


def test_regex_trailing_whitespace_tolerated():
    assert validate_regex("42\n", "^-?\\d+$")
    assert validate_regex("true  ", "^(true|false)$")
    assert not validate_regex("  42", "^-?\\d+$")  # leading space is content


# ---------------------------------------------------------------------------
# final answer extraction
# ---------------------------------------------------------------------------

def test_final_answer_labeled_line():
    text = "Step 1: 3 + 5 = 8\nStep 2: 8 + 2 = 10\nFinal answer: 9"
    assert extract_final_answer(text) == "9"


def test_final_answer_is_variant():
    assert extract_final_answer("the final answer is 42") == "42"


def test_final_answer_case_insensitive():
    assert extract_final_answer("FINAL ANSWER: true") == "true"


def test_final_answer_last_label_wins():
    text = "Final answer: 1\nwait\nFinal answer: 2"
    assert extract_final_answer(text) == "2"


def test_final_answer_falls_back_to_last_line():
    assert extract_final_answer("some reasoning\n9") == "9"


def test_final_answer_blank_text_none():
    assert extract_final_answer("") is None
    assert extract_final_answer("  \n\n  ") is None


# ---------------------------------------------------------------------------
# answer normalization
# ---------------------------------------------------------------------------

def test_normalize_strip_lower():
    assert normalize_answer("  Eve ") == "eve"
    assert normalize_answer("TRUE") == "true"


def test_normalize_arithmetic_forms():
    family = "arithmetic_two_step"
    assert normalize_answer("1,234", family) == "1234"
    assert normalize_answer("+9", family) == "9"
    assert normalize_answer("9.0", family) == "9"
    assert normalize_answer("-0", family) == "0"
    assert normalize_answer(" 12 ", family) == "12"


def test_normalize_idempotent():
    samples = ["  Eve ", "TRUE", "1,234", "+9", "9.0", "-0", "tg", "9 balls",
               "{\"answer\":\"x\"}", ""]
    for family in (None, "arithmetic_two_step", "boolean_logic"):
        for sample in samples:
            once = normalize_answer(sample, family)
            assert normalize_answer(once, family) == once


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------

def test_canonical_sorted_and_compact():
    obj = {"b": 1, "a": {"d": 2, "c": [3, 4]}}
    assert canonical_serialize(obj) == '{"a":{"c":[3,4],"d":2},"b":1}'


def test_canonical_preserves_unicode():
    assert canonical_serialize({"t": "café"}) == '{"t":"café"}'


def test_canonical_rejects_non_finite():
    with pytest.raises(ValueError):
        canonical_serialize({"x": math.nan})
    with pytest.raises(ValueError):
        canonical_serialize({"x": math.inf})


def test_canonical_round_trip_stable():
    obj = {"tool": "create_calendar_event",
           "arguments": {"duration_minutes": 30, "attendee": "leo"}}
    text = canonical_serialize(obj)
    assert canonical_serialize(strict_loads(text)) == text


def test_canonical_digest_is_short_and_stable():
    a = canonical_digest({"x": 1, "y": 2})
    b = canonical_digest({"y": 2, "x": 1})
    assert a == b and len(a) == 12
    assert canonical_digest({"x": 1}) != a
