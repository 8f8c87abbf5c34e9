"""Semantic checkers and the error taxonomy.

Three independent verdicts per completion: answer correctness (normalized
string equality with the ground truth), executable correctness (for tool
calls, field-level equivalence of the produced call; elsewhere,
answer-correct through a consumable interface), and trace correctness for
typed reasoning traces. A single taxonomy label per record makes failure
modes countable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .modes import FREEFORM_MODES, OBJECT_MODES, REGEX_MODE
from .taskgen import CALENDAR_SEMANTIC_FIELDS, TOOL_NAME, TaskInstance
from .validation import (
    ParseOutcome,
    canonical_serialize,
    extract_final_answer,
    extract_json,
    normalize_answer,
)

ERROR_CLASSES = (
    "correct_valid",
    "invalid_json",
    "parse_failure_freeform",
    "schema_validation_error",
    "trace_answer_contradiction",
    "wrong_answer_valid_schema",
)

# Transport failures sit outside the semantic taxonomy: such records are
# reported separately and excluded from accuracy denominators.
GENERATION_FAILED = "generation_failed"

CALENDAR_FAILURE_CLASSES = (
    "correct", "wrong_duration", "wrong_topic", "wrong_date",
    "wrong_time", "wrong_attendee", "multi_field",
)

_FIELD_TO_CLASS = {
    "date": "wrong_date",
    "start_time": "wrong_time",
    "duration_minutes": "wrong_duration",
    "attendee": "wrong_attendee",
    "topic": "wrong_topic",
}


@dataclass(frozen=True)
class CheckResult:
    schema_valid: bool
    answer_correct: bool
    exec_correct: bool
    trace_correct: bool | None  # None outside typed_trace_schema
    error_class: str
    calendar_failure_class: str | None = None
    calendar_wrong_fields: tuple[str, ...] = ()
    answer_payload: str | None = None  # semantic payload for overhead accounting


def _norm(value: Any) -> str:
    return str(value).strip().lower()


def expected_calendar_arguments(instance: TaskInstance) -> dict[str, Any]:
    target = instance.ground_truth.exec_target or {}
    return dict(target.get("arguments", {}))


def calendar_exec_ok(obj: Any, expected: dict[str, Any]) -> bool:
    """Executable equivalence for a calendar tool call.

    Tool name must match exactly; date/start_time/attendee/topic compare
    after trim+lowercase; duration compares as int(). Missing keys or
    uncoercible values are simply not equivalent. The title field is never
    scored.
    """
    try:
        if obj["tool"] != TOOL_NAME:
            return False
        args = obj["arguments"]
        return (
            _norm(args["date"]) == _norm(expected["date"])
            and _norm(args["start_time"]) == _norm(expected["start_time"])
            and int(args["duration_minutes"]) == int(expected["duration_minutes"])
            and _norm(args["attendee"]) == _norm(expected["attendee"])
            and _norm(args["topic"]) == _norm(expected["topic"])
        )
    except (KeyError, TypeError, ValueError):
        return False


def classify_calendar_failure(obj: Any, expected: dict[str, Any]) -> tuple[str, tuple[str, ...]]:
    """(primary class, wrong semantic fields) for a calendar object.

    Zero wrong fields -> "correct"; exactly one -> that field's class;
    two or more -> "multi_field". Fields that are missing or uncomparable
    count as wrong.
    """
    args = obj.get("arguments", {}) if isinstance(obj, dict) else {}
    if not isinstance(args, dict):
        args = {}
    wrong: list[str] = []
    for name in CALENDAR_SEMANTIC_FIELDS:
        try:
            if name == "duration_minutes":
                ok = int(args[name]) == int(expected[name])
            else:
                ok = _norm(args[name]) == _norm(expected[name])
        except (KeyError, TypeError, ValueError):
            ok = False
        if not ok:
            wrong.append(name)
    if isinstance(obj, dict) and obj.get("tool") != TOOL_NAME:
        # a mis-selected tool is at least as wrong as any single field
        wrong.append("tool")
    if not wrong:
        return "correct", ()
    if len(wrong) == 1 and wrong[0] in _FIELD_TO_CLASS:
        return _FIELD_TO_CLASS[wrong[0]], tuple(wrong)
    return "multi_field", tuple(wrong)


# ---------------------------------------------------------------------------
# Per-mode extraction
# ---------------------------------------------------------------------------

def extract_answer_text(instance: TaskInstance, mode: str, parse: ParseOutcome,
                        raw_text: str) -> str | None:
    """The answer string a record asserts, before normalization."""
    family = instance.family
    if mode in FREEFORM_MODES:
        return extract_final_answer(raw_text)
    if mode == REGEX_MODE:
        return parse.matched_text
    value = parse.value
    if not isinstance(value, dict):
        return None
    if mode == "typed_trace_schema":
        answer = value.get("answer")
        return None if answer is None else str(answer)
    if family == "tool_call_argument":
        obj = {k: v for k, v in value.items() if k != "rationale"}
        return canonical_serialize(obj)
    answer = value.get("answer")
    return None if answer is None else str(answer)


def _candidate_tool_object(instance: TaskInstance, mode: str, parse: ParseOutcome,
                           raw_text: str) -> dict | None:
    """Best available calendar object for executable checking."""
    if mode in OBJECT_MODES:
        value = parse.value
        if not isinstance(value, dict):
            return None
        if mode == "typed_trace_schema":
            answer = value.get("answer")
            if isinstance(answer, str):
                sub = extract_json(answer)
                if sub.ok and isinstance(sub.value, dict):
                    return sub.value
            return None
        if "rationale" in value:
            return {k: v for k, v in value.items() if k != "rationale"}
        return value
    if mode == REGEX_MODE:
        if parse.matched_text:
            sub = extract_json(parse.matched_text)
            if sub.ok and isinstance(sub.value, dict):
                return sub.value
        return None
    answer = extract_final_answer(raw_text)
    for source in (answer, raw_text):
        if source:
            sub = extract_json(source)
            if sub.ok and isinstance(sub.value, dict):
                return sub.value
    return None


def schema_validity(mode: str, parse: ParseOutcome, raw_text: str,
                    packaging_failed: bool = False) -> bool:
    """Mode-contract validity.

    Object modes: parses and satisfies the scoring schema. Regex mode: the
    final line full-matches. Freeform modes: an answer line is extractable
    at all.
    """
    if mode in FREEFORM_MODES:
        return extract_final_answer(raw_text) is not None
    if mode == REGEX_MODE:
        return parse.status == "ok"
    if packaging_failed:
        return False
    return parse.valid


def check_answer(instance: TaskInstance, mode: str, parse: ParseOutcome,
                 raw_text: str) -> bool:
    answer = extract_answer_text(instance, mode, parse, raw_text)
    if answer is None:
        return False
    return normalize_answer(answer, instance.family) == instance.ground_truth.final_answer


def check_executable(instance: TaskInstance, mode: str, parse: ParseOutcome,
                     raw_text: str, schema_valid: bool, answer_correct: bool) -> bool:
    """Executable correctness.

    Tool-call family: the calendar checker over the produced object (object
    modes additionally require schema validity, so exec_correct implies
    schema_valid there). Other families: the answer is correct AND arrived
    through the mode's consumable channel.
    """
    if instance.family == "tool_call_argument":
        obj = _candidate_tool_object(instance, mode, parse, raw_text)
        if obj is None:
            return False
        ok = calendar_exec_ok(obj, expected_calendar_arguments(instance))
        if mode in OBJECT_MODES:
            return ok and schema_valid
        return ok
    return schema_valid and answer_correct


def check_trace(instance: TaskInstance, steps: list[tuple[Any, Any]],
                strict: bool = False) -> bool:
    """Typed-trace correctness for (op, output) pairs.

    Step count and op sequence must match the gold trace and the final
    output must normalize to the final answer; strict additionally
    requires every intermediate output to match.
    """
    gold = instance.ground_truth.trace
    if len(steps) != len(gold):
        return False
    family = instance.family
    for (op, _output), gold_step in zip(steps, gold):
        if op != gold_step.op_name:
            return False
    last_output = steps[-1][1]
    if normalize_answer(str(last_output), family) != instance.ground_truth.final_answer:
        return False
    if strict:
        for (_op, output), gold_step in zip(steps, gold):
            if normalize_answer(str(output), family) != normalize_answer(gold_step.output, family):
                return False
    return True


def _trace_fields(instance: TaskInstance, mode: str, parse: ParseOutcome,
                  strict: bool) -> tuple[bool | None, bool]:
    """(trace_correct or None, trace_contradicts_answer)."""
    if mode != "typed_trace_schema" or not isinstance(parse.value, dict):
        return None, False
    steps_raw = parse.value.get("steps")
    if not isinstance(steps_raw, list):
        return False, False
    pairs: list[tuple[Any, Any]] = []
    for step in steps_raw:
        if not isinstance(step, dict):
            return False, False
        pairs.append((step.get("op"), step.get("output")))
    correct = check_trace(instance, pairs, strict=strict)
    contradicts = False
    answer = parse.value.get("answer")
    if pairs and answer is not None:
        family = instance.family
        contradicts = (normalize_answer(str(pairs[-1][1]), family)
                       != normalize_answer(str(answer), family))
    return correct, contradicts


def classify(mode: str, parse: ParseOutcome, schema_valid: bool, answer_correct: bool,
             exec_correct: bool, trace_correct: bool | None, trace_contradicts: bool,
             packaging_failed: bool = False) -> str:
    """Single taxonomy label, applied in precedence order."""
    if mode in OBJECT_MODES:
        if packaging_failed or not parse.ok or not isinstance(parse.value, dict):
            return "invalid_json"
    if mode in FREEFORM_MODES and not schema_valid:
        return "parse_failure_freeform"
    if mode == REGEX_MODE and parse.status == "regex_mismatch":
        return "schema_validation_error"
    if mode in OBJECT_MODES and parse.violations:
        return "schema_validation_error"
    if trace_contradicts:
        return "trace_answer_contradiction"
    if (not answer_correct or not exec_correct
            or (trace_correct is not None and not trace_correct)):
        return "wrong_answer_valid_schema"
    return "correct_valid"


def answer_payload(instance: TaskInstance, mode: str, parse: ParseOutcome,
                   raw_text: str) -> str | None:
    """Semantic payload for structural-overhead accounting: the extracted
    answer string, or for calendar objects the concatenated semantic
    argument values."""
    if instance.family == "tool_call_argument":
        obj = _candidate_tool_object(instance, mode, parse, raw_text)
        if isinstance(obj, dict) and isinstance(obj.get("arguments"), dict):
            args = obj["arguments"]
            parts = [str(args[f]) for f in CALENDAR_SEMANTIC_FIELDS if f in args]
            if parts:
                return "".join(parts)
        return extract_answer_text(instance, mode, parse, raw_text)
    return extract_answer_text(instance, mode, parse, raw_text)


def score_completion(instance: TaskInstance, mode: str, parse: ParseOutcome,
                     raw_text: str, packaging_failed: bool = False,
                     strict_trace: bool = False) -> CheckResult:
    """All verdicts for one completion under one mode."""
    valid = schema_validity(mode, parse, raw_text, packaging_failed)
    answer_ok = check_answer(instance, mode, parse, raw_text)
    exec_ok = check_executable(instance, mode, parse, raw_text, valid, answer_ok)
    trace_ok, contradicts = _trace_fields(instance, mode, parse, strict_trace)
    label = classify(mode, parse, valid, answer_ok, exec_ok, trace_ok,
                     contradicts, packaging_failed)

    failure_class: str | None = None
    wrong_fields: tuple[str, ...] = ()
    if instance.family == "tool_call_argument" and mode in OBJECT_MODES and valid:
        obj = _candidate_tool_object(instance, mode, parse, raw_text)
        if isinstance(obj, dict):
            failure_class, wrong_fields = classify_calendar_failure(
                obj, expected_calendar_arguments(instance))

    return CheckResult(
        schema_valid=valid,
        answer_correct=answer_ok,
        exec_correct=exec_ok,
        trace_correct=trace_ok,
        error_class=label,
        calendar_failure_class=failure_class,
        calendar_wrong_fields=wrong_fields,
        answer_payload=answer_payload(instance, mode, parse, raw_text),
    )
