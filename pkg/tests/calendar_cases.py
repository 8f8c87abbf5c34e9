"""Hand-built calendar tool-call cases with expected verdicts.

Each case: (name, candidate object, exec_ok expected, primary failure
class expected). Expectations were written by hand against the checker
contract, not generated from the implementation.
"""

from __future__ import annotations

from typing import Any

TOOL = "create_calendar_event"

EXPECTED_ARGS: dict[str, Any] = {
    "attendee": "leo",
    "date": "2025-03-10",
    "duration_minutes": 30,
    "start_time": "14:30",
    "title": "meeting about budget review",
    "topic": "budget review",
}


def _obj(tool: str = TOOL, **overrides: Any) -> dict[str, Any]:
    args = dict(EXPECTED_ARGS)
    for key, value in overrides.items():
        if value is _DROP:
            args.pop(key, None)
        else:
            args[key] = value
    return {"tool": tool, "arguments": args}


_DROP = object()

# (name, candidate, exec_ok, primary_class)
CASES: list[tuple[str, Any, bool, str]] = [
    ("exact", _obj(), True, "correct"),
    ("attendee_case", _obj(attendee="Leo"), True, "correct"),
    ("attendee_padded", _obj(attendee=" leo "), True, "correct"),
    ("attendee_upper", _obj(attendee="LEO"), True, "correct"),
    ("topic_case", _obj(topic="Budget Review"), True, "correct"),
    ("date_padded", _obj(date=" 2025-03-10 "), True, "correct"),
    ("time_padded", _obj(start_time="14:30 "), True, "correct"),
    ("duration_string", _obj(duration_minutes="30"), True, "correct"),
    ("duration_float", _obj(duration_minutes=30.0), True, "correct"),
    ("title_differs", _obj(title="sync"), True, "correct"),
    ("title_missing", _obj(title=_DROP), True, "correct"),
    ("extra_argument", _obj(location="hq"), True, "correct"),
    ("case_and_space_combo", _obj(attendee="LEO", topic=" BUDGET REVIEW "),
     True, "correct"),
    ("duration_180", _obj(duration_minutes=180), False, "wrong_duration"),
    ("duration_off_by_grid", _obj(duration_minutes=45), False, "wrong_duration"),
    ("duration_negative", _obj(duration_minutes=-30), False, "wrong_duration"),
    ("duration_words", _obj(duration_minutes="thirty"), False, "wrong_duration"),
    ("duration_none", _obj(duration_minutes=None), False, "wrong_duration"),
    ("duration_missing", _obj(duration_minutes=_DROP), False, "wrong_duration"),
    ("topic_wrong", _obj(topic="offsite planning"), False, "wrong_topic"),
    ("date_next_day", _obj(date="2025-03-11"), False, "wrong_date"),
    ("date_unpadded", _obj(date="2025-3-10"), False, "wrong_date"),
    ("time_wrong", _obj(start_time="15:00"), False, "wrong_time"),
    ("time_ampm_format", _obj(start_time="2:30 PM"), False, "wrong_time"),
    ("attendee_wrong", _obj(attendee="ann"), False, "wrong_attendee"),
    ("attendee_accented", _obj(attendee="léo"), False, "wrong_attendee"),
    ("two_fields_wrong", _obj(duration_minutes=180, topic="offsite planning"),
     False, "multi_field"),
    ("all_fields_wrong",
     _obj(attendee="ann", date="2025-03-11", duration_minutes=15,
          start_time="09:00", topic="offsite planning"),
     False, "multi_field"),
    ("wrong_tool", _obj(tool="delete_calendar_event"), False, "multi_field"),
    ("arguments_missing", {"tool": TOOL}, False, "multi_field"),
]
