"""Run records: the append-only JSONL ledger of every generation.

One record per (backend, model, mode, stage, instance). Records carry the
full scoring verdicts so downstream aggregation never needs to re-run a
checker, plus enough provenance (constraint document, extraction rule,
config digest) to audit any number in a report. Canonical record lines
mask wall-clock fields (latency, timestamps, packaging time) so two runs
of the same config can be diffed for semantic identity.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Iterable, Iterator

# Wall-clock fields masked by the canonical diff.
MASKED_FIELDS = ("latency_ms", "packaging_ms", "started_at", "finished_at")


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    model_id: str
    backend_label: str
    family: str
    mode: str
    stage: str  # single | stage1 | stage2
    prompt: str
    constraint_kind: str
    constraint_pattern: str | None
    constraint_schema: dict | None
    constraint_digest: str | None
    constraint_enforced: bool
    raw_text: str
    parse_status: str
    violations: tuple[dict, ...] = ()
    schema_valid: bool = False
    answer_correct: bool = False
    exec_correct: bool = False
    trace_correct: bool | None = None
    error_class: str = "correct_valid"
    calendar_failure_class: str | None = None
    calendar_wrong_fields: tuple[str, ...] = ()
    packaged_text: str | None = None
    packaging_failed: bool = False
    derived_from: str | None = None
    latency_ms: float = 0.0
    latency_annotation: str | None = None  # "+ pkg." when packaging time is excluded
    packaging_ms: float | None = None
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    structural_overhead: float | None = None
    started_at: str | None = None
    finished_at: str | None = None
    extraction_rule: str = "lenient/v1"
    run_id: str | None = None
    config_digest: str | None = None
    failure_reason: str | None = None

    def key(self) -> tuple[str, str, str, str, str]:
        return (self.backend_label, self.model_id, self.mode, self.stage, self.instance_id)

    def to_dict(self) -> dict[str, Any]:
        doc = asdict(self)
        doc["violations"] = [dict(v) for v in self.violations]
        doc["calendar_wrong_fields"] = list(self.calendar_wrong_fields)
        return doc


_FIELD_NAMES = {f.name for f in fields(RunRecord)}


def record_from_dict(doc: dict[str, Any]) -> RunRecord:
    known = {k: v for k, v in doc.items() if k in _FIELD_NAMES}
    known["violations"] = tuple(known.get("violations") or ())
    known["calendar_wrong_fields"] = tuple(known.get("calendar_wrong_fields") or ())
    return RunRecord(**known)


def write_records(path: str | Path, records: Iterable[RunRecord],
                  append: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "a" if append else "w"
    with path.open(mode, encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")


def append_record(fh, record: RunRecord) -> None:
    fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    fh.flush()


def iter_records(path: str | Path) -> Iterator[RunRecord]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield record_from_dict(json.loads(line))


def read_records(path: str | Path) -> list[RunRecord]:
    return list(iter_records(path))


def existing_keys(path: str | Path) -> set[tuple[str, str, str, str, str]]:
    path = Path(path)
    if not path.exists():
        return set()
    return {record.key() for record in iter_records(path)}


def canonical_record_lines(path: str | Path) -> list[str]:
    """Records re-serialized for semantic comparison: wall-clock fields
    masked, rows sorted by key, keys sorted within each row."""
    lines = []
    for record in sorted(iter_records(path), key=lambda r: r.key()):
        doc = record.to_dict()
        for name in MASKED_FIELDS:
            doc[name] = None
        lines.append(json.dumps(doc, sort_keys=True, ensure_ascii=False))
    return lines


def canonical_diff(path_a: str | Path, path_b: str | Path) -> list[str]:
    """Human-readable differences between two record files after masking;
    empty list means semantically identical."""
    a = canonical_record_lines(path_a)
    b = canonical_record_lines(path_b)
    if a == b:
        return []
    diffs = []
    if len(a) != len(b):
        diffs.append(f"record count differs: {len(a)} vs {len(b)}")
    for i, (left, right) in enumerate(zip(a, b)):
        if left != right:
            diffs.append(f"record {i} differs")
            if len(diffs) > 10:
                diffs.append("...")
                break
    return diffs
