"""Run orchestration: config, generation loop, scoring, derivation.

A run is declarative: one JSON config names the suite, the modes, the
backends, and the bootstrap settings, and its canonical digest is stamped
into the manifest and every record. Records append to JSONL as they are
produced, so an interrupted run resumes by skipping keys already on disk.
"""

from __future__ import annotations

import datetime as dt
import time
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import __version__
from .backend import (
    BackendConfig,
    FaultProfile,
    GenerationResult,
    SamplingConfig,
    check_health,
    generate_all,
)
from .checkers import CheckResult, score_completion
from .errors import ConfigError
from .metrics import (
    ACC_METRICS,
    BootstrapConfig,
    ModeAggregate,
    PairedComparison,
    aggregate,
    paired_comparison,
    structural_overhead,
)
from .modes import (
    DELAYED_VARIANTS,
    MODE_NAMES,
    TEMPLATE_VERSION,
    PromptBundle,
    build_delayed_stage2,
    build_prompt,
    get_mode,
    parse_for_mode,
    scoring_constraint,
)
from .records import (
    RunRecord,
    append_record,
    existing_keys,
    read_records,
)
from .taskgen import FAMILIES, TaskInstance, generate_suite, write_suite
from .validation import ParseOutcome, canonical_digest, canonical_serialize, extract_json

DELAYED_MODE = "delayed_constraint"
DELAYED_SOURCE_MODES = frozenset({"prompt_json", "freeform", "freeform_direct",
                                  "freeform_brief_reasoning"})


@dataclass(frozen=True)
class SuiteConfig:
    families: tuple[str, ...]
    count: int
    seed: int


@dataclass(frozen=True)
class RunConfig:
    run_id: str
    suite: SuiteConfig
    modes: tuple[str, ...]
    backends: tuple[BackendConfig, ...]
    bootstrap: BootstrapConfig = dc_field(default_factory=BootstrapConfig)
    delayed_variant: str = "deterministic"
    strict_extraction: bool = False
    strict_trace: bool = False
    baseline_mode: str = "prompt_json"

    def digest(self) -> str:
        return canonical_digest(self.to_dict())

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "suite": {"families": list(self.suite.families), "count": self.suite.count,
                      "seed": self.suite.seed},
            "modes": list(self.modes),
            "backends": [_backend_to_dict(b) for b in self.backends],
            "bootstrap": {"resamples": self.bootstrap.resamples,
                          "level": self.bootstrap.level, "seed": self.bootstrap.seed},
            "delayed_variant": self.delayed_variant,
            "strict_extraction": self.strict_extraction,
            "strict_trace": self.strict_trace,
            "baseline_mode": self.baseline_mode,
        }


def _backend_to_dict(config: BackendConfig) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "kind": config.kind,
        "label": config.label,
        "model_id": config.model_id,
        "sampling": {
            "temperature": config.sampling.temperature,
            "max_tokens": config.sampling.max_tokens,
            "request_seed": config.sampling.request_seed,
        },
        "timeout_ms": config.timeout_ms,
        "max_in_flight": config.max_in_flight,
        "max_retries": config.max_retries,
    }
    if config.base_url:
        doc["base_url"] = config.base_url
        doc["constraint_transport"] = dict(config.constraint_transport)
    if config.fault is not None:
        doc["fault"] = {
            "p_invalid_json": config.fault.p_invalid_json,
            "p_wrong_field": config.fault.p_wrong_field,
            "wrong_field_targets": list(config.fault.wrong_field_targets),
            "seed": config.fault.seed,
        }
    return doc


def _backend_from_dict(doc: Mapping[str, Any]) -> BackendConfig:
    sampling_doc = doc.get("sampling") or {}
    sampling = SamplingConfig(
        temperature=float(sampling_doc.get("temperature", 0.0)),
        max_tokens=sampling_doc.get("max_tokens"),
        request_seed=sampling_doc.get("request_seed"),
    )
    fault = None
    if doc.get("fault") is not None:
        fault_doc = doc["fault"]
        fault = FaultProfile(
            p_invalid_json=float(fault_doc.get("p_invalid_json", 0.0)),
            p_wrong_field=float(fault_doc.get("p_wrong_field", 0.0)),
            wrong_field_targets=tuple(fault_doc.get("wrong_field_targets",
                                                    ("duration_minutes",))),
            seed=int(fault_doc.get("seed", 0)),
        )
    kwargs: dict[str, Any] = {
        "kind": doc.get("kind", "oracle"),
        "label": doc.get("label") or doc.get("kind", "backend"),
        "model_id": doc.get("model_id", "scripted"),
        "base_url": doc.get("base_url"),
        "sampling": sampling,
        "timeout_ms": int(doc.get("timeout_ms", 60000)),
        "max_in_flight": int(doc.get("max_in_flight", 4)),
        "max_retries": int(doc.get("max_retries", 2)),
        "fault": fault,
    }
    if doc.get("constraint_transport"):
        kwargs["constraint_transport"] = dict(doc["constraint_transport"])
    return BackendConfig(**kwargs)


def config_from_dict(doc: Mapping[str, Any]) -> RunConfig:
    suite_doc = doc.get("suite") or {}
    families = tuple(suite_doc.get("families") or FAMILIES)
    for family in families:
        if family not in FAMILIES:
            raise ConfigError(f"unknown task family in config: {family!r}")
    modes = tuple(doc.get("modes") or MODE_NAMES)
    for mode in modes:
        get_mode(mode)  # raises on unknown
    backends_doc = doc.get("backends")
    if not backends_doc:
        raise ConfigError("config needs at least one backend")
    bootstrap_doc = doc.get("bootstrap") or {}
    variant = doc.get("delayed_variant", "deterministic")
    if variant not in DELAYED_VARIANTS:
        raise ConfigError(f"unknown delayed variant: {variant!r}")
    return RunConfig(
        run_id=str(doc.get("run_id", "run")),
        suite=SuiteConfig(families=families,
                          count=int(suite_doc.get("count", 100)),
                          seed=int(suite_doc.get("seed", 0))),
        modes=modes,
        backends=tuple(_backend_from_dict(b) for b in backends_doc),
        bootstrap=BootstrapConfig(
            resamples=int(bootstrap_doc.get("resamples", 2000)),
            level=float(bootstrap_doc.get("level", 0.95)),
            seed=int(bootstrap_doc.get("seed", 0)),
        ),
        delayed_variant=variant,
        strict_extraction=bool(doc.get("strict_extraction", False)),
        strict_trace=bool(doc.get("strict_trace", False)),
        baseline_mode=str(doc.get("baseline_mode", "prompt_json")),
    )


# ---------------------------------------------------------------------------
# Record construction
# ---------------------------------------------------------------------------

def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="milliseconds")


def _base_record_fields(config: RunConfig, backend: BackendConfig,
                        bundle: PromptBundle) -> dict[str, Any]:
    scoring = scoring_constraint(bundle.mode, bundle.family)
    return {
        "instance_id": bundle.instance_id,
        "model_id": backend.model_id,
        "backend_label": backend.label,
        "family": bundle.family,
        "mode": bundle.mode,
        "stage": bundle.stage,
        "prompt": bundle.user_text,
        "constraint_kind": scoring.kind,
        "constraint_pattern": scoring.pattern,
        "constraint_schema": scoring.schema,
        "constraint_digest": scoring.digest(),
        "constraint_enforced": bundle.constraint.kind != "none",
        "extraction_rule": ("strict/v1" if config.strict_extraction else "lenient/v1"),
        "run_id": config.run_id,
        "config_digest": config.digest(),
    }


def _failure_record(config: RunConfig, backend: BackendConfig, bundle: PromptBundle,
                    result: GenerationResult, started_at: str) -> RunRecord:
    return RunRecord(
        **_base_record_fields(config, backend, bundle),
        raw_text="",
        parse_status="no_json_found",
        error_class="generation_failed",
        failure_reason=result.failure_reason,
        latency_ms=result.latency_ms,
        started_at=started_at,
        finished_at=_now(),
    )


def _checked_record(config: RunConfig, backend: BackendConfig, bundle: PromptBundle,
                    result: GenerationResult, instance: TaskInstance,
                    parse: ParseOutcome, checks: CheckResult,
                    packaged_text: str | None = None, packaging_failed: bool = False,
                    packaging_ms: float | None = None,
                    latency_annotation: str | None = None,
                    derived_from: str | None = None,
                    started_at: str | None = None) -> RunRecord:
    overhead = structural_overhead(result.raw_text, checks.answer_payload)
    return RunRecord(
        **_base_record_fields(config, backend, bundle),
        raw_text=result.raw_text,
        parse_status=parse.status,
        violations=tuple({"path": v.path, "keyword": v.keyword, "message": v.message}
                        for v in parse.violations),
        schema_valid=checks.schema_valid,
        answer_correct=checks.answer_correct,
        exec_correct=checks.exec_correct,
        trace_correct=checks.trace_correct,
        error_class=checks.error_class,
        calendar_failure_class=checks.calendar_failure_class,
        calendar_wrong_fields=checks.calendar_wrong_fields,
        packaged_text=packaged_text,
        packaging_failed=packaging_failed,
        packaging_ms=packaging_ms,
        latency_ms=result.latency_ms,
        latency_annotation=latency_annotation,
        prompt_tokens=result.prompt_tokens,
        completion_tokens=result.completion_tokens,
        structural_overhead=overhead,
        started_at=started_at,
        finished_at=_now(),
        derived_from=derived_from,
    )


def _score_simple(config: RunConfig, backend: BackendConfig, bundle: PromptBundle,
                  result: GenerationResult, instance: TaskInstance,
                  started_at: str, mode_for_scoring: str | None = None) -> RunRecord:
    mode = mode_for_scoring or bundle.mode
    parse = parse_for_mode(result.raw_text, mode, instance.family,
                           strict=config.strict_extraction)
    checks = score_completion(instance, mode, parse, result.raw_text,
                              strict_trace=config.strict_trace)
    return _checked_record(config, backend, bundle, result, instance, parse, checks,
                           started_at=started_at)


def _score_packaged(config: RunConfig, backend: BackendConfig, bundle: PromptBundle,
                    result: GenerationResult, instance: TaskInstance,
                    started_at: str, derived_from: str | None = None,
                    latency_annotation: str | None = "+ pkg.") -> RunRecord:
    """Deterministic delayed packaging: extract, validate, re-serialize,
    then score the packaged object under the delayed-mode contract."""
    pkg_started = time.perf_counter()
    outcome = build_delayed_stage2(result.raw_text, instance, "deterministic")
    packaging_ms = (time.perf_counter() - pkg_started) * 1000.0
    if outcome.failed or outcome.packaged_text is None:
        parse = extract_json(result.raw_text, strict=config.strict_extraction)
        checks = score_completion(instance, DELAYED_MODE, parse, result.raw_text,
                                  packaging_failed=True, strict_trace=config.strict_trace)
        return _checked_record(config, backend, bundle, result, instance, parse, checks,
                               packaging_failed=True, packaging_ms=packaging_ms,
                               latency_annotation=latency_annotation,
                               derived_from=derived_from, started_at=started_at)
    parse = parse_for_mode(outcome.packaged_text, DELAYED_MODE, instance.family,
                           strict=config.strict_extraction)
    checks = score_completion(instance, DELAYED_MODE, parse, outcome.packaged_text,
                              strict_trace=config.strict_trace)
    # raw_text stays the untouched stage-1 completion; overhead measures the
    # semantic payload against the characters the model actually generated.
    record = _checked_record(config, backend, bundle, result, instance, parse, checks,
                             packaged_text=outcome.packaged_text,
                             packaging_ms=packaging_ms,
                             latency_annotation=latency_annotation,
                             derived_from=derived_from, started_at=started_at)
    return record


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------

def _suites(config: RunConfig) -> dict[str, list[TaskInstance]]:
    return {family: generate_suite(family, config.suite.count, config.suite.seed)
            for family in config.suite.families}


def run(config: RunConfig, out_dir: str | Path, resume: bool = False) -> Path:
    """Execute a run config; returns the records path.

    Reruns with --resume skip every (backend, model, mode, stage, instance)
    already on disk, so a killed run completes without duplicates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / "records.jsonl"
    if records_path.exists() and records_path.stat().st_size > 0 and not resume:
        raise ConfigError(
            f"{records_path} already has records; pass resume=True (--resume) "
            "or use a fresh output directory")
    done = existing_keys(records_path) if resume else set()

    suites = _suites(config)
    instances_by_id = {i.id: i for suite in suites.values() for i in suite}
    write_suite((i for suite in suites.values() for i in suite), out / "tasks.jsonl")
    _write_manifest(config, out)

    for backend in config.backends:
        if backend.kind == "endpoint":
            check_health(backend)

    with records_path.open("a", encoding="utf-8") as fh:
        for backend in config.backends:
            for mode in config.modes:
                _run_mode(config, backend, mode, suites, instances_by_id, done, fh)
    print(f"[INFO] run complete: {records_path}")
    return records_path


def _run_mode(config: RunConfig, backend: BackendConfig, mode: str,
              suites: Mapping[str, list[TaskInstance]],
              instances_by_id: Mapping[str, TaskInstance],
              done: set, fh) -> None:
    bundles = []
    for family in config.suite.families:
        for instance in suites[family]:
            bundle = build_prompt(instance, mode)
            if (backend.label, backend.model_id, mode, bundle.stage, instance.id) in done:
                continue
            bundles.append(bundle)
    if not bundles:
        return
    started_at = _now()
    results = generate_all(backend, bundles, instances_by_id)
    results_map = {(r.instance_id, r.stage): r for r in results}

    stage2_bundles: list[PromptBundle] = []
    for bundle in sorted(bundles, key=lambda b: b.instance_id):
        result = results_map[(bundle.instance_id, bundle.stage)]
        instance = instances_by_id[bundle.instance_id]
        if result.failed:
            append_record(fh, _failure_record(config, backend, bundle, result, started_at))
            continue
        if mode == DELAYED_MODE:
            if config.delayed_variant == "deterministic":
                record = _score_packaged(config, backend, bundle, result, instance,
                                         started_at)
                append_record(fh, record)
            else:
                # stage-1 record is provenance, scored under the freeform contract
                record = _score_simple(config, backend, bundle, result, instance,
                                       started_at, mode_for_scoring="freeform")
                append_record(fh, record)
                outcome = build_delayed_stage2(result.raw_text, instance, "model")
                if outcome.stage2_bundle is not None:
                    key = (backend.label, backend.model_id, mode, "stage2", instance.id)
                    if key not in done:
                        stage2_bundles.append(outcome.stage2_bundle)
            continue
        append_record(fh, _score_simple(config, backend, bundle, result, instance,
                                        started_at))

    if stage2_bundles:
        started_at = _now()
        results2 = generate_all(backend, stage2_bundles, instances_by_id)
        results2_map = {(r.instance_id, r.stage): r for r in results2}
        for bundle in sorted(stage2_bundles, key=lambda b: b.instance_id):
            result = results2_map[(bundle.instance_id, bundle.stage)]
            instance = instances_by_id[bundle.instance_id]
            if result.failed:
                append_record(fh, _failure_record(config, backend, bundle, result,
                                                  started_at))
                continue
            append_record(fh, _score_simple(config, backend, bundle, result, instance,
                                            started_at))


def _write_manifest(config: RunConfig, out: Path) -> None:
    manifest = {
        "run_id": config.run_id,
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "package_version": __version__,
        "template_version": TEMPLATE_VERSION,
        "created_at": _now(),
    }
    (out / "manifest.json").write_text(
        canonical_serialize(manifest) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Delayed-constraint derivation from existing records
# ---------------------------------------------------------------------------

def derive_delayed(source_records: Sequence[RunRecord],
                   instances_by_id: Mapping[str, TaskInstance],
                   config: RunConfig | None = None) -> list[RunRecord]:
    """Re-package already-generated unconstrained records under the delayed
    contract, without further generation.

    Source records must come from prompt_json or a freeform mode. Latency
    is copied from the source and annotated "+ pkg."; packaging time is
    tracked separately and never added to generation latency. Instance ids
    and ordering are preserved.
    """
    derived: list[RunRecord] = []
    for source in source_records:
        if source.mode not in DELAYED_SOURCE_MODES:
            raise ConfigError(
                f"cannot derive delayed records from mode {source.mode!r}; "
                f"supported sources: {', '.join(sorted(DELAYED_SOURCE_MODES))}")
        instance = instances_by_id.get(source.instance_id)
        if instance is None:
            raise ConfigError(f"no task instance for record {source.instance_id!r}")
        if source.error_class == "generation_failed":
            derived.append(replace(source, mode=DELAYED_MODE,
                                   derived_from=source.mode,
                                   latency_annotation="+ pkg."))
            continue
        run_config = config or _single_record_config(source)
        backend = _record_backend(source)
        bundle = PromptBundle(
            instance_id=source.instance_id,
            family=source.family,
            mode=DELAYED_MODE,
            stage="stage1",
            user_text=source.prompt,
            constraint=scoring_constraint(DELAYED_MODE, source.family),
        )
        result = GenerationResult(
            instance_id=source.instance_id,
            stage="stage1",
            raw_text=source.raw_text,
            latency_ms=source.latency_ms,
            backend_label=source.backend_label,
            prompt_tokens=source.prompt_tokens,
            completion_tokens=source.completion_tokens,
        )
        scored = _score_packaged(run_config, backend, bundle, result, instance,
                                 started_at=source.started_at or _now(),
                                 derived_from=source.mode)
        if config is None:
            # packaging adds no config of its own; keep the source run's digest
            # so derived records stay comparable with their sources
            scored = replace(scored, config_digest=source.config_digest)
        derived.append(scored)
    return derived


def _single_record_config(record: RunRecord) -> RunConfig:
    return RunConfig(
        run_id=record.run_id or "derived",
        suite=SuiteConfig(families=(record.family,), count=1, seed=0),
        modes=(DELAYED_MODE,),
        backends=(_record_backend(record),),
        strict_extraction=record.extraction_rule.startswith("strict"),
    )


def _record_backend(record: RunRecord) -> BackendConfig:
    return BackendConfig(kind="oracle", label=record.backend_label,
                         model_id=record.model_id)


# ---------------------------------------------------------------------------
# Scoring: aggregates + comparisons + calendar taxonomy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalendarRow:
    backend_label: str
    model_id: str
    mode: str
    n: int
    class_counts: tuple[tuple[str, int], ...]
    field_counts: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class ScoreResult:
    aggregates: list[ModeAggregate]
    comparisons: list[PairedComparison]
    calendar: list[CalendarRow]


def _final_records(records: Iterable[RunRecord]) -> list[RunRecord]:
    """Drop provenance stage-1 rows of the delayed mode when a stage-2 row
    exists for the same cell."""
    records = list(records)
    stage2 = {(r.backend_label, r.model_id, r.mode, r.instance_id, r.derived_from)
              for r in records if r.stage == "stage2"}
    out = []
    for record in records:
        if (record.mode == DELAYED_MODE and record.stage == "stage1"
                and (record.backend_label, record.model_id, record.mode,
                     record.instance_id, record.derived_from) in stage2):
            continue
        out.append(record)
    return out


def score(records: Sequence[RunRecord], bootstrap: BootstrapConfig | None = None,
          baseline_mode: str = "prompt_json", epsilon: float = 1e-6) -> ScoreResult:
    """Aggregate records and compute paired comparisons against the
    baseline mode.

    Modes with no records are skipped with a warning; a missing baseline
    degrades to aggregates-only; mixed config digests get a warning (the
    records may not be comparable)."""
    records = _final_records(records)
    if not records:
        raise ValueError("no records to score")
    digests = {r.config_digest for r in records if r.config_digest}
    if len(digests) > 1:
        print(f"[WARN] records mix {len(digests)} config digests; "
              "cross-run comparability is not guaranteed")

    bootstrap = bootstrap or BootstrapConfig()
    cells: dict[tuple[str, str, str], list[RunRecord]] = {}
    for record in records:
        cells.setdefault((record.backend_label, record.model_id, record.mode),
                         []).append(record)

    mode_order = {name: i for i, name in enumerate(MODE_NAMES)}
    aggregates: list[ModeAggregate] = []
    by_group: dict[tuple[str, str], dict[str, dict[str, list[RunRecord]]]] = {}
    for (backend_label, model_id, mode), cell_records in sorted(
            cells.items(), key=lambda kv: (kv[0][0], kv[0][1], mode_order.get(kv[0][2], 99))):
        scored = [r for r in cell_records if r.error_class != "generation_failed"]
        if not scored:
            print(f"[WARN] mode {mode!r} for {backend_label}/{model_id} has no scored "
                  "records; row omitted")
            continue
        families = sorted({r.family for r in cell_records})
        tasks: dict[str, list[RunRecord]] = {}
        for family in families:
            tasks[family] = [r for r in cell_records if r.family == family]
        if len(families) > 1:
            tasks["all"] = cell_records
        for task, task_records in tasks.items():
            aggregates.append(aggregate(task_records, task=task))
            by_group.setdefault((backend_label, model_id), {}).setdefault(
                task, {})[mode] = task_records

    task_rank = {family: i for i, family in enumerate(FAMILIES)}
    aggregates.sort(key=lambda a: (a.backend_label, a.model_id,
                                   task_rank.get(a.task, 99), a.task,
                                   mode_order.get(a.mode, 99)))

    comparisons: list[PairedComparison] = []
    for (backend_label, model_id), task_map in sorted(by_group.items()):
        for task in sorted(task_map, key=lambda t: (task_rank.get(t, 99), t)):
            mode_map = task_map[task]
            if baseline_mode not in mode_map:
                print(f"[WARN] baseline mode {baseline_mode!r} absent for "
                      f"{backend_label}/{model_id}/{task}; comparisons skipped")
                continue
            base_records = mode_map[baseline_mode]
            for mode in sorted(mode_map, key=lambda m: mode_order.get(m, 99)):
                if mode == baseline_mode:
                    continue
                try:
                    mode_comparisons = [paired_comparison(
                        base_records, mode_map[mode], acc_metric=metric,
                        cfg=bootstrap, epsilon=epsilon) for metric in ACC_METRICS]
                except ValueError as exc:  # duplicates, pairing mismatch, all-failed
                    print(f"[WARN] comparisons skipped for {backend_label}/"
                          f"{model_id}/{task}/{mode}: {exc}")
                    continue
                comparisons.extend(mode_comparisons)

    return ScoreResult(aggregates=aggregates, comparisons=comparisons,
                       calendar=_calendar_rows(records))


def _calendar_rows(records: Sequence[RunRecord]) -> list[CalendarRow]:
    from .checkers import CALENDAR_FAILURE_CLASSES
    from .taskgen import CALENDAR_SEMANTIC_FIELDS

    groups: dict[tuple[str, str, str], list[RunRecord]] = {}
    for record in records:
        if record.family != "tool_call_argument":
            continue
        if record.calendar_failure_class is None:
            continue
        groups.setdefault((record.backend_label, record.model_id, record.mode),
                          []).append(record)
    mode_order = {name: i for i, name in enumerate(MODE_NAMES)}
    rows = []
    for (backend_label, model_id, mode) in sorted(
            groups, key=lambda k: (k[0], k[1], mode_order.get(k[2], 99))):
        cell = groups[(backend_label, model_id, mode)]
        class_counts = tuple(
            (name, sum(1 for r in cell if r.calendar_failure_class == name))
            for name in CALENDAR_FAILURE_CLASSES)
        field_counts = tuple(
            (name, sum(1 for r in cell if name in r.calendar_wrong_fields))
            for name in CALENDAR_SEMANTIC_FIELDS)
        rows.append(CalendarRow(backend_label=backend_label, model_id=model_id,
                                mode=mode, n=len(cell), class_counts=class_counts,
                                field_counts=field_counts))
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt_rate(rate: Fraction | None) -> str:
    from .metrics import pts

    return "" if rate is None else f"{pts(rate):.1f}"


def _fmt_opt(value: float | None, fmt: str = ".1f") -> str:
    return "" if value is None else format(value, fmt)


def write_aggregates_csv(path: str | Path, aggregates: Sequence[ModeAggregate]) -> None:
    import csv

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "backend", "model", "task", "mode", "n", "n_failed",
            "schema_validity_pct", "answer_accuracy_pct", "exec_accuracy_pct",
            "trace_accuracy_pct", "wrong_valid_pct", "mean_latency_ms",
            "mean_completion_tokens", "mean_structural_overhead",
        ])
        for agg in aggregates:
            writer.writerow([
                agg.backend_label, agg.model_id, agg.task, agg.mode, agg.n, agg.n_failed,
                _fmt_rate(agg.schema_validity), _fmt_rate(agg.answer_accuracy),
                _fmt_rate(agg.exec_accuracy), _fmt_rate(agg.trace_accuracy),
                _fmt_rate(agg.wrong_valid_rate), f"{agg.mean_latency_ms:.1f}",
                _fmt_opt(agg.mean_completion_tokens),
                _fmt_opt(agg.mean_structural_overhead, ".3f"),
            ])


def write_comparisons_csv(path: str | Path,
                          comparisons: Sequence[PairedComparison]) -> None:
    import csv

    from .metrics import pts

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "backend", "model", "task", "baseline_mode", "mode", "acc_metric", "n",
            "acc_baseline_pct", "acc_constrained_pct", "signed_delta_pts", "tax_pts",
            "tax_normalized", "epsilon", "delta_ci_low_pts", "delta_ci_high_pts",
            "validity_delta_pts", "validity_ci_low_pts", "validity_ci_high_pts",
            "wrong_valid_delta_pts", "wrong_valid_ci_low_pts", "wrong_valid_ci_high_pts",
            "bootstrap_resamples", "bootstrap_level",
        ])
        for cmp in comparisons:
            writer.writerow([
                cmp.backend_label, cmp.model_id, cmp.task, cmp.baseline_mode, cmp.mode,
                cmp.acc_metric, cmp.n,
                f"{pts(cmp.acc_baseline):.1f}", f"{pts(cmp.acc_constrained):.1f}",
                f"{pts(cmp.signed_delta):+.1f}", f"{pts(cmp.tax):.1f}",
                f"{cmp.tax_norm:.4f}", f"{cmp.epsilon:g}",
                f"{pts(cmp.acc_ci.low):+.1f}", f"{pts(cmp.acc_ci.high):+.1f}",
                f"{pts(cmp.validity_delta):+.1f}",
                f"{pts(cmp.validity_ci.low):+.1f}", f"{pts(cmp.validity_ci.high):+.1f}",
                f"{pts(cmp.wrong_valid_delta):+.1f}",
                f"{pts(cmp.wrong_valid_ci.low):+.1f}", f"{pts(cmp.wrong_valid_ci.high):+.1f}",
                cmp.acc_ci.resamples, f"{cmp.acc_ci.level:g}",
            ])


def write_calendar_csv(path: str | Path, rows: Sequence[CalendarRow]) -> None:
    import csv

    from .checkers import CALENDAR_FAILURE_CLASSES
    from .taskgen import CALENDAR_SEMANTIC_FIELDS

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["backend", "model", "mode", "n",
                         *CALENDAR_FAILURE_CLASSES,
                         *[f"wrong_field_{f}" for f in CALENDAR_SEMANTIC_FIELDS]])
        for row in rows:
            class_map = dict(row.class_counts)
            field_map = dict(row.field_counts)
            writer.writerow([
                row.backend_label, row.model_id, row.mode, row.n,
                *[class_map.get(c, 0) for c in CALENDAR_FAILURE_CLASSES],
                *[field_map.get(f, 0) for f in CALENDAR_SEMANTIC_FIELDS],
            ])


def score_to_files(result: ScoreResult, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "aggregates": out / "aggregates.csv",
        "comparisons": out / "comparisons.csv",
        "calendar": out / "calendar_failures.csv",
    }
    write_aggregates_csv(paths["aggregates"], result.aggregates)
    write_comparisons_csv(paths["comparisons"], result.comparisons)
    write_calendar_csv(paths["calendar"], result.calendar)
    return paths


def load_records(path: str | Path) -> list[RunRecord]:
    return read_records(path)
