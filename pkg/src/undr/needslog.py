"""Ingestion of facet-selection records and cohort partitioning.

A selection record is one user's complete facet profile: for every facet in
the schema either the explicit "any" marker (the facet did not matter to
them) or a non-empty set of bin ids. Records come from survey exports
(JSON Lines or CSV) or from finalized live shop sessions; malformed input is
rejected with machine-readable reasons, never silently dropped.
"""

from __future__ import annotations

import csv
import json
import threading
import time
from pathlib import Path
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Iterable, Mapping, Sequence

from .catalog import FacetSchema
from .errors import FormatError, IoError, UnknownBin

RECORDS_FORMAT_VERSION = 1


class _AnyMarker:
    """Singleton for the explicit "any" (facet not important) choice."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "ANY"


ANY = _AnyMarker()

Selection = _AnyMarker | frozenset[str]

#: Default laptop usage task list; the advanced subset drives the
#: basic/advanced cohort split.
ADVANCED_TASKS = frozenset({"digital_editing", "software_development", "high_level_gaming"})

DEFAULT_TASKS = (
    "office_work",
    "web_browsing",
    "streaming",
    "video_conferencing",
    "social_media",
    "online_shopping",
    "casual_gaming",
    "digital_editing",
    "software_development",
    "high_level_gaming",
)


@dataclass(frozen=True)
class TaskList:
    """A configurable usage-task vocabulary with its advanced subset."""

    tasks: tuple[str, ...] = DEFAULT_TASKS
    advanced: frozenset[str] = ADVANCED_TASKS

    def __post_init__(self) -> None:
        if not self.advanced <= set(self.tasks):
            raise ValueError("advanced tasks must be a subset of the task list")


DEFAULT_TASK_LIST = TaskList()


@dataclass(frozen=True)
class SelectionRecord:
    """One user's facet selections plus profile fields."""

    record_id: str
    selections: Mapping[str, Selection]
    usage_tasks: frozenset[str] = frozenset()
    domain_knowledge: int | None = None
    demographics: Mapping[str, str] | None = None
    source: str = "survey"  # "survey" | "live_event"
    timestamp: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "selections", dict(self.selections))
        object.__setattr__(self, "usage_tasks", frozenset(self.usage_tasks))

    def selection_for(self, facet_id: str) -> Selection:
        return self.selections[facet_id]

    def is_any(self, facet_id: str) -> bool:
        return isinstance(self.selections[facet_id], _AnyMarker)


@dataclass(frozen=True)
class RejectedRecord:
    """A record that failed validation, with a machine-readable reason."""

    line_number: int
    reason: str
    detail: str
    raw: str


@dataclass(frozen=True)
class CohortSpec:
    """Membership rule for a user cohort.

    ``basic`` means no advanced usage task at all, ``advanced`` means at
    least one; the two are complements. ``custom`` delegates to a predicate
    over the record's task set.
    """

    cohort_id: str
    rule: str  # "all" | "basic" | "advanced" | "custom"
    advanced_tasks: frozenset[str] = ADVANCED_TASKS
    predicate: Callable[[frozenset[str]], bool] | None = None

    def __post_init__(self) -> None:
        if self.rule not in ("all", "basic", "advanced", "custom"):
            raise ValueError(f"unknown cohort rule {self.rule!r}")
        if self.rule == "custom" and self.predicate is None:
            raise ValueError("custom cohort rule requires a predicate")


ALL_COHORT = CohortSpec("all", "all")
BASIC_COHORT = CohortSpec("basic", "basic")
ADVANCED_COHORT = CohortSpec("advanced", "advanced")
DEFAULT_COHORTS = (ALL_COHORT, BASIC_COHORT, ADVANCED_COHORT)


def assign_cohort(record: SelectionRecord, spec: CohortSpec) -> bool:
    """Whether a validated record belongs to the cohort."""
    if spec.rule == "all":
        return True
    has_advanced = bool(record.usage_tasks & spec.advanced_tasks)
    if spec.rule == "basic":
        return not has_advanced
    if spec.rule == "advanced":
        return has_advanced
    assert spec.predicate is not None
    return spec.predicate(record.usage_tasks)


def cohort_partition(
    records: Sequence[SelectionRecord],
    specs: Sequence[CohortSpec] = DEFAULT_COHORTS,
) -> dict[str, list[SelectionRecord]]:
    """Split records into cohorts; basic and advanced partition the pool."""
    return {spec.cohort_id: [r for r in records if assign_cohort(r, spec)] for spec in specs}


# --- validation -------------------------------------------------------------

def _validate_selections(raw: Mapping[str, object], schema: FacetSchema) -> tuple[dict[str, Selection] | None, tuple[str, str] | None]:
    """Turn a raw selections mapping into a validated one, or a (reason, detail) pair."""
    known = set(schema.facet_ids)
    unknown = set(raw) - known
    if unknown:
        return None, ("unknown_facet", f"facets not in schema: {sorted(unknown)}")
    missing = known - set(raw)
    if missing:
        return None, ("missing_facet", f"no entry for facets: {sorted(missing)}")
    selections: dict[str, Selection] = {}
    for facet in schema:
        value = raw[facet.facet_id]
        if isinstance(value, _AnyMarker) or (isinstance(value, str) and value.strip().lower() == "any"):
            selections[facet.facet_id] = ANY
            continue
        if not isinstance(value, (list, tuple, set, frozenset)):
            return None, ("bad_selection", f"facet {facet.facet_id!r}: expected 'any' or a list of bin ids")
        bins = frozenset(str(v) for v in value)
        if not bins:
            return None, ("empty_selection", f"facet {facet.facet_id!r}: empty value set without 'any'")
        bad = bins - set(facet.bin_ids)
        if bad:
            return None, ("unknown_bin", f"facet {facet.facet_id!r}: unknown bins {sorted(bad)}")
        selections[facet.facet_id] = bins
    return selections, None


@dataclass(frozen=True)
class ExclusionRule:
    """A pluggable study-specific exclusion (e.g. low quality, no laptop owned)."""

    name: str
    predicate: Callable[[SelectionRecord], bool]


def _record_from_dict(d: Mapping[str, object], schema: FacetSchema, default_id: str) -> SelectionRecord | tuple[str, str]:
    raw_selections = d.get("selections")
    if not isinstance(raw_selections, Mapping):
        return ("missing_field", "no 'selections' object")
    selections, problem = _validate_selections(raw_selections, schema)
    if problem is not None:
        return problem
    dk = d.get("domain_knowledge")
    if dk is not None:
        if not isinstance(dk, int) or isinstance(dk, bool) or not 1 <= dk <= 5:
            return ("bad_domain_knowledge", f"domain_knowledge must be an integer 1..5, got {dk!r}")
    source = d.get("source", "survey")
    if source not in ("survey", "live_event"):
        return ("bad_source", f"source must be 'survey' or 'live_event', got {source!r}")
    tasks = d.get("usage_tasks", ())
    if not isinstance(tasks, (list, tuple, set, frozenset)):
        return ("bad_tasks", "usage_tasks must be a list of task tags")
    demographics = d.get("demographics")
    if demographics is not None and not isinstance(demographics, Mapping):
        return ("bad_demographics", "demographics must be an object")
    assert selections is not None
    return SelectionRecord(
        record_id=str(d.get("record_id", default_id)),
        selections=selections,
        usage_tasks=frozenset(str(t) for t in tasks),
        domain_knowledge=dk,
        demographics=dict(demographics) if demographics else None,
        source=str(source),
        timestamp=str(d["timestamp"]) if d.get("timestamp") is not None else None,
    )


def parse_records(
    stream: Iterable[str],
    schema: FacetSchema,
    fmt: str = "jsonl",
    exclusions: Sequence[ExclusionRule] = (),
) -> tuple[list[SelectionRecord], list[RejectedRecord]]:
    """Parse selection records from JSON Lines or CSV.

    Valid records are returned in input order; anything malformed lands in
    the rejected list with a reason code. Exclusion rules run after
    structural validation and reject with ``excluded:<name>``.
    """
    if fmt == "jsonl":
        records, rejected = _parse_jsonl(stream, schema)
    elif fmt == "csv":
        records, rejected = _parse_csv(stream, schema)
    else:
        raise ValueError(f"unknown record format {fmt!r}")
    if exclusions:
        kept: list[SelectionRecord] = []
        for record in records:
            hit = next((rule for rule in exclusions if rule.predicate(record)), None)
            if hit is None:
                kept.append(record)
            else:
                rejected.append(
                    RejectedRecord(-1, f"excluded:{hit.name}", f"record {record.record_id!r}", record.record_id)
                )
        records = kept
    return records, rejected


def _iter_lines(stream: Iterable[str]) -> Iterable[tuple[int, str]]:
    try:
        for i, line in enumerate(stream):
            yield i + 1, line
    except OSError as exc:
        raise IoError(f"cannot read record stream: {exc}") from exc


def _parse_jsonl(stream: Iterable[str], schema: FacetSchema) -> tuple[list[SelectionRecord], list[RejectedRecord]]:
    records: list[SelectionRecord] = []
    rejected: list[RejectedRecord] = []
    for line_no, line in _iter_lines(stream):
        line = line.strip()
        if not line:
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            rejected.append(RejectedRecord(line_no, "bad_json", str(exc), line))
            continue
        if not isinstance(d, dict):
            rejected.append(RejectedRecord(line_no, "bad_json", "line is not a JSON object", line))
            continue
        if "selections" not in d and "format_version" in d:
            if d["format_version"] != RECORDS_FORMAT_VERSION:
                raise FormatError(f"unsupported records format_version {d['format_version']!r}")
            continue
        result = _record_from_dict(d, schema, default_id=f"line{line_no}")
        if isinstance(result, SelectionRecord):
            records.append(result)
        else:
            rejected.append(RejectedRecord(line_no, result[0], result[1], line))
    return records, rejected


FACET_COLUMN_PREFIX = "facet:"


def _parse_csv(stream: Iterable[str], schema: FacetSchema) -> tuple[list[SelectionRecord], list[RejectedRecord]]:
    """CSV convention: ``facet:<id>`` columns hold ``any`` or ``;``-separated bin ids."""
    records: list[SelectionRecord] = []
    rejected: list[RejectedRecord] = []
    reader = csv.DictReader(line for _, line in _iter_lines(stream))
    for row_no, row in enumerate(reader, start=2):  # header is line 1
        raw = ",".join(v if v is not None else "" for v in row.values())
        selections: dict[str, object] = {}
        for facet_id in schema.facet_ids:
            cell = row.get(f"{FACET_COLUMN_PREFIX}{facet_id}")
            if cell is None or not cell.strip():
                continue  # validation reports it as missing_facet
            cell = cell.strip()
            selections[facet_id] = "any" if cell.lower() == "any" else [b.strip() for b in cell.split(";") if b.strip()]
        tasks = [t.strip() for t in (row.get("usage_tasks") or "").split(";") if t.strip()]
        dk_cell = (row.get("domain_knowledge") or "").strip()
        d: dict[str, object] = {
            "record_id": (row.get("record_id") or f"row{row_no}").strip(),
            "selections": selections,
            "usage_tasks": tasks,
            "source": (row.get("source") or "survey").strip(),
            "timestamp": (row.get("timestamp") or "").strip() or None,
        }
        if dk_cell:
            try:
                d["domain_knowledge"] = int(dk_cell)
            except ValueError:
                d["domain_knowledge"] = dk_cell  # validation rejects it
        result = _record_from_dict(d, schema, default_id=f"row{row_no}")
        if isinstance(result, SelectionRecord):
            records.append(result)
        else:
            rejected.append(RejectedRecord(row_no, result[0], result[1], raw))
    return records, rejected


# --- serialization ----------------------------------------------------------

def selection_to_json(selection: Selection) -> str | list[str]:
    if isinstance(selection, _AnyMarker):
        return "any"
    return sorted(selection)


def record_to_dict(record: SelectionRecord) -> dict:
    return {
        "record_id": record.record_id,
        "selections": {fid: selection_to_json(sel) for fid, sel in record.selections.items()},
        "usage_tasks": sorted(record.usage_tasks),
        "domain_knowledge": record.domain_knowledge,
        "demographics": dict(record.demographics) if record.demographics else None,
        "source": record.source,
        "timestamp": record.timestamp,
    }


def dump_records(records: Iterable[SelectionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format_version": RECORDS_FORMAT_VERSION, "kind": "selection_records"}) + "\n")
        for r in records:
            fh.write(json.dumps(record_to_dict(r), sort_keys=True) + "\n")


def load_records(path: str | Path, schema: FacetSchema, fmt: str | None = None, exclusions: Sequence[ExclusionRule] = ()):
    p = Path(path)
    if fmt is None:
        fmt = "csv" if p.suffix.lower() == ".csv" else "jsonl"
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read records file {path}: {exc}") from exc
    return parse_records(lines, schema, fmt=fmt, exclusions=exclusions)


# --- live session aggregation ------------------------------------------------

def _canonical_selection(selection: Selection) -> str | tuple[str, ...]:
    if isinstance(selection, _AnyMarker):
        return "any"
    return tuple(sorted(selection))


class SessionAggregator:
    """Folds facet-by-facet live events into one record per session.

    Events replace the facet's previous selection; an explicit ANY clears it.
    A session is finalized on submit or after an idle timeout (default 30
    minutes). Appends are serialized; replaying the same
    (facet, selection, sequence) event is a no-op.
    """

    def __init__(
        self,
        schema: FacetSchema,
        idle_timeout: float = 1800.0,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.schema = schema
        self.idle_timeout = idle_timeout
        self._clock = clock
        self._lock = threading.RLock()
        self._pending: dict[str, dict[str, Selection]] = {}
        self._seen_events: dict[str, set[tuple]] = {}
        self._last_activity: dict[str, float] = {}
        self._finalized: dict[str, SelectionRecord] = {}

    def apply(self, session_id: str, facet_id: str, selection: Selection | str | Iterable[str], sequence: int) -> dict[str, Selection]:
        """Record one selection event; returns the session's pending state."""
        facet = self._facet(facet_id)
        if isinstance(selection, str):
            normalized: Selection = ANY if selection.strip().lower() == "any" else frozenset({selection})
        elif isinstance(selection, _AnyMarker):
            normalized = ANY
        else:
            normalized = frozenset(str(b) for b in selection)
        if not isinstance(normalized, _AnyMarker):
            if not normalized:
                raise ValueError(f"facet {facet_id!r}: empty selection; send 'any' to clear")
            bad = normalized - set(facet.bin_ids)
            if bad:
                raise UnknownBin(f"facet {facet_id!r}: unknown bins {sorted(bad)}")
        with self._lock:
            if session_id in self._finalized:
                raise ValueError(f"session {session_id!r} is already finalized")
            key = (facet_id, _canonical_selection(normalized), int(sequence))
            seen = self._seen_events.setdefault(session_id, set())
            state = self._pending.setdefault(session_id, {})
            self._last_activity[session_id] = self._clock()
            if key in seen:
                return dict(state)
            seen.add(key)
            if isinstance(normalized, _AnyMarker):
                state.pop(facet_id, None)
            else:
                state[facet_id] = normalized
            return dict(state)

    def _facet(self, facet_id: str):
        try:
            return self.schema.facet(facet_id)
        except KeyError:
            raise UnknownBin(f"unknown facet {facet_id!r}") from None

    def pending_state(self, session_id: str) -> dict[str, Selection]:
        with self._lock:
            full = {fid: ANY for fid in self.schema.facet_ids}
            full.update(self._pending.get(session_id, {}))
            return full

    def finalize(
        self,
        session_id: str,
        usage_tasks: Iterable[str] = (),
        domain_knowledge: int | None = None,
        at: float | None = None,
    ) -> SelectionRecord:
        """Close a session into a SelectionRecord; repeated calls return the same record.

        ``at`` pins the record timestamp (event-log replay must reproduce
        the original record exactly).
        """
        with self._lock:
            if session_id in self._finalized:
                return self._finalized[session_id]
            moment = self._clock() if at is None else at
            record = SelectionRecord(
                record_id=session_id,
                selections=self.pending_state(session_id),
                usage_tasks=frozenset(usage_tasks),
                domain_knowledge=domain_knowledge,
                source="live_event",
                timestamp=datetime.fromtimestamp(moment, tz=timezone.utc).isoformat(),
            )
            self._finalized[session_id] = record
            self._pending.pop(session_id, None)
            self._seen_events.pop(session_id, None)
            self._last_activity.pop(session_id, None)
            return record

    def idle_sessions(self, now: float | None = None) -> list[str]:
        """Ids of open sessions idle for longer than the timeout."""
        if now is None:
            now = self._clock()
        with self._lock:
            return [sid for sid, t in self._last_activity.items() if now - t >= self.idle_timeout]

    def sweep(self) -> list[SelectionRecord]:
        """Finalize every session idle for longer than the timeout."""
        return [self.finalize(sid) for sid in self.idle_sessions()]

    def restore_finalized(self, record: SelectionRecord) -> None:
        """Re-register an already-finalized record (snapshot restore path)."""
        with self._lock:
            self._finalized[record.record_id] = record

    def is_finalized(self, session_id: str) -> bool:
        with self._lock:
            return session_id in self._finalized

    def export_pending(self) -> dict:
        """JSON-safe dump of open sessions (for snapshot files)."""
        with self._lock:
            return {
                sid: {
                    "selections": {fid: selection_to_json(sel) for fid, sel in state.items()},
                    "seen": [
                        [facet, list(sel) if isinstance(sel, tuple) else sel, seq]
                        for facet, sel, seq in sorted(self._seen_events.get(sid, set()), key=repr)
                    ],
                    "last_activity": self._last_activity.get(sid, 0.0),
                }
                for sid, state in self._pending.items()
            }

    def restore_pending(self, data: Mapping[str, Mapping]) -> None:
        """Restore open sessions from a snapshot dump."""
        with self._lock:
            for sid, entry in data.items():
                state: dict[str, Selection] = {}
                for fid, sel in entry.get("selections", {}).items():
                    state[fid] = ANY if sel == "any" else frozenset(sel)
                self._pending[sid] = state
                self._seen_events[sid] = {
                    (facet, tuple(sel) if isinstance(sel, list) else sel, int(seq))
                    for facet, sel, seq in entry.get("seen", [])
                }
                self._last_activity[sid] = float(entry.get("last_activity", 0.0))
