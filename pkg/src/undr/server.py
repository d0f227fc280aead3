"""HTTP service: live rankings, selection-event capture, weight recomputation.

State handling follows an event-sourcing discipline: selection and finalize
events go to an append-only JSON Lines log, periodic snapshot files capture
derived state, and a restart replays the log back to an identical engine.
Rankings are always served from one immutable snapshot (catalog + weight
tables + precomputed orderings); recomputation builds a fresh snapshot and
swaps it in atomically, so concurrent readers never observe a torn table.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .catalog import (
    FacetSchema,
    Product,
    filter_catalog,
    product_to_dict,
    schema_to_dict,
)
from .errors import BelowMinPool, EmptyPool, SchemaMismatch, UndrError, UnknownBin
from .needslog import (
    DEFAULT_COHORTS,
    CohortSpec,
    SelectionRecord,
    SessionAggregator,
    record_to_dict,
)
from .ranking import (
    METHOD_RATING,
    METHOD_UNDR,
    RankedList,
    rank_by_rating,
    rank_undr,
    ranked_to_dict,
    top_k,
)
from .weights import (
    SELECTION_SHARE,
    WeightTable,
    build_weight_table,
    empty_table,
    table_to_dict,
)

SNAPSHOT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class EngineConfig:
    min_pool: int = 1
    denominator_mode: str = SELECTION_SHARE
    min_ratings: int = 10
    idle_timeout: float = 1800.0
    cohorts: tuple[CohortSpec, ...] = DEFAULT_COHORTS


class EventLog:
    """Append-only JSON Lines event store with monotonically increasing seq."""

    def __init__(self, path: Path | None) -> None:
        self.path = path
        self._seq = 0
        self._lock = threading.Lock()
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            for event in self.events():
                self._seq = max(self._seq, int(event.get("seq", 0)))

    def append(self, event: dict) -> int:
        with self._lock:
            self._seq += 1
            event = {"seq": self._seq, **event}
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(event, sort_keys=True) + "\n")
                    fh.flush()
            return self._seq

    @property
    def seq(self) -> int:
        return self._seq

    def events(self) -> list[dict]:
        if self.path is None or not self.path.exists():
            return []
        out = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                out.append(json.loads(line))
        return out


@dataclass(frozen=True)
class RankingSnapshot:
    """One consistent (catalog, tables, orderings) view served to readers."""

    catalog: tuple[Product, ...]
    tables: Mapping[str, WeightTable]
    rankings: Mapping[tuple[str, str], RankedList]

    def fingerprints(self) -> dict[str, str]:
        return {cohort: table.provenance.fingerprint for cohort, table in self.tables.items()}


class EngineState:
    """The server's core: an event-sourced record store plus atomic ranking
    snapshots. Many readers, single writer."""

    def __init__(
        self,
        schema: FacetSchema,
        catalog: Sequence[Product],
        config: EngineConfig = EngineConfig(),
        log_dir: Path | str | None = None,
        initial_records: Sequence[SelectionRecord] = (),
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.schema = schema
        self.config = config
        self.catalog = tuple(filter_catalog(catalog, schema, config.min_ratings))
        self._clock = clock
        self._writer_lock = threading.RLock()
        self._initial_records = tuple(initial_records)
        self._live_records: list[SelectionRecord] = []
        self.aggregator = SessionAggregator(schema, idle_timeout=config.idle_timeout, clock=clock)
        self._tables_by_fingerprint: dict[str, WeightTable] = {}

        self.log_dir = Path(log_dir) if log_dir is not None else None
        log_path = self.log_dir / "events.jsonl" if self.log_dir is not None else None
        self.event_log = EventLog(log_path)
        self._replayed_upto = self._restore()
        self._snapshot = self._build_snapshot()

    # --- event sourcing -------------------------------------------------

    def _snapshot_path(self) -> Path | None:
        return self.log_dir / "state-snapshot.json" if self.log_dir is not None else None

    def _restore(self) -> int:
        """Load the newest state snapshot, then replay the remaining events."""
        last_seq = 0
        snap_path = self._snapshot_path()
        if snap_path is not None and snap_path.exists():
            snap = json.loads(snap_path.read_text(encoding="utf-8"))
            if snap.get("format_version") != SNAPSHOT_FORMAT_VERSION:
                raise UndrError(f"unsupported state snapshot version {snap.get('format_version')!r}")
            last_seq = int(snap.get("last_seq", 0))
            for d in snap.get("live_records", []):
                self._live_records.append(_record_from_snapshot(d))
                self.aggregator.restore_finalized(self._live_records[-1])
            self.aggregator.restore_pending(snap.get("pending", {}))
        for event in self.event_log.events():
            if int(event.get("seq", 0)) <= last_seq:
                continue
            self._apply_event(event)
            last_seq = int(event["seq"])
        return last_seq

    def _apply_event(self, event: dict) -> None:
        kind = event.get("kind")
        if kind == "selection":
            self.aggregator.apply(
                event["session_id"], event["facet_id"], event["selection"], event["sequence"]
            )
        elif kind == "finalize":
            record = self.aggregator.finalize(
                event["session_id"],
                usage_tasks=event.get("usage_tasks", ()),
                domain_knowledge=event.get("domain_knowledge"),
                at=float(event["ts"]),
            )
            if all(r.record_id != record.record_id for r in self._live_records):
                self._live_records.append(record)
        else:
            raise UndrError(f"unknown event kind {kind!r} in log")

    def write_snapshot(self) -> None:
        """Persist derived state so restarts skip already-compacted events."""
        snap_path = self._snapshot_path()
        if snap_path is None:
            return
        with self._writer_lock:
            payload = {
                "format_version": SNAPSHOT_FORMAT_VERSION,
                "last_seq": self.event_log.seq,
                "live_records": [record_to_dict(r) for r in self._live_records],
                "pending": self.aggregator.export_pending(),
            }
        snap_path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")

    # --- record access ----------------------------------------------------

    @property
    def records(self) -> tuple[SelectionRecord, ...]:
        """All finalized records: the seeded pool plus live sessions."""
        with self._writer_lock:
            return self._initial_records + tuple(self._live_records)

    @property
    def snapshot(self) -> RankingSnapshot:
        return self._snapshot

    def table_by_fingerprint(self, fingerprint: str) -> WeightTable | None:
        return self._tables_by_fingerprint.get(fingerprint)

    # --- writes -----------------------------------------------------------

    def post_selection(self, session_id: str, facet_id: str, selection, sequence: int = 0) -> dict:
        """Validate and append one live selection event."""
        state = self.aggregator.apply(session_id, facet_id, selection, sequence)
        payload = selection if isinstance(selection, str) else sorted(selection)
        self.event_log.append(
            {
                "kind": "selection",
                "ts": self._clock(),
                "session_id": session_id,
                "facet_id": facet_id,
                "selection": payload,
                "sequence": int(sequence),
            }
        )
        return state

    def finalize_session(
        self,
        session_id: str,
        usage_tasks: Sequence[str] = (),
        domain_knowledge: int | None = None,
    ) -> SelectionRecord:
        """Close a session; idempotent, the first call wins."""
        with self._writer_lock:
            if self.aggregator.is_finalized(session_id):
                return self.aggregator.finalize(session_id)
            ts = self._clock()
            record = self.aggregator.finalize(
                session_id, usage_tasks=usage_tasks, domain_knowledge=domain_knowledge, at=ts
            )
            self._live_records.append(record)
            self.event_log.append(
                {
                    "kind": "finalize",
                    "ts": ts,
                    "session_id": session_id,
                    "usage_tasks": sorted(usage_tasks),
                    "domain_knowledge": domain_knowledge,
                }
            )
            return record

    def sweep_idle_sessions(self) -> list[SelectionRecord]:
        """Finalize sessions idle past the timeout, logging each."""
        with self._writer_lock:
            stale = self.aggregator.idle_sessions(self._clock())
            return [self.finalize_session(sid) for sid in stale]

    # --- snapshots and rankings --------------------------------------------

    def _build_table(self, records: Sequence[SelectionRecord], spec: CohortSpec) -> WeightTable:
        try:
            return build_weight_table(
                records, self.schema, cohort_spec=spec, mode=self.config.denominator_mode, min_pool=0
            )
        except EmptyPool:
            return empty_table(self.schema, spec.cohort_id, self.config.denominator_mode)

    def _build_snapshot(self, keep: Mapping[str, WeightTable] | None = None, only: str | None = None) -> RankingSnapshot:
        records = self.records
        tables: dict[str, WeightTable] = {}
        for spec in self.config.cohorts:
            if only is not None and spec.cohort_id != only and keep is not None:
                tables[spec.cohort_id] = keep[spec.cohort_id]
            else:
                tables[spec.cohort_id] = self._build_table(records, spec)
        rankings: dict[tuple[str, str], RankedList] = {}
        for cohort_id, table in tables.items():
            rankings[(METHOD_UNDR, cohort_id)] = rank_undr(self.catalog, table, self.schema)
        baseline = rank_by_rating(self.catalog) if self.catalog else RankedList(METHOD_RATING, (), {})
        for cohort_id in tables:
            rankings[(METHOD_RATING, cohort_id)] = baseline
        for table in tables.values():
            self._tables_by_fingerprint[table.provenance.fingerprint] = table
        return RankingSnapshot(catalog=self.catalog, tables=tables, rankings=rankings)

    def recompute_weights(self, cohort_id: str | None = None) -> dict[str, dict[str, str]]:
        """Rebuild weight tables and swap the serving snapshot atomically.

        Refuses (BelowMinPool) when fewer finalized records exist than the
        configured minimum. Returns per-cohort old/new fingerprints.
        """
        with self._writer_lock:
            self.sweep_idle_sessions()
            count = len(self.records)
            if count < self.config.min_pool:
                raise BelowMinPool(count, self.config.min_pool)
            if cohort_id is not None and cohort_id not in {s.cohort_id for s in self.config.cohorts}:
                raise KeyError(cohort_id)
            old = self._snapshot
            new = self._build_snapshot(keep=old.tables, only=cohort_id)
            self._snapshot = new  # atomic swap; in-flight readers keep the old one
            self.write_snapshot()
            return {
                cohort: {
                    "old_fingerprint": old.tables[cohort].provenance.fingerprint,
                    "new_fingerprint": new.tables[cohort].provenance.fingerprint,
                }
                for cohort in new.tables
                if cohort_id is None or cohort == cohort_id
            }

    # --- reads --------------------------------------------------------------

    def get_ranking(self, cohort_id: str = "all", k: int = 10, method: str = METHOD_UNDR) -> RankedList:
        """Top-k of the requested method over the current snapshot."""
        if method not in (METHOD_UNDR, METHOD_RATING):
            raise ValueError(f"unknown method {method!r}")
        if k < 0:
            raise ValueError("k must be >= 0")
        snapshot = self._snapshot
        if method == METHOD_RATING:
            full = snapshot.rankings[(METHOD_RATING, next(iter(snapshot.tables)))]
        else:
            try:
                full = snapshot.rankings[(METHOD_UNDR, cohort_id)]
            except KeyError:
                raise KeyError(cohort_id) from None
        return top_k(full, k)

    def get_table(self, cohort_id: str) -> WeightTable:
        try:
            return self._snapshot.tables[cohort_id]
        except KeyError:
            raise KeyError(cohort_id) from None


def _record_from_snapshot(d: dict) -> SelectionRecord:
    from .needslog import ANY

    selections = {
        fid: (ANY if sel == "any" else frozenset(sel)) for fid, sel in d["selections"].items()
    }
    return SelectionRecord(
        record_id=d["record_id"],
        selections=selections,
        usage_tasks=frozenset(d.get("usage_tasks", ())),
        domain_knowledge=d.get("domain_knowledge"),
        demographics=d.get("demographics"),
        source=d.get("source", "live_event"),
        timestamp=d.get("timestamp"),
    )


# --- HTTP layer ----------------------------------------------------------------

from pydantic import BaseModel, Field


class SelectionEventBody(BaseModel):
    session_id: str
    facet_id: str
    selection: str | list[str]
    sequence: int = 0


class FinalizeBody(BaseModel):
    usage_tasks: list[str] = Field(default_factory=list)
    domain_knowledge: int | None = None


class RecomputeBody(BaseModel):
    cohort: str | None = None


def create_app(engine: EngineState):
    """FastAPI app over an engine; all payloads are versioned JSON."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="undr ranking service", version="1.0.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.engine = engine

    @app.get("/api/v1/healthz")
    def healthz():
        return {"ok": True, "records": len(engine.records)}

    @app.get("/api/v1/facets")
    def get_facets():
        return schema_to_dict(engine.schema)

    @app.get("/api/v1/products")
    def get_products():
        return {
            "format_version": 1,
            "count": len(engine.catalog),
            "products": [product_to_dict(p) for p in engine.catalog],
        }

    @app.get("/api/v1/rankings")
    def get_rankings(method: str = METHOD_UNDR, cohort: str = "all", k: int = 10):
        try:
            ranked = engine.get_ranking(cohort_id=cohort, k=k, method=method)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown cohort {cohort!r}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except SchemaMismatch as exc:
            raise HTTPException(status_code=500, detail=f"schema/table mismatch: {exc}")
        body = ranked_to_dict(ranked, engine.catalog)
        body["cohort"] = cohort
        return body

    @app.post("/api/v1/events/selection")
    def post_selection(body: SelectionEventBody):
        try:
            state = engine.post_selection(body.session_id, body.facet_id, body.selection, body.sequence)
        except UnknownBin as exc:
            raise HTTPException(status_code=422, detail={"field": "selection", "error": str(exc)})
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={"field": "selection", "error": str(exc)})
        from .needslog import selection_to_json

        return {
            "accepted": True,
            "session_id": body.session_id,
            "pending": {fid: selection_to_json(sel) for fid, sel in state.items()},
        }

    @app.post("/api/v1/sessions/{session_id}/finalize")
    def finalize(session_id: str, body: FinalizeBody | None = None):
        body = body or FinalizeBody()
        record = engine.finalize_session(
            session_id, usage_tasks=body.usage_tasks, domain_knowledge=body.domain_knowledge
        )
        return {"finalized": True, "record": record_to_dict(record)}

    @app.post("/api/v1/weights/recompute")
    def recompute(body: RecomputeBody | None = None):
        body = body or RecomputeBody()
        try:
            changes = engine.recompute_weights(body.cohort)
        except BelowMinPool as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": "below_min_pool", "count": exc.count, "min_pool": exc.min_pool},
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown cohort {body.cohort!r}")
        return {"recomputed": True, "tables": changes}

    @app.get("/api/v1/weights/{cohort}")
    def get_weights(cohort: str, fingerprint: str | None = None):
        if fingerprint is not None:
            table = engine.table_by_fingerprint(fingerprint)
            if table is None:
                raise HTTPException(status_code=404, detail=f"no table with fingerprint {fingerprint!r}")
            return table_to_dict(table)
        try:
            return table_to_dict(engine.get_table(cohort))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown cohort {cohort!r}")

    return app


def serve(
    engine: EngineState,
    host: str = "127.0.0.1",
    port: int = 8000,
    ui_dir: Path | str | None = None,
) -> None:
    """Run the service under uvicorn; optionally mount a static UI build."""
    import uvicorn

    app = create_app(engine)
    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="info")
