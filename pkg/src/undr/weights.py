"""Facet and value popularity weights computed from selection records.

The facet weight of f is the share of users who selected a specific value
for f (did not pick "any"). The value weight of a bin measures how popular
that bin is among the users who used the facet; two denominator conventions
exist and both are implemented:

* ``selection_share`` (default): each bin's share of all bin selections made
  within the facet. Sums to 1 per facet and stays well-behaved when users
  tick several bins.
* ``user_share``: the fraction of facet users who ticked the bin. Under
  multi-select the per-facet sum can exceed 1; with single selections the
  two modes coincide.

Weights are exact rationals end to end; rounding happens only in display
code. Every table carries provenance (pool hash, mode, timestamp) so a
ranking can always be traced back to the exact pool that produced it.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .catalog import FacetDef, FacetSchema
from .errors import EmptyPool, FormatError, UnknownBin
from .needslog import (
    ALL_COHORT,
    CohortSpec,
    SelectionRecord,
    assign_cohort,
    record_to_dict,
)

logger = logging.getLogger(__name__)

SELECTION_SHARE = "selection_share"
USER_SHARE = "user_share"
DENOMINATOR_MODES = (SELECTION_SHARE, USER_SHARE)

WEIGHTS_FORMAT_VERSION = 1

#: Pools smaller than this trigger a warning (not an error): shares computed
#: from a handful of users are noisy.
DEFAULT_MIN_POOL = 30


def pool_hash(records: Sequence[SelectionRecord]) -> str:
    """Order-sensitive content hash of a record pool."""
    h = hashlib.sha256()
    for record in records:
        h.update(json.dumps(record_to_dict(record), sort_keys=True).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


@dataclass(frozen=True)
class Provenance:
    """Binds a weight table to the exact pool and mode that produced it."""

    pool_hash: str
    computed_at: str
    denominator_mode: str
    cohort_id: str
    source_mix: Mapping[str, int]

    @property
    def fingerprint(self) -> str:
        """Stable identity of (pool, mode, cohort); excludes the timestamp."""
        raw = f"{self.pool_hash}|{self.denominator_mode}|{self.cohort_id}"
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class FacetWeights:
    """Weights for one facet: w_f plus a value weight per bin."""

    facet_id: str
    users_specific: int
    weight: Fraction
    value_weights: Mapping[str, Fraction]
    selection_counts: Mapping[str, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "value_weights", dict(self.value_weights))
        object.__setattr__(self, "selection_counts", dict(self.selection_counts))


@dataclass(frozen=True)
class WeightTable:
    """Per-cohort popularity weights; an immutable snapshot."""

    cohort_id: str
    total_users: int
    facets: Mapping[str, FacetWeights]
    provenance: Provenance

    def __post_init__(self) -> None:
        object.__setattr__(self, "facets", dict(self.facets))

    @property
    def facet_ids(self) -> tuple[str, ...]:
        return tuple(self.facets)

    def facet_weight(self, facet_id: str) -> Fraction:
        return self.facets[facet_id].weight

    def value_weight(self, facet_id: str, bin_id: str) -> Fraction:
        return self.facets[facet_id].value_weights.get(bin_id, Fraction(0))

    def weights_equal(self, other: "WeightTable") -> bool:
        """Same mathematical content (weights), ignoring provenance and counts."""
        if set(self.facets) != set(other.facets):
            return False
        for fid, fw in self.facets.items():
            ow = other.facets[fid]
            if fw.weight != ow.weight or dict(fw.value_weights) != dict(ow.value_weights):
                return False
        return True

    def drop_facet(self, facet_id: str) -> "WeightTable":
        """A copy without one facet (for schema-reduction scenarios)."""
        remaining = {fid: fw for fid, fw in self.facets.items() if fid != facet_id}
        return WeightTable(self.cohort_id, self.total_users, remaining, self.provenance)


def compute_facet_weight(records: Sequence[SelectionRecord], facet_id: str) -> Fraction:
    """w_f: users who picked a specific value for the facet over all users."""
    if not records:
        raise EmptyPool("cannot compute a facet weight over zero records")
    specific = sum(1 for r in records if not r.is_any(facet_id))
    return Fraction(specific, len(records))


def compute_value_weights(
    records: Sequence[SelectionRecord],
    facet: FacetDef,
    mode: str = SELECTION_SHARE,
) -> dict[str, Fraction]:
    """Value weight per bin of the facet, under the chosen denominator mode.

    When nobody used the facet every value weight is 0.
    """
    _check_mode(mode)
    counts = value_selection_counts(records, facet, mode)
    denominator = _denominator(records, facet, mode)
    if denominator == 0:
        return {bin_id: Fraction(0) for bin_id in facet.bin_ids}
    return {bin_id: Fraction(counts[bin_id], denominator) for bin_id in facet.bin_ids}


def value_selection_counts(
    records: Sequence[SelectionRecord],
    facet: FacetDef,
    mode: str = SELECTION_SHARE,
) -> dict[str, int]:
    """Raw per-bin counts: bin selections (selection_share) or users (user_share).

    The two coincide because a user contributes at most once per bin either
    way; the modes differ only in the denominator.
    """
    counts = {bin_id: 0 for bin_id in facet.bin_ids}
    for record in records:
        selection = record.selection_for(facet.facet_id)
        if isinstance(selection, frozenset):
            for bin_id in selection:
                if bin_id not in counts:
                    raise UnknownBin(
                        f"record {record.record_id!r}: bin {bin_id!r} not in facet {facet.facet_id!r}"
                    )
                counts[bin_id] += 1
    return counts


def _denominator(records: Sequence[SelectionRecord], facet: FacetDef, mode: str) -> int:
    users = [r for r in records if not r.is_any(facet.facet_id)]
    if mode == USER_SHARE:
        return len(users)
    return sum(len(r.selection_for(facet.facet_id)) for r in users)  # type: ignore[arg-type]


def _check_mode(mode: str) -> None:
    if mode not in DENOMINATOR_MODES:
        raise ValueError(f"unknown denominator mode {mode!r}; expected one of {DENOMINATOR_MODES}")


def build_weight_table(
    records: Sequence[SelectionRecord],
    schema: FacetSchema,
    cohort_spec: CohortSpec = ALL_COHORT,
    mode: str = SELECTION_SHARE,
    min_pool: int = DEFAULT_MIN_POOL,
) -> WeightTable:
    """Filter records to the cohort, then compute all weights for the schema.

    Deterministic for a fixed pool; the result embeds provenance. Raises
    EmptyPool when the cohort matches nothing.
    """
    _check_mode(mode)
    pool = [r for r in records if assign_cohort(r, cohort_spec)]
    if not pool:
        raise EmptyPool(
            f"cohort {cohort_spec.cohort_id!r} matched 0 of {len(records)} records"
        )
    if len(pool) < min_pool:
        logger.warning(
            "cohort %r has only %d records (recommended minimum %d); weights will be noisy",
            cohort_spec.cohort_id,
            len(pool),
            min_pool,
        )
    facets: dict[str, FacetWeights] = {}
    for facet in schema:
        users_specific = sum(1 for r in pool if not r.is_any(facet.facet_id))
        facets[facet.facet_id] = FacetWeights(
            facet_id=facet.facet_id,
            users_specific=users_specific,
            weight=Fraction(users_specific, len(pool)),
            value_weights=compute_value_weights(pool, facet, mode),
            selection_counts=value_selection_counts(pool, facet, mode),
        )
    source_mix: dict[str, int] = {}
    for record in pool:
        source_mix[record.source] = source_mix.get(record.source, 0) + 1
    provenance = Provenance(
        pool_hash=pool_hash(pool),
        computed_at=datetime.now(tz=timezone.utc).isoformat(),
        denominator_mode=mode,
        cohort_id=cohort_spec.cohort_id,
        source_mix=source_mix,
    )
    return WeightTable(
        cohort_id=cohort_spec.cohort_id,
        total_users=len(pool),
        facets=facets,
        provenance=provenance,
    )


def empty_table(schema: FacetSchema, cohort_id: str = "all", mode: str = SELECTION_SHARE) -> WeightTable:
    """A zero-weight table for cold starts (no records collected yet)."""
    _check_mode(mode)
    facets = {
        facet.facet_id: FacetWeights(
            facet_id=facet.facet_id,
            users_specific=0,
            weight=Fraction(0),
            value_weights={b: Fraction(0) for b in facet.bin_ids},
            selection_counts={b: 0 for b in facet.bin_ids},
        )
        for facet in schema
    }
    provenance = Provenance(
        pool_hash=pool_hash([]),
        computed_at=datetime.now(tz=timezone.utc).isoformat(),
        denominator_mode=mode,
        cohort_id=cohort_id,
        source_mix={},
    )
    return WeightTable(cohort_id=cohort_id, total_users=0, facets=facets, provenance=provenance)


# --- serialization ----------------------------------------------------------

def _fraction_to_json(value: Fraction) -> dict:
    return {"fraction": f"{value.numerator}/{value.denominator}", "value": float(value)}


def _fraction_from_json(d: Mapping) -> Fraction:
    num, den = d["fraction"].split("/")
    return Fraction(int(num), int(den))


def table_to_dict(table: WeightTable) -> dict:
    return {
        "format_version": WEIGHTS_FORMAT_VERSION,
        "cohort_id": table.cohort_id,
        "total_users": table.total_users,
        "provenance": {
            "pool_hash": table.provenance.pool_hash,
            "computed_at": table.provenance.computed_at,
            "denominator_mode": table.provenance.denominator_mode,
            "cohort_id": table.provenance.cohort_id,
            "source_mix": dict(table.provenance.source_mix),
            "fingerprint": table.provenance.fingerprint,
        },
        "facets": [
            {
                "facet_id": fw.facet_id,
                "users_specific": fw.users_specific,
                "weight": _fraction_to_json(fw.weight),
                "values": [
                    {
                        "bin_id": bin_id,
                        "selection_count": fw.selection_counts.get(bin_id, 0),
                        "weight": _fraction_to_json(weight),
                    }
                    for bin_id, weight in fw.value_weights.items()
                ],
            }
            for fw in table.facets.values()
        ],
    }


def table_from_dict(data: Mapping) -> WeightTable:
    version = data.get("format_version", WEIGHTS_FORMAT_VERSION)
    if version != WEIGHTS_FORMAT_VERSION:
        raise FormatError(f"unsupported weights format_version {version!r}")
    prov = data["provenance"]
    facets = {
        f["facet_id"]: FacetWeights(
            facet_id=f["facet_id"],
            users_specific=int(f["users_specific"]),
            weight=_fraction_from_json(f["weight"]),
            value_weights={v["bin_id"]: _fraction_from_json(v["weight"]) for v in f["values"]},
            selection_counts={v["bin_id"]: int(v.get("selection_count", 0)) for v in f["values"]},
        )
        for f in data["facets"]
    }
    return WeightTable(
        cohort_id=data["cohort_id"],
        total_users=int(data["total_users"]),
        facets=facets,
        provenance=Provenance(
            pool_hash=prov["pool_hash"],
            computed_at=prov["computed_at"],
            denominator_mode=prov["denominator_mode"],
            cohort_id=prov.get("cohort_id", data["cohort_id"]),
            source_mix=dict(prov.get("source_mix", {})),
        ),
    )


def dump_table(table: WeightTable, path: str | Path) -> None:
    Path(path).write_text(json.dumps(table_to_dict(table), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_table(path: str | Path) -> WeightTable:
    return table_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def render_table(table: WeightTable, schema: FacetSchema | None = None) -> str:
    """Human-readable summary: per facet the "any" count and overall weight."""
    labels = {f.facet_id: f.label for f in schema} if schema is not None else {}
    ordered: Iterable[str] = (f.facet_id for f in schema) if schema is not None else table.facets
    lines = [
        f"cohort: {table.cohort_id}   users: {table.total_users}   mode: {table.provenance.denominator_mode}",
        f"{'facet':24s} {'any count':>9s} {'weight':>7s}",
    ]
    for fid in ordered:
        fw = table.facets[fid]
        any_count = table.total_users - fw.users_specific
        lines.append(f"{labels.get(fid, fid):24s} {any_count:9d} {float(fw.weight):7.2f}")
    return "\n".join(lines)
