"""Product scoring and ordering.

The needs-driven score of a product is the sum over facets of
``w_f * w_{f_v}`` for the bin its attribute value falls into. Products whose
value matches no bin contribute 0 for that facet and are flagged in the
breakdown rather than excluded: live catalogs contain out-of-bin values even
after filtering. The rating baseline orders by average star rating.

Scores are floats derived from exact rational weights; ordering and tie
detection use the rational sums, so rankings are reproducible bit for bit.
Ties break on facet coverage (how many positive-weight facets matched a
bin), then on product id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .catalog import FacetSchema, Product, bin_attribute
from .errors import InvalidAttribute, MissingRatings, SchemaMismatch
from .weights import Provenance, WeightTable

METHOD_UNDR = "undr"
METHOD_RATING = "rating_baseline"
RANKING_FORMAT_VERSION = 1


@dataclass(frozen=True)
class FacetContribution:
    """One facet's share of a product's score; bin_id None means no bin matched."""

    facet_id: str
    bin_id: str | None
    facet_weight: Fraction
    value_weight: Fraction
    contribution: Fraction


@dataclass(frozen=True)
class ScoredProduct:
    """A product's score with its full per-facet audit trail."""

    product_id: str
    score: float
    exact_score: Fraction
    breakdown: tuple[FacetContribution, ...]
    coverage: int  # facets that matched a bin and carry positive weight


@dataclass(frozen=True)
class RankedList:
    """A deterministic ordering of products with scores and provenance."""

    method: str
    ordering: tuple[str, ...]
    scores: Mapping[str, float]
    provenance: Provenance | None = None
    breakdowns: Mapping[str, ScoredProduct] | None = None
    tie_break_trace: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", dict(self.scores))
        if self.breakdowns is not None:
            object.__setattr__(self, "breakdowns", dict(self.breakdowns))

    def __len__(self) -> int:
        return len(self.ordering)


def _check_schema_match(table: WeightTable, schema: FacetSchema) -> None:
    if set(table.facets) != set(schema.facet_ids):
        missing = set(schema.facet_ids) - set(table.facets)
        extra = set(table.facets) - set(schema.facet_ids)
        raise SchemaMismatch(
            f"weight table and schema disagree on facets (missing from table: {sorted(missing)}, "
            f"not in schema: {sorted(extra)})"
        )


def undr_score(product: Product, table: WeightTable, schema: FacetSchema) -> ScoredProduct:
    """Score one product against a weight table.

    Each facet contributes the product of its facet weight and the value
    weight of the bin containing the product's attribute; missing,
    ill-typed or out-of-bin values contribute 0 and show up in the
    breakdown with bin_id None.
    """
    _check_schema_match(table, schema)
    contributions: list[FacetContribution] = []
    total = Fraction(0)
    coverage = 0
    for facet in schema:
        raw = product.attributes.get(facet.facet_id)
        bin_id: str | None = None
        if raw is not None and not (isinstance(raw, str) and not raw.strip()):
            try:
                bin_id = bin_attribute(facet, raw)
            except InvalidAttribute:
                bin_id = None  # graceful degradation; audit trail keeps the gap visible
        facet_weight = table.facet_weight(facet.facet_id)
        if bin_id is None:
            contributions.append(
                FacetContribution(facet.facet_id, None, facet_weight, Fraction(0), Fraction(0))
            )
            continue
        value_weight = table.value_weight(facet.facet_id, bin_id)
        contribution = facet_weight * value_weight
        total += contribution
        if facet_weight > 0:
            coverage += 1
        contributions.append(
            FacetContribution(facet.facet_id, bin_id, facet_weight, value_weight, contribution)
        )
    return ScoredProduct(
        product_id=product.product_id,
        score=float(total),
        exact_score=total,
        breakdown=tuple(contributions),
        coverage=coverage,
    )


def _tie_groups(sort_keys: Sequence[tuple], ids: Sequence[str]) -> tuple[tuple[str, ...], ...]:
    """Group ids whose primary sort value ties (for the audit trace)."""
    groups: list[tuple[str, ...]] = []
    current: list[str] = []
    previous = object()
    for key, pid in zip(sort_keys, ids):
        if key == previous:
            current.append(pid)
        else:
            if len(current) > 1:
                groups.append(tuple(current))
            current = [pid]
            previous = key
    if len(current) > 1:
        groups.append(tuple(current))
    return tuple(groups)


def rank_undr(catalog: Sequence[Product], table: WeightTable, schema: FacetSchema) -> RankedList:
    """Order a catalog by descending needs-driven score.

    Ties break on higher facet coverage, then lexicographic product id.
    """
    scored = [undr_score(p, table, schema) for p in catalog]
    scored.sort(key=lambda s: (-s.exact_score, -s.coverage, s.product_id))
    ordering = tuple(s.product_id for s in scored)
    return RankedList(
        method=METHOD_UNDR,
        ordering=ordering,
        scores={s.product_id: s.score for s in scored},
        provenance=table.provenance,
        breakdowns={s.product_id: s for s in scored},
        tie_break_trace=_tie_groups([s.exact_score for s in scored], ordering),
    )


def rank_by_rating(catalog: Sequence[Product]) -> RankedList:
    """Order by descending mean star rating; ties break on rating count, then id."""
    keyed = []
    for product in catalog:
        if product.rating_count == 0:
            raise MissingRatings(f"product {product.product_id!r} has no ratings")
        mean = Fraction(product.rating_sum) / product.rating_count
        keyed.append((mean, product))
    keyed.sort(key=lambda mp: (-mp[0], -mp[1].rating_count, mp[1].product_id))
    ordering = tuple(p.product_id for _, p in keyed)
    return RankedList(
        method=METHOD_RATING,
        ordering=ordering,
        scores={p.product_id: float(m) for m, p in keyed},
        tie_break_trace=_tie_groups([m for m, _ in keyed], ordering),
    )


def top_k(ranked: RankedList, k: int) -> RankedList:
    """The first min(k, n) entries, everything else carried along."""
    if k < 0:
        raise ValueError("k must be >= 0")
    head = ranked.ordering[:k]
    keep = set(head)
    return replace(
        ranked,
        ordering=head,
        scores={pid: s for pid, s in ranked.scores.items() if pid in keep},
        breakdowns=(
            {pid: b for pid, b in ranked.breakdowns.items() if pid in keep}
            if ranked.breakdowns is not None
            else None
        ),
        tie_break_trace=tuple(g for g in ranked.tie_break_trace if any(pid in keep for pid in g)),
    )


# --- serialization ----------------------------------------------------------

def _contribution_to_dict(c: FacetContribution) -> dict:
    return {
        "facet_id": c.facet_id,
        "bin_id": c.bin_id,
        "facet_weight": float(c.facet_weight),
        "value_weight": float(c.value_weight),
        "contribution": float(c.contribution),
        "no_bin": c.bin_id is None,
    }


def ranked_to_dict(ranked: RankedList, products: Iterable[Product] = ()) -> dict:
    """JSON-safe view of a ranking, including the per-facet audit trail."""
    titles = {p.product_id: p.title for p in products}
    entries = []
    for position, pid in enumerate(ranked.ordering, start=1):
        entry: dict = {"rank": position, "product_id": pid, "score": ranked.scores[pid]}
        if pid in titles:
            entry["title"] = titles[pid]
        if ranked.breakdowns is not None:
            entry["breakdown"] = [_contribution_to_dict(c) for c in ranked.breakdowns[pid].breakdown]
            entry["coverage"] = ranked.breakdowns[pid].coverage
        entries.append(entry)
    out: dict = {
        "format_version": RANKING_FORMAT_VERSION,
        "method": ranked.method,
        "count": len(ranked.ordering),
        "entries": entries,
        "tie_groups": [list(g) for g in ranked.tie_break_trace],
    }
    if ranked.provenance is not None:
        out["provenance"] = {
            "fingerprint": ranked.provenance.fingerprint,
            "pool_hash": ranked.provenance.pool_hash,
            "denominator_mode": ranked.provenance.denominator_mode,
            "cohort_id": ranked.provenance.cohort_id,
        }
    return out


def dump_ranked(ranked: RankedList, path: str | Path, products: Iterable[Product] = ()) -> None:
    Path(path).write_text(
        json.dumps(ranked_to_dict(ranked, products), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
