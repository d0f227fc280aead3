"""Synthetic data generation and method comparison.

The original selection pool and product catalog are not shipped, so the
harness reconstructs stand-ins: a pool generator that hits requested
marginal counts exactly, and a catalog generator whose products all survive
the standard filter. On top of those it quantifies how two rankings differ
(top-k overlap, Kendall tau-b, per-product score deltas) and checks that
the weights engine recovers the bundled reference survey's facet weight
column from its any-counts.

Everything here is deterministic under a fixed seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import demo
from .catalog import FacetSchema, Product, ValueBin
from .errors import CatalogMismatch, InfeasibleSpec
from .needslog import (
    ANY,
    DEFAULT_TASK_LIST,
    Selection,
    SelectionRecord,
    TaskList,
)
from .ranking import RankedList
from .weights import SELECTION_SHARE, build_weight_table


# --- synthetic selection pools ------------------------------------------------

@dataclass(frozen=True)
class FacetMarginal:
    """Target counts for one facet: how many users pick "any", and optionally
    exact per-bin user counts (single selection per user). When bin counts
    are omitted they are drawn from a geometrically skewed distribution."""

    any_count: int
    bin_counts: Mapping[str, int] | None = None
    skew: float = 0.55  # geometric decay of bin popularity when drawing


@dataclass(frozen=True)
class SyntheticPoolSpec:
    """Recipe for a selection-record pool with exact marginals."""

    schema: FacetSchema
    total_users: int
    marginals: Mapping[str, FacetMarginal]
    advanced_users: int = 0
    task_list: TaskList = DEFAULT_TASK_LIST
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "marginals", dict(self.marginals))
        if self.total_users < 0:
            raise InfeasibleSpec("total_users must be >= 0")
        if not 0 <= self.advanced_users <= self.total_users:
            raise InfeasibleSpec(
                f"advanced_users {self.advanced_users} outside 0..{self.total_users}"
            )
        if set(self.marginals) != set(self.schema.facet_ids):
            raise InfeasibleSpec("marginals must cover exactly the schema's facets")
        for facet in self.schema:
            marginal = self.marginals[facet.facet_id]
            if not 0 <= marginal.any_count <= self.total_users:
                raise InfeasibleSpec(
                    f"facet {facet.facet_id!r}: any_count {marginal.any_count} outside 0..{self.total_users}"
                )
            if marginal.bin_counts is not None:
                unknown = set(marginal.bin_counts) - set(facet.bin_ids)
                if unknown:
                    raise InfeasibleSpec(f"facet {facet.facet_id!r}: unknown bins {sorted(unknown)}")
                if any(c < 0 for c in marginal.bin_counts.values()):
                    raise InfeasibleSpec(f"facet {facet.facet_id!r}: negative bin count")
                expected = self.total_users - marginal.any_count
                if sum(marginal.bin_counts.values()) != expected:
                    raise InfeasibleSpec(
                        f"facet {facet.facet_id!r}: bin counts sum to "
                        f"{sum(marginal.bin_counts.values())}, need {expected}"
                    )


def _drawn_bin_counts(facet_bins: Sequence[str], users: int, skew: float, rng: random.Random) -> dict[str, int]:
    """Single-select counts over the bins, geometrically skewed, summing to ``users``."""
    weights = [skew**i for i in range(len(facet_bins))]
    counts = {b: 0 for b in facet_bins}
    for _ in range(users):
        counts[rng.choices(facet_bins, weights=weights)[0]] += 1
    return counts


def generate_pool(spec: SyntheticPoolSpec) -> list[SelectionRecord]:
    """A record pool hitting the spec's marginals exactly; deterministic per seed."""
    rng = random.Random(spec.seed)
    n = spec.total_users
    basic_tasks = [t for t in spec.task_list.tasks if t not in spec.task_list.advanced]
    advanced_tasks = sorted(spec.task_list.advanced)

    advanced_members = set(rng.sample(range(n), spec.advanced_users))
    tasks_per_user: list[frozenset[str]] = []
    for i in range(n):
        if i in advanced_members:
            picked = set(rng.sample(advanced_tasks, rng.randint(1, min(2, len(advanced_tasks)))))
            picked.update(rng.sample(basic_tasks, rng.randint(0, 2)))
        else:
            picked = set(rng.sample(basic_tasks, rng.randint(0, 3)))
        tasks_per_user.append(frozenset(picked))

    selections_per_user: list[dict[str, Selection]] = [dict() for _ in range(n)]
    for facet in spec.schema:
        marginal = spec.marginals[facet.facet_id]
        users_specific = n - marginal.any_count
        any_members = set(rng.sample(range(n), marginal.any_count))
        bin_counts = (
            dict(marginal.bin_counts)
            if marginal.bin_counts is not None
            else _drawn_bin_counts(facet.bin_ids, users_specific, marginal.skew, rng)
        )
        pool = [bin_id for bin_id, count in bin_counts.items() for _ in range(count)]
        rng.shuffle(pool)
        it = iter(pool)
        for i in range(n):
            if i in any_members:
                selections_per_user[i][facet.facet_id] = ANY
            else:
                selections_per_user[i][facet.facet_id] = frozenset({next(it)})

    return [
        SelectionRecord(
            record_id=f"u{i:04d}",
            selections=selections_per_user[i],
            usage_tasks=tasks_per_user[i],
            domain_knowledge=rng.randint(3, 5) if i in advanced_members else rng.randint(1, 5),
            source="survey",
        )
        for i in range(n)
    ]


def reference_pool_spec(seed: int = 0) -> SyntheticPoolSpec:
    """Pool spec matching the bundled reference survey's facet-level marginals.

    Any-counts and the basic/advanced split are fixed to the reference
    numbers; per-bin counts were not published and are drawn (skewed).
    """
    schema = demo.laptop_schema()
    return SyntheticPoolSpec(
        schema=schema,
        total_users=demo.REFERENCE_TOTAL_USERS,
        marginals={
            fid: FacetMarginal(any_count=count) for fid, count in demo.REFERENCE_ANY_COUNTS.items()
        },
        advanced_users=demo.REFERENCE_ADVANCED_USERS,
        seed=seed,
    )


# --- synthetic catalogs -------------------------------------------------------

def _sample_in_bin(bin_: ValueBin, rng: random.Random) -> float:
    lo = bin_.lower if bin_.lower is not None and math.isfinite(bin_.lower) else None
    hi = bin_.upper if bin_.upper is not None and math.isfinite(bin_.upper) else None
    if lo is None and hi is None:
        return round(rng.uniform(0, 100), 1)
    if lo is None:
        assert hi is not None
        lo = hi - 10
    if hi is None:
        hi = lo + 10
    value = round(rng.uniform(lo, hi), 1)
    # keep the value inside the half-open interval after rounding
    return min(max(value, lo), round(hi - 0.1, 2))


def generate_catalog(n: int, schema: FacetSchema, seed: int = 0) -> list[Product]:
    """Synthetic products with complete attributes and >= 10 ratings each,
    so the whole catalog survives the standard filter."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = random.Random(seed)
    products: list[Product] = []
    for i in range(n):
        attributes: dict[str, str | float] = {}
        for facet in schema:
            bin_ = rng.choice(facet.values)
            if facet.kind == "numeric_range":
                attributes[facet.facet_id] = _sample_in_bin(bin_, rng)
            else:
                attributes[facet.facet_id] = rng.choice(sorted(bin_.match_values))
        rating_count = rng.randint(10, 1500)
        mean_tenths = rng.randint(25, 50)  # 2.5 .. 5.0 stars in 0.1 steps; ties are common
        rating_sum = min(round(rating_count * mean_tenths / 10), 5 * rating_count)
        products.append(
            Product(
                product_id=f"p{i:04d}",
                title=f"Laptop {i:04d}",
                attributes=attributes,
                rating_count=rating_count,
                rating_sum=float(rating_sum),
                price_currency="GBP",
            )
        )
    return products


# --- ranking comparison ---------------------------------------------------------

def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-aware Kendall rank correlation via merge-sort inversion counting."""
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    n = len(x)
    if n < 2:
        return 1.0 if n == 1 else 0.0
    order = sorted(range(n), key=lambda i: (x[i], y[i]))
    xs = [x[i] for i in order]
    ys = [y[i] for i in order]

    def tie_pairs(values: Sequence[float]) -> int:
        total = 0
        counts: dict[float, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        for t in counts.values():
            total += t * (t - 1) // 2
        return total

    n0 = n * (n - 1) // 2
    t_x = tie_pairs(xs)
    t_y = tie_pairs(ys)
    t_xy = tie_pairs([(a, b) for a, b in zip(xs, ys)])  # type: ignore[arg-type]

    # discordant pairs = inversions in ys once sorted by (x, y)
    def count_inversions(values: list[float]) -> int:
        if len(values) < 2:
            return 0
        mid = len(values) // 2
        left = values[:mid]
        right = values[mid:]
        inv = count_inversions(left) + count_inversions(right)
        merged = []
        i = j = 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                inv += len(left) - i
                merged.append(right[j])
                j += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        values[:] = merged
        return inv

    discordant = count_inversions(list(ys))
    concordant = n0 - t_x - t_y + t_xy - discordant
    denom = math.sqrt((n0 - t_x) * (n0 - t_y))
    if denom == 0:
        return 0.0
    return (concordant - discordant) / denom


@dataclass(frozen=True)
class ComparisonReport:
    """How two rankings over the same catalog differ."""

    method_a: str
    method_b: str
    k: int
    jaccard_top_k: float
    kendall_tau: float
    score_deltas: Mapping[str, float]
    summary: str

    def to_dict(self) -> dict:
        return {
            "method_a": self.method_a,
            "method_b": self.method_b,
            "k": self.k,
            "jaccard_top_k": self.jaccard_top_k,
            "kendall_tau": self.kendall_tau,
            "score_deltas": {pid: self.score_deltas[pid] for pid in sorted(self.score_deltas)},
            "summary": self.summary,
        }


def compare_rankings(a: RankedList, b: RankedList, k: int = 5) -> ComparisonReport:
    """Top-k Jaccard overlap, full-list Kendall tau-b and score deltas."""
    if set(a.ordering) != set(b.ordering):
        raise CatalogMismatch("ranked lists do not cover the same products")
    if k < 0:
        raise ValueError("k must be >= 0")
    top_a = set(a.ordering[:k])
    top_b = set(b.ordering[:k])
    union = top_a | top_b
    jaccard = len(top_a & top_b) / len(union) if union else 1.0

    position_b = {pid: i for i, pid in enumerate(b.ordering)}
    x = [float(i) for i in range(len(a.ordering))]
    y = [float(position_b[pid]) for pid in a.ordering]
    tau = kendall_tau_b(x, y)

    deltas = {pid: a.scores[pid] - b.scores[pid] for pid in a.ordering}
    summary = (
        f"{a.method} vs {b.method}: top-{k} overlap {jaccard:.2f}, "
        f"kendall tau-b {tau:.3f} over {len(a.ordering)} products"
    )
    return ComparisonReport(
        method_a=a.method,
        method_b=b.method,
        k=k,
        jaccard_top_k=jaccard,
        kendall_tau=tau,
        score_deltas=deltas,
        summary=summary,
    )


# --- reference-survey check -----------------------------------------------------

@dataclass(frozen=True)
class Table1Row:
    facet_id: str
    any_count: int
    weight: float
    expected: float
    ok: bool


@dataclass(frozen=True)
class Table1Report:
    """Result of recovering the reference survey's facet weight column."""

    rows: tuple[Table1Row, ...]
    tolerance: float
    ok: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ok", all(row.ok for row in self.rows))

    def render(self) -> str:
        lines = [f"{'facet':20s} {'any':>5s} {'weight':>8s} {'expected':>9s} {'ok':>4s}"]
        for row in self.rows:
            lines.append(
                f"{row.facet_id:20s} {row.any_count:5d} {row.weight:8.4f} "
                f"{row.expected:9.2f} {'ok' if row.ok else 'FAIL':>4s}"
            )
        lines.append("all facets within tolerance" if self.ok else "MISMATCH: see rows above")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "ok": self.ok,
            "rows": [
                {
                    "facet_id": r.facet_id,
                    "any_count": r.any_count,
                    "weight": r.weight,
                    "expected": r.expected,
                    "ok": r.ok,
                }
                for r in self.rows
            ],
        }


def reproduce_table1(
    pool: Sequence[SelectionRecord],
    schema: FacetSchema | None = None,
    expected: Mapping[str, float] | None = None,
    tolerance: float = 0.005,
) -> Table1Report:
    """Check that facet weights computed from the pool land within tolerance
    of the reference column (two-decimal rounding band)."""
    schema = schema or demo.laptop_schema()
    expected = expected or demo.REFERENCE_FACET_WEIGHTS
    table = build_weight_table(pool, schema, mode=SELECTION_SHARE)
    rows = []
    for facet in schema:
        fw = table.facets[facet.facet_id]
        target = expected[facet.facet_id]
        weight = float(fw.weight)
        rows.append(
            Table1Row(
                facet_id=facet.facet_id,
                any_count=table.total_users - fw.users_specific,
                weight=weight,
                expected=target,
                ok=abs(weight - target) <= tolerance,
            )
        )
    return Table1Report(rows=tuple(rows), tolerance=tolerance)
