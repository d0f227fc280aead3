"""Facet schemas, products, attribute binning and catalog filtering.

A facet is a filterable product attribute (price, RAM size, ...) presented as
an ordered list of selectable value bins. Numeric facets use lower-inclusive /
upper-exclusive bins with exact bounds stored separately from the display
label; categorical facets match canonicalised strings. Binning maps a raw
product attribute to at most one bin; ``None`` means the value falls outside
every bin and is surfaced to callers rather than guessed.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import FormatError, InvalidAttribute, IoError, SchemaError

SCHEMA_FORMAT_VERSION = 1
CATALOG_FORMAT_VERSION = 1

_WS = re.compile(r"\s+")


def canonicalize(value: str) -> str:
    """Normalise a categorical string: trim, case-fold, collapse inner whitespace."""
    return _WS.sub(" ", value.strip()).casefold()


@dataclass(frozen=True)
class ValueBin:
    """One selectable option within a facet.

    Numeric bins cover ``[lower, upper)``; open ends are ``-inf`` / ``+inf``.
    Categorical bins match any of their canonical strings.
    """

    bin_id: str
    label: str
    lower: float | None = None
    upper: float | None = None
    match_values: frozenset[str] = frozenset()

    def contains_number(self, value: float) -> bool:
        assert self.lower is not None and self.upper is not None
        return self.lower <= value < self.upper

    def matches_string(self, canonical: str) -> bool:
        return canonical in self.match_values


def numeric_bin(bin_id: str, label: str, lower: float = -math.inf, upper: float = math.inf) -> ValueBin:
    return ValueBin(bin_id=bin_id, label=label, lower=lower, upper=upper)


def categorical_bin(bin_id: str, label: str, match_values: Iterable[str]) -> ValueBin:
    return ValueBin(bin_id=bin_id, label=label, match_values=frozenset(canonicalize(v) for v in match_values))


@dataclass(frozen=True)
class FacetDef:
    """A facet with its ordered value bins.

    The implicit "any" option is not a bin: it is the absence of a selection
    and never appears in a schema.
    """

    facet_id: str
    label: str
    kind: str  # "categorical" | "numeric_range"
    values: tuple[ValueBin, ...]
    unit: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("categorical", "numeric_range"):
            raise SchemaError(f"facet {self.facet_id!r}: unknown kind {self.kind!r}")
        if not self.values:
            raise SchemaError(f"facet {self.facet_id!r}: at least one bin required")
        ids = [b.bin_id for b in self.values]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"facet {self.facet_id!r}: duplicate bin ids")
        if self.kind == "numeric_range":
            self._check_numeric_bins()
        else:
            self._check_categorical_bins()

    def _check_numeric_bins(self) -> None:
        for b in self.values:
            if b.lower is None or b.upper is None:
                raise SchemaError(f"facet {self.facet_id!r}: bin {b.bin_id!r} lacks numeric bounds")
            if not b.lower < b.upper:
                raise SchemaError(f"facet {self.facet_id!r}: bin {b.bin_id!r} has lower >= upper")
        for prev, nxt in zip(self.values, self.values[1:]):
            if prev.upper > nxt.lower:  # type: ignore[operator]
                raise SchemaError(
                    f"facet {self.facet_id!r}: bins {prev.bin_id!r} and {nxt.bin_id!r} overlap or are unsorted"
                )

    def _check_categorical_bins(self) -> None:
        seen: set[str] = set()
        for b in self.values:
            if b.lower is not None or b.upper is not None:
                raise SchemaError(f"facet {self.facet_id!r}: categorical bin {b.bin_id!r} carries numeric bounds")
            dup = seen & b.match_values
            if dup:
                raise SchemaError(f"facet {self.facet_id!r}: match values {sorted(dup)} appear in several bins")
            seen |= b.match_values

    @property
    def bin_ids(self) -> tuple[str, ...]:
        return tuple(b.bin_id for b in self.values)

    def bin(self, bin_id: str) -> ValueBin:
        for b in self.values:
            if b.bin_id == bin_id:
                return b
        raise KeyError(bin_id)


@dataclass(frozen=True)
class FacetSchema:
    """Ordered facet declarations; the order is the canonical display order."""

    schema_id: str
    facets: tuple[FacetDef, ...]

    def __post_init__(self) -> None:
        ids = [f.facet_id for f in self.facets]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"schema {self.schema_id!r}: duplicate facet ids")

    @property
    def facet_ids(self) -> tuple[str, ...]:
        return tuple(f.facet_id for f in self.facets)

    def facet(self, facet_id: str) -> FacetDef:
        for f in self.facets:
            if f.facet_id == facet_id:
                return f
        raise KeyError(facet_id)

    def __iter__(self) -> Iterator[FacetDef]:
        return iter(self.facets)


@dataclass(frozen=True)
class Product:
    """A catalog item with raw attribute values and a rating summary."""

    product_id: str
    title: str
    attributes: Mapping[str, str | int | float]
    rating_count: int = 0
    rating_sum: float = 0.0
    price_currency: str = "GBP"

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", dict(self.attributes))
        if self.rating_count < 0:
            raise ValueError(f"product {self.product_id!r}: negative rating_count")
        if self.rating_sum < 0:
            raise ValueError(f"product {self.product_id!r}: negative rating_sum")
        if self.rating_sum > 5 * self.rating_count:
            raise ValueError(
                f"product {self.product_id!r}: rating_sum {self.rating_sum} exceeds 5 x rating_count"
            )

    def __hash__(self) -> int:
        return hash(self.product_id)


@dataclass(frozen=True)
class RatingSummary:
    """Average star rating, undefined (None) when there are no ratings."""

    mean_rating: float | None
    rating_count: int


def mean_rating(product: Product) -> RatingSummary:
    """Average rating of a product; mean is None when it has no ratings."""
    if product.rating_count == 0:
        return RatingSummary(mean_rating=None, rating_count=0)
    return RatingSummary(
        mean_rating=product.rating_sum / product.rating_count,
        rating_count=product.rating_count,
    )


def bin_attribute(facet: FacetDef, raw_value: str | int | float) -> str | None:
    """Map a raw attribute value to the id of the bin containing it.

    Returns None when the value falls outside every bin. Raises
    InvalidAttribute when the value's type does not fit the facet kind.
    """
    if facet.kind == "numeric_range":
        if isinstance(raw_value, bool) or not isinstance(raw_value, (int, float)):
            raise InvalidAttribute(
                f"facet {facet.facet_id!r} is numeric but got {type(raw_value).__name__}: {raw_value!r}"
            )
        if not math.isfinite(raw_value):
            raise InvalidAttribute(f"facet {facet.facet_id!r}: non-finite value {raw_value!r}")
        for b in facet.values:
            if b.contains_number(float(raw_value)):
                return b.bin_id
        return None
    if not isinstance(raw_value, str):
        raise InvalidAttribute(
            f"facet {facet.facet_id!r} is categorical but got {type(raw_value).__name__}: {raw_value!r}"
        )
    canonical = canonicalize(raw_value)
    for b in facet.values:
        if b.matches_string(canonical):
            return b.bin_id
    return None


def _has_attribute(product: Product, facet_id: str) -> bool:
    value = product.attributes.get(facet_id)
    if value is None:
        return False
    if isinstance(value, str) and not value.strip():
        return False
    return True


def filter_catalog(products: Iterable[Product], schema: FacetSchema, min_ratings: int = 10) -> list[Product]:
    """Keep products with every facet attribute present and enough ratings.

    Duplicates by (title, attribute map) are dropped, first occurrence wins;
    input order is otherwise preserved. Idempotent.
    """
    if min_ratings < 0:
        raise ValueError("min_ratings must be >= 0")
    kept: list[Product] = []
    seen: set[tuple] = set()
    for product in products:
        if product.rating_count < min_ratings:
            continue
        if not all(_has_attribute(product, fid) for fid in schema.facet_ids):
            continue
        key = (product.title, tuple(sorted(product.attributes.items())))
        if key in seen:
            continue
        seen.add(key)
        kept.append(product)
    return kept


# --- serialization ----------------------------------------------------------

def _bin_to_dict(b: ValueBin, kind: str) -> dict:
    d: dict = {"bin_id": b.bin_id, "label": b.label}
    if kind == "numeric_range":
        d["lower"] = None if b.lower == -math.inf else b.lower
        d["upper"] = None if b.upper == math.inf else b.upper
    else:
        d["match_values"] = sorted(b.match_values)
    return d


def _bin_from_dict(d: dict, kind: str) -> ValueBin:
    if kind == "numeric_range":
        lower = d.get("lower")
        upper = d.get("upper")
        return ValueBin(
            bin_id=d["bin_id"],
            label=d.get("label", d["bin_id"]),
            lower=-math.inf if lower is None else float(lower),
            upper=math.inf if upper is None else float(upper),
        )
    return categorical_bin(d["bin_id"], d.get("label", d["bin_id"]), d.get("match_values", ()))


def schema_to_dict(schema: FacetSchema) -> dict:
    return {
        "format_version": SCHEMA_FORMAT_VERSION,
        "schema_id": schema.schema_id,
        "facets": [
            {
                "facet_id": f.facet_id,
                "label": f.label,
                "kind": f.kind,
                "unit": f.unit,
                "values": [_bin_to_dict(b, f.kind) for b in f.values],
            }
            for f in schema.facets
        ],
    }


def schema_from_dict(data: dict) -> FacetSchema:
    version = data.get("format_version", SCHEMA_FORMAT_VERSION)
    if version != SCHEMA_FORMAT_VERSION:
        raise FormatError(f"unsupported schema format_version {version!r}")
    facets = tuple(
        FacetDef(
            facet_id=f["facet_id"],
            label=f.get("label", f["facet_id"]),
            kind=f["kind"],
            unit=f.get("unit"),
            values=tuple(_bin_from_dict(b, f["kind"]) for b in f["values"]),
        )
        for f in data["facets"]
    )
    return FacetSchema(schema_id=data.get("schema_id", "schema"), facets=facets)


def load_schema(path: str | Path) -> FacetSchema:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read schema file {path}: {exc}") from exc
    return schema_from_dict(json.loads(text))


def dump_schema(schema: FacetSchema, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema_to_dict(schema), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def product_to_dict(product: Product) -> dict:
    return {
        "product_id": product.product_id,
        "title": product.title,
        "attributes": dict(product.attributes),
        "rating_count": product.rating_count,
        "rating_sum": product.rating_sum,
        "price_currency": product.price_currency,
    }


def product_from_dict(d: dict) -> Product:
    return Product(
        product_id=d["product_id"],
        title=d.get("title", d["product_id"]),
        attributes=d.get("attributes", {}),
        rating_count=int(d.get("rating_count", 0)),
        rating_sum=float(d.get("rating_sum", 0.0)),
        price_currency=d.get("price_currency", "GBP"),
    )


def load_catalog(path: str | Path) -> list[Product]:
    """Read a JSON Lines catalog: optional header line, then one product per line."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read catalog file {path}: {exc}") from exc
    return parse_catalog_lines(lines)


def parse_catalog_lines(lines: Iterable[str]) -> list[Product]:
    products: list[Product] = []
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"catalog line {i + 1}: invalid JSON: {exc}") from exc
        if "product_id" not in d and "format_version" in d:
            if d["format_version"] != CATALOG_FORMAT_VERSION:
                raise FormatError(f"unsupported catalog format_version {d['format_version']!r}")
            continue
        products.append(product_from_dict(d))
    return products


def dump_catalog(products: Iterable[Product], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format_version": CATALOG_FORMAT_VERSION, "kind": "catalog"}) + "\n")
        for p in products:
            fh.write(json.dumps(product_to_dict(p), sort_keys=True) + "\n")
