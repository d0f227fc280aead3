from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given, strategies as st

from undr.catalog import (
    FacetDef,
    FacetSchema,
    Product,
    bin_attribute,
    canonicalize,
    categorical_bin,
    dump_catalog,
    dump_schema,
    filter_catalog,
    load_catalog,
    load_schema,
    mean_rating,
    numeric_bin,
    parse_catalog_lines,
    schema_from_dict,
    schema_to_dict,
)
from undr.errors import FormatError, InvalidAttribute, SchemaError

from genrandom import random_catalog, random_schema


def make_product(pid="p1", attributes=None, rating_count=20, rating_sum=80.0, title=None):
    return Product(
        product_id=pid,
        title=title or f"title-{pid}",
        attributes=attributes or {},
        rating_count=rating_count,
        rating_sum=rating_sum,
    )


class TestBinAttribute:
    def test_screen_size_14_9_lands_in_middle_bin(self, laptop_schema):
        facet = laptop_schema.facet("screen_size")
        assert bin_attribute(facet, 14.9) == "14.1-16"

    def test_lower_bound_is_inclusive(self, laptop_schema):
        facet = laptop_schema.facet("screen_size")
        assert bin_attribute(facet, 12.0) == "12-14"
        assert bin_attribute(facet, 14.1) == "14.1-16"

    def test_upper_bound_is_exclusive(self):
        facet = FacetDef("f", "f", "numeric_range", (numeric_bin("low", "low", 0, 100),))
        assert bin_attribute(facet, 99.999) == "low"
        assert bin_attribute(facet, 100.0) is None

    def test_out_of_range_returns_no_bin(self):
        facet = FacetDef("f", "f", "numeric_range", (numeric_bin("only", "only", 0, 100),))
        assert bin_attribute(facet, 999) is None

    def test_numeric_facet_rejects_strings_and_bools(self, laptop_schema):
        facet = laptop_schema.facet("screen_size")
        with pytest.raises(InvalidAttribute):
            bin_attribute(facet, "fifteen")
        with pytest.raises(InvalidAttribute):
            bin_attribute(facet, True)
        with pytest.raises(InvalidAttribute):
            bin_attribute(facet, math.nan)

    def test_categorical_matches_after_canonicalization(self, laptop_schema):
        facet = laptop_schema.facet("operating_system")
        assert bin_attribute(facet, "  Windows   11 ") == "windows"
        assert bin_attribute(facet, "TempleOS") is None

    def test_categorical_rejects_numbers(self, laptop_schema):
        with pytest.raises(InvalidAttribute):
            bin_attribute(laptop_schema.facet("brand"), 42)

    @given(value=st.floats(min_value=-1000, max_value=5000, allow_nan=False))
    def test_numeric_bins_partition_covered_range(self, value):
        # every laptop numeric facet covers the whole real line: exactly one bin matches
        from undr import demo

        for facet in demo.laptop_schema():
            if facet.kind != "numeric_range":
                continue
            hits = [b.bin_id for b in facet.values if b.lower <= value < b.upper]
            assert len(hits) == 1
            assert bin_attribute(facet, value) == hits[0]


class TestCanonicalize:
    @pytest.mark.parametrize(
        "raw,expected",
        [("  HP ", "hp"), ("Mac  OS", "mac os"), ("WINDOWS\t10", "windows 10")],
    )
    def test_examples(self, raw, expected):
        assert canonicalize(raw) == expected


class TestSchemaInvariants:
    def test_duplicate_bin_ids_rejected(self):
        with pytest.raises(SchemaError):
            FacetDef("f", "f", "numeric_range", (numeric_bin("a", "a", 0, 1), numeric_bin("a", "a", 1, 2)))

    def test_overlapping_bins_rejected(self):
        with pytest.raises(SchemaError):
            FacetDef("f", "f", "numeric_range", (numeric_bin("a", "a", 0, 5), numeric_bin("b", "b", 4, 9)))

    def test_unsorted_bins_rejected(self):
        with pytest.raises(SchemaError):
            FacetDef("f", "f", "numeric_range", (numeric_bin("b", "b", 5, 9), numeric_bin("a", "a", 0, 5)))

    def test_empty_interval_rejected(self):
        with pytest.raises(SchemaError):
            FacetDef("f", "f", "numeric_range", (numeric_bin("a", "a", 3, 3),))

    def test_facet_needs_at_least_one_bin(self):
        with pytest.raises(SchemaError):
            FacetDef("f", "f", "numeric_range", ())

    def test_categorical_match_values_disjoint(self):
        with pytest.raises(SchemaError):
            FacetDef(
                "f",
                "f",
                "categorical",
                (categorical_bin("a", "a", ("x", "y")), categorical_bin("b", "b", ("y",))),
            )

    def test_duplicate_facet_ids_rejected(self):
        facet = FacetDef("f", "f", "numeric_range", (numeric_bin("a", "a", 0, 1),))
        with pytest.raises(SchemaError):
            FacetSchema("s", (facet, facet))

    def test_open_ended_first_and_last_bins_allowed(self):
        FacetDef(
            "f",
            "f",
            "numeric_range",
            (numeric_bin("lo", "lo", -math.inf, 0), numeric_bin("hi", "hi", 0, math.inf)),
        )


class TestProduct:
    def test_rating_sum_bounded_by_five_stars(self):
        with pytest.raises(ValueError):
            make_product(rating_count=10, rating_sum=51.0)

    def test_mean_rating_simple(self):
        summary = mean_rating(make_product(rating_count=10, rating_sum=45.0))
        assert summary.mean_rating == 4.5
        assert summary.rating_count == 10

    def test_mean_rating_undefined_without_ratings(self):
        summary = mean_rating(make_product(rating_count=0, rating_sum=0.0))
        assert summary.mean_rating is None

    def test_mean_rating_at_upper_bound(self):
        summary = mean_rating(make_product(rating_count=10, rating_sum=50.0))
        assert summary.mean_rating == 5.0


class TestFilterCatalog:
    @pytest.fixture
    def two_facet_schema(self):
        return FacetSchema(
            "s",
            (
                FacetDef("size", "size", "numeric_range", (numeric_bin("all", "all", -math.inf, math.inf),)),
                FacetDef("color", "color", "categorical", (categorical_bin("red", "red", ("red",)),)),
            ),
        )

    def test_missing_attribute_excluded(self, two_facet_schema):
        complete = make_product("p1", {"size": 5, "color": "red"})
        missing = make_product("p2", {"size": 5})
        blank = make_product("p3", {"size": 5, "color": "  "})
        assert filter_catalog([complete, missing, blank], two_facet_schema, 0) == [complete]

    def test_min_ratings_threshold(self, two_facet_schema):
        nine = make_product("p1", {"size": 1, "color": "red"}, rating_count=9, rating_sum=40.0)
        ten = make_product("p2", {"size": 1, "color": "red"}, rating_count=10, rating_sum=40.0)
        assert filter_catalog([nine, ten], two_facet_schema, 10) == [ten]

    def test_min_ratings_zero_keeps_complete_products(self, two_facet_schema):
        product = make_product("p1", {"size": 1, "color": "red"}, rating_count=0, rating_sum=0.0)
        assert filter_catalog([product], two_facet_schema, 0) == [product]

    def test_duplicates_dropped_keeping_first(self, two_facet_schema):
        a = make_product("p1", {"size": 1, "color": "red"}, title="same")
        b = make_product("p2", {"size": 1, "color": "red"}, title="same")
        c = make_product("p3", {"size": 2, "color": "red"}, title="same")
        assert filter_catalog([a, b, c], two_facet_schema, 0) == [a, c]

    def test_negative_min_ratings_rejected(self, two_facet_schema):
        with pytest.raises(ValueError):
            filter_catalog([], two_facet_schema, -1)

    @given(seed=st.integers(0, 10**6), min_ratings=st.integers(0, 50))
    def test_idempotent(self, seed, min_ratings):
        rng = random.Random(seed)
        schema = random_schema(rng)
        catalog = random_catalog(rng, schema, rng.randint(0, 20))
        once = filter_catalog(catalog, schema, min_ratings)
        assert filter_catalog(once, schema, min_ratings) == once

    @given(seed=st.integers(0, 10**6))
    def test_result_size_non_increasing_in_min_ratings(self, seed):
        rng = random.Random(seed)
        schema = random_schema(rng)
        catalog = random_catalog(rng, schema, 15)
        sizes = [len(filter_catalog(catalog, schema, m)) for m in range(0, 200, 25)]
        assert sizes == sorted(sizes, reverse=True)


class TestSerialization:
    def test_schema_round_trip(self, laptop_schema, tmp_path):
        path = tmp_path / "schema.json"
        dump_schema(laptop_schema, path)
        assert load_schema(path) == laptop_schema

    def test_schema_format_version_checked(self, laptop_schema):
        data = schema_to_dict(laptop_schema)
        data["format_version"] = 99
        with pytest.raises(FormatError):
            schema_from_dict(data)

    def test_catalog_round_trip(self, laptop_schema, tmp_path):
        rng = random.Random(7)
        from undr.evalharness import generate_catalog

        catalog = generate_catalog(12, laptop_schema, seed=rng.randint(0, 99))
        path = tmp_path / "catalog.jsonl"
        dump_catalog(catalog, path)
        assert load_catalog(path) == catalog

    def test_catalog_header_version_mismatch(self):
        lines = [json.dumps({"format_version": 42})]
        with pytest.raises(FormatError):
            parse_catalog_lines(lines)

    def test_catalog_bad_json_line(self):
        with pytest.raises(FormatError):
            parse_catalog_lines(["{not json"])
