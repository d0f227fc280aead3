from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from undr import demo
from undr.catalog import filter_catalog
from undr.errors import CatalogMismatch, InfeasibleSpec
from undr.evalharness import (
    FacetMarginal,
    SyntheticPoolSpec,
    compare_rankings,
    generate_catalog,
    generate_pool,
    kendall_tau_b,
    reference_pool_spec,
    reproduce_table1,
)
from undr.needslog import record_to_dict
from undr.ranking import RankedList, rank_by_rating, rank_undr
from undr.weights import build_weight_table

from genrandom import random_catalog, random_records, random_schema
from oracles import naive_kendall_tau_b


class TestGeneratePool:
    def test_reference_marginals_reproduce_weight_column(self):
        pool = generate_pool(reference_pool_spec(seed=4))
        report = reproduce_table1(pool)
        assert report.ok, report.render()

    def test_marginals_exact_by_recount(self, laptop_schema):
        spec = reference_pool_spec(seed=9)
        pool = generate_pool(spec)
        assert len(pool) == spec.total_users
        for facet_id, marginal in spec.marginals.items():
            any_count = sum(1 for r in pool if r.is_any(facet_id))
            assert any_count == marginal.any_count

    def test_explicit_bin_counts_exact(self):
        schema = demo.laptop_schema()
        marginals = {}
        for facet in schema:
            counts = {b: 0 for b in facet.bin_ids}
            counts[facet.bin_ids[0]] = 6
            counts[facet.bin_ids[-1]] = 2
            marginals[facet.facet_id] = FacetMarginal(any_count=2, bin_counts=counts)
        spec = SyntheticPoolSpec(schema=schema, total_users=10, marginals=marginals, seed=1)
        pool = generate_pool(spec)
        for facet in schema:
            tally = {b: 0 for b in facet.bin_ids}
            for record in pool:
                sel = record.selections[facet.facet_id]
                if not record.is_any(facet.facet_id):
                    for b in sel:
                        tally[b] += 1
            assert tally == dict(marginals[facet.facet_id].bin_counts)

    def test_all_any_spec(self):
        schema = demo.laptop_schema()
        spec = SyntheticPoolSpec(
            schema=schema,
            total_users=5,
            marginals={fid: FacetMarginal(any_count=5) for fid in schema.facet_ids},
            seed=0,
        )
        pool = generate_pool(spec)
        assert all(r.is_any(fid) for r in pool for fid in schema.facet_ids)

    def test_same_seed_identical_pools(self):
        a = generate_pool(reference_pool_spec(seed=42))
        b = generate_pool(reference_pool_spec(seed=42))
        assert [record_to_dict(r) for r in a] == [record_to_dict(r) for r in b]

    def test_different_seeds_differ(self):
        a = generate_pool(reference_pool_spec(seed=1))
        b = generate_pool(reference_pool_spec(seed=2))
        assert [record_to_dict(r) for r in a] != [record_to_dict(r) for r in b]

    def test_infeasible_any_count(self):
        schema = demo.laptop_schema()
        marginals = {fid: FacetMarginal(any_count=0) for fid in schema.facet_ids}
        marginals["price"] = FacetMarginal(any_count=11)
        with pytest.raises(InfeasibleSpec):
            SyntheticPoolSpec(schema=schema, total_users=10, marginals=marginals)

    def test_infeasible_bin_counts(self):
        schema = demo.laptop_schema()
        marginals = {fid: FacetMarginal(any_count=0) for fid in schema.facet_ids}
        facet = schema.facets[0]
        marginals[facet.facet_id] = FacetMarginal(
            any_count=0, bin_counts={facet.bin_ids[0]: 3}  # sums to 3, need 10
        )
        with pytest.raises(InfeasibleSpec):
            SyntheticPoolSpec(schema=schema, total_users=10, marginals=marginals)

    def test_infeasible_advanced_users(self):
        schema = demo.laptop_schema()
        with pytest.raises(InfeasibleSpec):
            SyntheticPoolSpec(
                schema=schema,
                total_users=5,
                marginals={fid: FacetMarginal(any_count=0) for fid in schema.facet_ids},
                advanced_users=6,
            )

    def test_missing_facet_marginal(self):
        schema = demo.laptop_schema()
        with pytest.raises(InfeasibleSpec):
            SyntheticPoolSpec(schema=schema, total_users=5, marginals={"price": FacetMarginal(0)})


class TestGenerateCatalog:
    def test_182_products_survive_standard_filter(self, laptop_schema):
        catalog = generate_catalog(182, laptop_schema, seed=0)
        assert len(catalog) == 182
        assert filter_catalog(catalog, laptop_schema, 10) == catalog

    def test_zero_products(self, laptop_schema):
        assert generate_catalog(0, laptop_schema, seed=0) == []

    def test_negative_rejected(self, laptop_schema):
        with pytest.raises(ValueError):
            generate_catalog(-1, laptop_schema, seed=0)

    def test_seed_contract(self, laptop_schema):
        a = generate_catalog(25, laptop_schema, seed=1)
        b = generate_catalog(25, laptop_schema, seed=1)
        c = generate_catalog(25, laptop_schema, seed=2)
        assert a == b
        assert a != c
        assert filter_catalog(c, laptop_schema, 10) == c

    def test_attributes_always_binnable_or_present(self, laptop_schema):
        from undr.catalog import bin_attribute

        for product in generate_catalog(40, laptop_schema, seed=5):
            for facet in laptop_schema:
                assert bin_attribute(facet, product.attributes[facet.facet_id]) is not None


class TestKendallTau:
    def test_identity(self):
        assert kendall_tau_b([1, 2, 3], [1, 2, 3]) == 1.0

    def test_reversal(self):
        assert kendall_tau_b([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    @given(
        pairs=st.lists(
            st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=2, max_size=40
        )
    )
    def test_matches_naive_concordance_oracle(self, pairs):
        x = [float(a) for a, _ in pairs]
        y = [float(b) for _, b in pairs]
        assert kendall_tau_b(x, y) == pytest.approx(naive_kendall_tau_b(x, y), abs=1e-12)


class TestCompareRankings:
    def make_pair(self, seed=13, n=10):
        rng = random.Random(seed)
        schema = random_schema(rng)
        records = random_records(rng, schema, 25)
        catalog = random_catalog(rng, schema, n)
        table = build_weight_table(records, schema, min_pool=0)
        return rank_undr(catalog, table, schema), rank_by_rating(catalog)

    def test_identical_lists(self):
        a, _ = self.make_pair()
        report = compare_rankings(a, a, k=5)
        assert report.jaccard_top_k == 1.0
        assert report.kendall_tau == 1.0
        assert all(d == 0 for d in report.score_deltas.values())

    def test_reversed_list_tau_minus_one(self):
        a, _ = self.make_pair()
        reversed_list = RankedList(
            method=a.method, ordering=tuple(reversed(a.ordering)), scores=dict(a.scores)
        )
        assert compare_rankings(a, reversed_list, k=0).kendall_tau == -1.0

    @settings(max_examples=30)
    @given(seed=st.integers(0, 10**6))
    def test_tau_matches_concordance_oracle(self, seed):
        a, b = self.make_pair(seed=seed, n=10)
        report = compare_rankings(a, b, k=5)
        position_b = {pid: i for i, pid in enumerate(b.ordering)}
        x = [float(i) for i in range(len(a.ordering))]
        y = [float(position_b[pid]) for pid in a.ordering]
        assert report.kendall_tau == pytest.approx(naive_kendall_tau_b(x, y), abs=1e-12)

    def test_symmetry_up_to_tau_sign(self):
        a, b = self.make_pair(seed=77)
        ab = compare_rankings(a, b, k=5)
        ba = compare_rankings(b, a, k=5)
        assert ab.jaccard_top_k == ba.jaccard_top_k
        assert ab.kendall_tau == pytest.approx(ba.kendall_tau)  # tau is symmetric
        assert ab.score_deltas == {pid: -d for pid, d in ba.score_deltas.items()}

    def test_catalog_mismatch(self):
        a, _ = self.make_pair(seed=5)
        other = RankedList(method="undr", ordering=("zz",), scores={"zz": 1.0})
        with pytest.raises(CatalogMismatch):
            compare_rankings(a, other, k=3)

    def test_report_serializes_deterministically(self):
        a, b = self.make_pair(seed=21)
        d = compare_rankings(a, b, k=5).to_dict()
        assert list(d["score_deltas"]) == sorted(d["score_deltas"])
        assert isinstance(d["summary"], str)


class TestReproduceTable1:
    def test_diff_table_on_failure(self):
        pool = generate_pool(reference_pool_spec(seed=0))
        bad_expected = dict(demo.REFERENCE_FACET_WEIGHTS)
        bad_expected["price"] = 0.55
        report = reproduce_table1(pool, expected=bad_expected)
        assert not report.ok
        rendered = report.render()
        assert "FAIL" in rendered
        assert "MISMATCH" in rendered
        failing = [r for r in report.rows if not r.ok]
        assert [r.facet_id for r in failing] == ["price"]

    def test_reference_rows_spot_checks(self):
        pool = generate_pool(reference_pool_spec(seed=0))
        report = reproduce_table1(pool)
        by_facet = {r.facet_id: r for r in report.rows}
        assert by_facet["price"].expected == 0.91
        assert by_facet["battery_life"].expected == 0.86
        assert by_facet["cpu_cores"].expected == 0.55
        assert report.ok
