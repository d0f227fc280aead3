"""Needs-driven faceted product ranking.

Products are scored by summing, over the facets of a schema, the product of
two popularity weights derived from users' facet selections: how popular
the facet is, and how popular the bin holding the product's attribute value
is. No post-purchase data (ratings, reviews, clicks) is needed, so new
products rank on equal footing; a rating-based baseline is included for
comparison.
"""

from .catalog import (
    FacetDef,
    FacetSchema,
    Product,
    RatingSummary,
    ValueBin,
    bin_attribute,
    categorical_bin,
    filter_catalog,
    mean_rating,
    numeric_bin,
)
from .errors import UndrError
from .needslog import (
    ANY,
    ADVANCED_COHORT,
    ALL_COHORT,
    BASIC_COHORT,
    CohortSpec,
    SelectionRecord,
    SessionAggregator,
    assign_cohort,
    cohort_partition,
    parse_records,
)
from .ranking import (
    METHOD_RATING,
    METHOD_UNDR,
    RankedList,
    ScoredProduct,
    rank_by_rating,
    rank_undr,
    top_k,
    undr_score,
)
from .stats import (
    TestResult,
    binomial_test_ge,
    bonferroni,
    mann_whitney_u,
    wilcoxon_signed_rank,
)
from .weights import (
    SELECTION_SHARE,
    USER_SHARE,
    WeightTable,
    build_weight_table,
    compute_facet_weight,
    compute_value_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ANY",
    "ADVANCED_COHORT",
    "ALL_COHORT",
    "BASIC_COHORT",
    "CohortSpec",
    "FacetDef",
    "FacetSchema",
    "METHOD_RATING",
    "METHOD_UNDR",
    "Product",
    "RankedList",
    "RatingSummary",
    "ScoredProduct",
    "SelectionRecord",
    "SessionAggregator",
    "TestResult",
    "UndrError",
    "ValueBin",
    "WeightTable",
    "SELECTION_SHARE",
    "USER_SHARE",
    "assign_cohort",
    "bin_attribute",
    "binomial_test_ge",
    "bonferroni",
    "build_weight_table",
    "categorical_bin",
    "cohort_partition",
    "compute_facet_weight",
    "compute_value_weights",
    "filter_catalog",
    "mann_whitney_u",
    "mean_rating",
    "numeric_bin",
    "parse_records",
    "rank_by_rating",
    "rank_undr",
    "top_k",
    "undr_score",
    "wilcoxon_signed_rank",
]
