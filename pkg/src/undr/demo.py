"""Bundled laptop demo domain: facet schema and reference survey marginals.

The schema covers the ten common laptop attributes. The reference survey is
a marginal snapshot of a 277-respondent needs elicitation: per facet, how
many respondents picked "any", and the two-decimal facet weight column that
the weights engine is expected to recover from those counts. Value-level
counts were not published with the snapshot, so pool reconstruction draws
them from a skewed distribution (exactly which counts are fixed vs drawn is
stated in the harness report).
"""

from __future__ import annotations

import math

from .catalog import FacetDef, FacetSchema, categorical_bin, numeric_bin


def laptop_schema() -> FacetSchema:
    """Facet schema for the laptop demo shop."""
    inf = math.inf
    return FacetSchema(
        schema_id="laptops-v1",
        facets=(
            FacetDef(
                facet_id="price",
                label="Price",
                kind="numeric_range",
                unit="GBP",
                values=(
                    numeric_bin("lt300", "< 300", -inf, 300),
                    numeric_bin("300-500", "300 - 500", 300, 500),
                    numeric_bin("500-800", "500 - 800", 500, 800),
                    numeric_bin("800-1200", "800 - 1200", 800, 1200),
                    numeric_bin("gt1200", "1200 +", 1200, inf),
                ),
            ),
            FacetDef(
                facet_id="ram_size",
                label="RAM size",
                kind="numeric_range",
                unit="GB",
                values=(
                    numeric_bin("4", "4 GB", -inf, 6),
                    numeric_bin("8", "8 GB", 6, 12),
                    numeric_bin("16", "16 GB", 12, 24),
                    numeric_bin("32plus", "32 GB +", 24, inf),
                ),
            ),
            FacetDef(
                facet_id="operating_system",
                label="Operating system",
                kind="categorical",
                values=(
                    categorical_bin("windows", "Windows", ("windows", "windows 10", "windows 11")),
                    categorical_bin("macos", "macOS", ("macos", "mac os", "os x")),
                    categorical_bin("chromeos", "ChromeOS", ("chromeos", "chrome os")),
                    categorical_bin("linux", "Linux", ("linux", "ubuntu")),
                ),
            ),
            FacetDef(
                facet_id="brand",
                label="Brand",
                kind="categorical",
                values=(
                    categorical_bin("apple", "Apple", ("apple",)),
                    categorical_bin("dell", "Dell", ("dell",)),
                    categorical_bin("hp", "HP", ("hp", "hewlett-packard")),
                    categorical_bin("lenovo", "Lenovo", ("lenovo",)),
                    categorical_bin("asus", "Asus", ("asus",)),
                    categorical_bin("acer", "Acer", ("acer",)),
                ),
            ),
            FacetDef(
                facet_id="hard_drive_size",
                label="Hard drive size",
                kind="numeric_range",
                unit="GB",
                values=(
                    numeric_bin("lt256", "< 256 GB", -inf, 256),
                    numeric_bin("256-512", "256 - 512 GB", 256, 512),
                    numeric_bin("512-1024", "512 - 1024 GB", 512, 1024),
                    numeric_bin("gt1024", "1 TB +", 1024, inf),
                ),
            ),
            FacetDef(
                facet_id="screen_size",
                label="Screen size",
                kind="numeric_range",
                unit="inches",
                values=(
                    numeric_bin("lt12", "< 12", -inf, 12),
                    numeric_bin("12-14", "12 - 14", 12, 14.1),
                    numeric_bin("14.1-16", "14.1 - 16", 14.1, 16.1),
                    numeric_bin("gt16", "16.1 +", 16.1, inf),
                ),
            ),
            FacetDef(
                facet_id="cpu_cores",
                label="CPU cores",
                kind="numeric_range",
                values=(
                    numeric_bin("2", "2 cores", -inf, 4),
                    numeric_bin("4", "4 cores", 4, 6),
                    numeric_bin("6", "6 cores", 6, 8),
                    numeric_bin("8plus", "8 cores +", 8, inf),
                ),
            ),
            FacetDef(
                facet_id="cpu_speed",
                label="CPU speed",
                kind="numeric_range",
                unit="GHz",
                values=(
                    numeric_bin("lt2", "< 2.0", -inf, 2.0),
                    numeric_bin("2-3", "2.0 - 3.0", 2.0, 3.0),
                    numeric_bin("gt3", "3.0 +", 3.0, inf),
                ),
            ),
            FacetDef(
                facet_id="cpu_brand",
                label="CPU brand",
                kind="categorical",
                values=(
                    categorical_bin("intel", "Intel", ("intel",)),
                    categorical_bin("amd", "AMD", ("amd",)),
                    categorical_bin("apple_silicon", "Apple silicon", ("apple silicon", "apple m1", "apple m2")),
                    categorical_bin("qualcomm", "Qualcomm", ("qualcomm", "snapdragon")),
                ),
            ),
            FacetDef(
                facet_id="battery_life",
                label="Battery life",
                kind="numeric_range",
                unit="hours",
                values=(
                    numeric_bin("lt6", "< 6", -inf, 6),
                    numeric_bin("6-10", "6 - 10", 6, 10),
                    numeric_bin("gt10", "10 +", 10, inf),
                ),
            ),
        ),
    )


#: Respondents in the bundled reference survey.
REFERENCE_TOTAL_USERS = 277

#: Per facet: how many of the 277 respondents picked "any".
REFERENCE_ANY_COUNTS: dict[str, int] = {
    "price": 24,
    "brand": 77,
    "operating_system": 35,
    "screen_size": 41,
    "hard_drive_size": 55,
    "ram_size": 33,
    "cpu_cores": 126,
    "cpu_speed": 90,
    "cpu_brand": 141,
    "battery_life": 38,
}

#: The published two-decimal facet weight column the engine must recover
#: from the any-counts (weight = (277 - any) / 277, rounded).
REFERENCE_FACET_WEIGHTS: dict[str, float] = {
    "price": 0.91,
    "brand": 0.72,
    "operating_system": 0.87,
    "screen_size": 0.85,
    "hard_drive_size": 0.80,
    "ram_size": 0.88,
    "cpu_cores": 0.55,
    "cpu_speed": 0.68,
    "cpu_brand": 0.49,
    "battery_life": 0.86,
}

#: Cohort sizes observed in the reference survey: 83 respondents with only
#: basic usage habits, 194 with at least one advanced task.
REFERENCE_BASIC_USERS = 83
REFERENCE_ADVANCED_USERS = 194
