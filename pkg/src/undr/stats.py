"""Nonparametric tests: Wilcoxon signed-rank, Mann-Whitney U, exact binomial.

Conventions, fixed so the exact branches are testable against enumeration:

* Wilcoxon drops zero differences (the original convention), uses average
  ranks for tied absolute differences, and reports W = min(W+, W-). The
  null distribution is exact (all 2^n sign assignments, computed by
  convolution over doubled ranks) up to ``n_effective <= 25`` pairs; above
  that a normal approximation with tie and continuity corrections is used.
* Mann-Whitney uses average ranks, reports U = min(U1, U2), and is exact
  (all C(n1+n2, n1) rank assignments) for pooled sizes up to 20.
* Two-sided p-values double the smaller one-sided tail, capped at 1.
* The binomial test is the exact upper tail P(X >= k) with stable
  log-space binomial coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DegenerateSample

TWO_SIDED = "two_sided"
ONE_SIDED_GREATER = "one_sided_greater"
ONE_SIDED_LESS = "one_sided_less"
SIDEDNESS = (TWO_SIDED, ONE_SIDED_GREATER, ONE_SIDED_LESS)

WILCOXON_EXACT_LIMIT = 25
MANN_WHITNEY_EXACT_LIMIT = 20


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    sidedness: str
    exact: bool
    n_effective: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "sidedness": self.sidedness,
            "exact": self.exact,
            "n_effective": self.n_effective,
        }


def _check_sidedness(sidedness: str) -> None:
    if sidedness not in SIDEDNESS:
        raise ValueError(f"unknown sidedness {sidedness!r}; expected one of {SIDEDNESS}")


def _check_finite(values, label: str) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{label} contains a non-finite value: {v!r}")


def average_ranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with tied values sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # positions are 1-based
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _combine(p_greater: float, p_less: float, sidedness: str) -> float:
    if sidedness == ONE_SIDED_GREATER:
        return min(1.0, p_greater)
    if sidedness == ONE_SIDED_LESS:
        return min(1.0, p_less)
    return min(1.0, 2.0 * min(p_greater, p_less))


# --- Wilcoxon signed-rank ----------------------------------------------------

def _signed_rank_distribution(doubled_ranks: Sequence[int]) -> list[int]:
    """Subset-sum counts of the doubled ranks: counts[s] = #sign assignments
    with doubled W+ equal to s. Total mass is 2^n."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    upper = 0
    for r in doubled_ranks:
        for s in range(upper, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
        upper += r
    return counts


def wilcoxon_signed_rank(
    pairs: Sequence[tuple[float, float]],
    sidedness: str = TWO_SIDED,
    exact_limit: int = WILCOXON_EXACT_LIMIT,
) -> TestResult:
    """Paired test; ``one_sided_greater`` means the first elements tend larger.

    Zero differences are dropped; if none survive the sample is degenerate.
    """
    _check_sidedness(sidedness)
    if not pairs:
        raise ValueError("empty paired sample")
    _check_finite((v for pair in pairs for v in pair), "paired sample")
    diffs = [a - b for a, b in pairs if a != b]
    n = len(diffs)
    if n == 0:
        raise DegenerateSample("all differences are zero; nothing to test")
    ranks = average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for d, r in zip(diffs, ranks) if d > 0)
    w_minus = sum(r for d, r in zip(diffs, ranks) if d < 0)
    statistic = min(w_plus, w_minus)

    if n <= exact_limit:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_distribution(doubled)
        target = int(round(2 * w_plus))
        denom = 1 << n
        p_greater = float(Fraction(sum(counts[target:]), denom))
        p_less = float(Fraction(sum(counts[: target + 1]), denom))
        return TestResult(
            statistic=statistic,
            p_value=_combine(p_greater, p_less, sidedness),
            method="wilcoxon_signed_rank",
            sidedness=sidedness,
            exact=True,
            n_effective=n,
        )

    mean = sum(ranks) / 2.0
    variance = sum(r * r for r in ranks) / 4.0  # equals the tie-corrected formula
    sd = math.sqrt(variance)
    p_greater = _normal_sf((w_plus - mean - 0.5) / sd)
    p_less = _normal_cdf((w_plus - mean + 0.5) / sd)
    return TestResult(
        statistic=statistic,
        p_value=_combine(p_greater, p_less, sidedness),
        method="wilcoxon_signed_rank",
        sidedness=sidedness,
        exact=False,
        n_effective=n,
    )


# --- Mann-Whitney U ----------------------------------------------------------

def _rank_sum_distribution(doubled_ranks: Sequence[int], n1: int) -> dict[int, int]:
    """Counts of the doubled rank sum over all size-n1 subsets of the pooled ranks."""
    # layers[j] maps doubled sum -> number of j-subsets reaching it
    layers: list[dict[int, int]] = [{0: 1}] + [dict() for _ in range(n1)]
    for r in doubled_ranks:
        for j in range(min(n1, len(doubled_ranks)), 0, -1):
            source = layers[j - 1]
            target = layers[j]
            for s, c in source.items():
                target[s + r] = target.get(s + r, 0) + c
    return layers[n1]


def mann_whitney_u(
    x: Sequence[float],
    y: Sequence[float],
    sidedness: str = TWO_SIDED,
    exact_limit: int = MANN_WHITNEY_EXACT_LIMIT,
) -> TestResult:
    """Unpaired test; ``one_sided_greater`` means x tends larger than y."""
    _check_sidedness(sidedness)
    if not x or not y:
        raise ValueError("both samples must be non-empty")
    _check_finite(x, "x")
    _check_finite(y, "y")
    n1, n2 = len(x), len(y)
    pooled = list(x) + list(y)
    ranks = average_ranks(pooled)
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1
    statistic = min(u1, u2)

    if n1 + n2 <= exact_limit:
        doubled = [int(round(2 * r)) for r in ranks]
        dist = _rank_sum_distribution(doubled, n1)
        total = math.comb(n1 + n2, n1)
        target = int(round(2 * r1))
        ge = sum(c for s, c in dist.items() if s >= target)
        le = sum(c for s, c in dist.items() if s <= target)
        p_greater = float(Fraction(ge, total))
        p_less = float(Fraction(le, total))
        return TestResult(
            statistic=statistic,
            p_value=_combine(p_greater, p_less, sidedness),
            method="mann_whitney_u",
            sidedness=sidedness,
            exact=True,
            n_effective=n1 + n2,
        )

    n = n1 + n2
    mean = n1 * n2 / 2.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for v in pooled:
        seen[v] = seen.get(v, 0) + 1
    for t in seen.values():
        tie_term += t**3 - t
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    sd = math.sqrt(variance)
    if sd == 0:
        # every pooled value identical: no evidence either way
        p_greater = p_less = 0.5
    else:
        p_greater = _normal_sf((u1 - mean - 0.5) / sd)
        p_less = _normal_cdf((u1 - mean + 0.5) / sd)
    return TestResult(
        statistic=statistic,
        p_value=_combine(p_greater, p_less, sidedness),
        method="mann_whitney_u",
        sidedness=sidedness,
        exact=False,
        n_effective=n1 + n2,
    )


# --- binomial ----------------------------------------------------------------

def binomial_test_ge(successes: int, trials: int, p0: float = 0.5) -> TestResult:
    """Exact upper-tail binomial test: P(X >= successes | n, p0).

    Terms are accumulated in log space (lgamma-based binomial coefficients)
    so large n stays stable.
    """
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    if not 0.0 < p0 < 1.0:
        raise ValueError("p0 must be strictly between 0 and 1")
    if successes == 0:
        p = 1.0
    else:
        log_p0 = math.log(p0)
        log_q0 = math.log1p(-p0)
        log_terms = [
            math.lgamma(trials + 1)
            - math.lgamma(i + 1)
            - math.lgamma(trials - i + 1)
            + i * log_p0
            + (trials - i) * log_q0
            for i in range(successes, trials + 1)
        ]
        peak = max(log_terms)
        p = min(1.0, math.exp(peak) * math.fsum(math.exp(t - peak) for t in log_terms))
    return TestResult(
        statistic=float(successes),
        p_value=p,
        method="binomial",
        sidedness=ONE_SIDED_GREATER,
        exact=True,
        n_effective=trials,
    )


def bonferroni(p_values: Sequence[float]) -> list[float]:
    """Multiply each p-value by the family size, capping at 1."""
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
    m = len(p_values)
    return [min(1.0, p * m) for p in p_values]
