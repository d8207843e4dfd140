"""Statistical kernel: ranks, Spearman, t-tests, Mann-Whitney U, simple OLS,
empirical p-values and Student-t tail probabilities.

All functions are pure and operate on 1-d sequences of floats. One-tailed
p-values are reported in the direction of the observed effect unless an
explicit alternative is given; two-tailed p-values are
``min(1, 2 * min(p_lower, p_upper))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import ConstantInput, DegenerateX, EmptyInput, LengthMismatch, ZeroVariance

# Exact Mann-Whitney null is used up to this total sample size.
MW_EXACT_MAX_N = 20


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_one_tailed: float
    p_two_tailed: float
    n: int
    df: float | None = None
    direction: int = 0
    method: str = ""

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class SpearmanResult(TestResult):
    t: float = 0.0

    @property
    def rho(self) -> float:
        return self.statistic


@dataclass(frozen=True)
class OneSampleT(TestResult):
    mean: float = 0.0
    sd: float = 0.0
    icir: float = 0.0

    @property
    def t(self) -> float:
        return self.statistic


@dataclass(frozen=True)
class MannWhitneyResult(TestResult):
    alternative: str = "greater"
    p_lower: float = 0.0
    p_upper: float = 0.0
    z: float | None = None
    n_a: int = 0
    n_b: int = 0

    @property
    def u(self) -> float:
        return self.statistic


@dataclass(frozen=True)
class OlsResult:
    alpha: float
    beta: float
    se_alpha: float
    se_beta: float
    t_alpha: float
    p_alpha: float
    t_beta: float
    r2: float
    n: int
    residuals: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class EmpiricalPercentile:
    percentile: float
    p_upper: float


def _vec(values, name="values") -> np.ndarray:
    a = np.asarray(values, dtype=np.float64).reshape(-1)
    if a.size == 0:
        raise EmptyInput(f"{name} is empty")
    return a


def _sign(x: float) -> int:
    return 1 if x > 0 else (-1 if x < 0 else 0)


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they cover."""
    a = _vec(values)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    # boundaries of tie groups in sorted order
    new_group = np.empty(a.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = sorted_a[1:] != sorted_a[:-1]
    starts = np.flatnonzero(new_group)
    ends = np.append(starts[1:], a.size)
    group_rank = (starts + ends + 1) / 2.0  # mean of positions start+1 .. end
    ranks = np.empty(a.size)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def _tie_sizes(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts


def student_t_tail(t: float, df: float) -> float:
    """Upper-tail probability P(T >= t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    t = float(t)
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if t == 0.0:
        return 0.5
    t2 = t * t
    if t2 < df:
        # near zero the complementary form avoids cancellation in 1 - I_x
        central = float(special.betainc(0.5, 0.5 * df, t2 / (df + t2)))
        half = 0.5 - 0.5 * central
    else:
        half = 0.5 * float(special.betainc(0.5 * df, 0.5, df / (df + t2)))
    return half if t > 0 else 1.0 - half


def student_t_quantile(upper_tail: float, df: float) -> float:
    """The t with ``student_t_tail(t, df) == upper_tail``, by root-finding."""
    if not 0.0 < upper_tail < 1.0:
        raise ValueError("upper_tail must be in (0, 1)")
    if upper_tail == 0.5:
        return 0.0
    f = lambda x: student_t_tail(x, df) - upper_tail  # noqa: E731
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    lo = -1.0
    while f(lo) < 0:
        lo *= 2.0
    return float(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500))


def _t_result_p(t: float, df: float) -> tuple[float, float]:
    """(p_one in observed direction, p_two)."""
    p_upper = student_t_tail(t, df)
    p_lower = student_t_tail(-t, df)
    p_one = p_upper if t >= 0 else p_lower
    return p_one, min(1.0, 2.0 * min(p_lower, p_upper))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    return float(da @ db) / denom


def spearman(x, y) -> SpearmanResult:
    """Spearman rho with a t-approximation p-value (n - 2 degrees of freedom)."""
    x = _vec(x, "x")
    y = _vec(y, "y")
    if x.size != y.size:
        raise LengthMismatch(f"x has {x.size} values, y has {y.size}")
    n = x.size
    if n < 3:
        raise EmptyInput(f"spearman needs n >= 3, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantInput("spearman is undefined for a constant sequence")
    rho = _pearson(average_ranks(x), average_ranks(y))
    rho = max(-1.0, min(1.0, rho))
    df = n - 2
    if abs(rho) == 1.0:
        t = math.copysign(math.inf, rho)
    else:
        t = rho * math.sqrt(df / (1.0 - rho * rho))
    p_one, p_two = _t_result_p(t, df)
    return SpearmanResult(rho, p_one, p_two, n, df, _sign(rho), "spearman-t", t=t)


def spearman_p_from_rho(rho: float, n: int) -> tuple[float, float]:
    """(p_one, p_two) of a published rho at sample size n under the t-approximation."""
    df = n - 2
    t = math.copysign(math.inf, rho) if abs(rho) >= 1 else rho * math.sqrt(df / (1 - rho * rho))
    return _t_result_p(t, df)


def one_sample_t(values) -> OneSampleT:
    """t-test of mean zero; also reports ICIR = mean / sd (n - 1 denominator)."""
    v = _vec(values)
    n = v.size
    if n < 2:
        raise EmptyInput(f"one_sample_t needs n >= 2, got {n}")
    mean = float(v.mean())
    sd = float(v.std(ddof=1))
    if np.all(v == v[0]) or not sd > 0:
        raise ZeroVariance("sample standard deviation is zero")
    icir = mean / sd
    t = icir * math.sqrt(n)
    p_one, p_two = _t_result_p(t, n - 1)
    return OneSampleT(t, p_one, p_two, n, n - 1, _sign(mean), "one-sample-t",
                      mean=mean, sd=sd, icir=icir)


def t_stat_from_icir(icir: float, n_dates: int) -> OneSampleT:
    """Closed-form t and p for a published ICIR over ``n_dates`` dates."""
    t = icir * math.sqrt(n_dates)
    p_one, p_two = _t_result_p(t, n_dates - 1)
    return OneSampleT(t, p_one, p_two, n_dates, n_dates - 1, _sign(icir), "icir", icir=icir)


@lru_cache(maxsize=256)
def _rank_sum_counts(doubled_ranks: tuple[int, ...], n_a: int) -> tuple[np.ndarray, int]:
    """Number of size-``n_a`` subsets of the pooled (doubled) ranks by rank sum.

    Returns (counts indexed by doubled rank sum, total number of subsets).
    """
    total = sum(doubled_ranks)
    # dp[k, s] = number of k-subsets of processed items with doubled-rank sum s
    dp = np.zeros((n_a + 1, total + 1), dtype=np.float64)
    dp[0, 0] = 1.0
    for r in doubled_ranks:
        dp[1:, r:] = dp[1:, r:] + dp[:-1, : total + 1 - r]
    return dp[n_a], math.comb(len(doubled_ranks), n_a)


def mann_whitney_one_sided(a, b, alternative: str = "greater", method: str = "auto") -> MannWhitneyResult:
    """Mann-Whitney U test of whether ``a`` tends to be greater (or less) than ``b``.

    ``method='exact'`` uses the permutation distribution of the rank sum given
    the pooled (mid-)ranks, so ties are handled exactly. ``'asymptotic'`` uses
    the normal approximation with continuity and tie correction. ``'auto'``
    picks exact when ``len(a) + len(b) <= MW_EXACT_MAX_N``.
    """
    a = _vec(a, "a")
    b = _vec(b, "b")
    if alternative not in ("greater", "less"):
        raise ValueError("alternative must be 'greater' or 'less'")
    n, m = a.size, b.size
    N = n + m
    pooled = np.concatenate([a, b])
    ranks = average_ranks(pooled)
    rank_sum_a = float(ranks[:n].sum())
    u = rank_sum_a - n * (n + 1) / 2.0
    mu = n * m / 2.0
    if method == "auto":
        method = "exact" if N <= MW_EXACT_MAX_N else "asymptotic"

    z = None
    if method == "exact":
        doubled = tuple(int(round(2 * r)) for r in ranks)
        counts, total = _rank_sum_counts(tuple(sorted(doubled)), n)
        obs = int(round(2 * rank_sum_a))
        p_upper = float(counts[obs:].sum()) / total
        p_lower = float(counts[: obs + 1].sum()) / total
    elif method == "asymptotic":
        ties = _tie_sizes(pooled)
        tie_term = float(np.sum(ties**3 - ties)) / (N * (N - 1)) if N > 1 else 0.0
        var = n * m / 12.0 * ((N + 1) - tie_term)
        if var <= 0:
            p_upper = p_lower = 1.0
        else:
            sd = math.sqrt(var)
            z_up = (u - mu - 0.5) / sd
            z_lo = (u - mu + 0.5) / sd
            p_upper = float(special.ndtr(-z_up))
            p_lower = float(special.ndtr(z_lo))
            z = (u - mu) / sd
    else:
        raise ValueError(f"unknown method {method!r}")
    p_one = p_upper if alternative == "greater" else p_lower
    p_two = min(1.0, 2.0 * min(p_lower, p_upper))
    return MannWhitneyResult(u, p_one, p_two, N, None, _sign(u - mu), f"mann-whitney-{method}",
                             alternative=alternative, p_lower=p_lower, p_upper=p_upper,
                             z=z, n_a=n, n_b=m)


def ols_simple(x, y) -> OlsResult:
    """Least-squares fit of ``y = alpha + beta * x``."""
    x = _vec(x, "x")
    y = _vec(y, "y")
    if x.size != y.size:
        raise LengthMismatch(f"x has {x.size} values, y has {y.size}")
    n = x.size
    if n < 3:
        raise EmptyInput(f"ols_simple needs n >= 3, got {n}")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if not sxx > 0:
        raise DegenerateX("x has zero variance")
    beta = float(dx @ (y - ym)) / sxx
    alpha = float(ym - beta * xm)
    resid = y - (alpha + beta * x)
    ssr = float(resid @ resid)
    dy = y - ym
    sst = float(dy @ dy)
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    s2 = ssr / (n - 2)
    se_alpha = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    se_beta = math.sqrt(s2 / sxx)
    t_alpha = _ratio(alpha, se_alpha)
    t_beta = _ratio(beta, se_beta)
    p_alpha = _t_result_p(t_alpha, n - 2)[1] if not math.isnan(t_alpha) else math.nan
    return OlsResult(alpha, beta, se_alpha, se_beta, t_alpha, p_alpha, t_beta, r2, n, resid)


def _ratio(num: float, se: float) -> float:
    if se > 0:
        return num / se
    if num == 0:
        return 0.0
    return math.copysign(math.inf, num)


def empirical_percentile(null_samples, actual: float) -> EmpiricalPercentile:
    """One-tailed empirical p = #{null >= actual} / K; ties count as >=."""
    s = _vec(null_samples, "null_samples")
    k_ge = int(np.count_nonzero(s >= actual))
    p_upper = k_ge / s.size
    return EmpiricalPercentile(100.0 * (1.0 - p_upper), p_upper)
