"""Statistical machinery for the pre/post evaluation pipeline.

Self-contained implementations of the tests the analysis pipeline runs
(descriptives, Shapiro-Wilk normality, Levene variance homogeneity,
pooled and Welch two-sample t), so the test suite can cross-check every
result against an independent oracle. Shapiro-Wilk follows the Royston
AS R94 approximation and is valid for sample sizes 3..5000.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist, median

__all__ = [
    "EmptySample",
    "SampleSizeOutOfRange",
    "SampleTooSmall",
    "GroupStats",
    "TestResult",
    "MeanTestResult",
    "descriptive",
    "shapiro_wilk",
    "levene",
    "welch_t",
    "pooled_t",
]

_INV_NORM = NormalDist().inv_cdf


class EmptySample(ValueError):
    pass


class SampleSizeOutOfRange(ValueError):
    pass


class SampleTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class GroupStats:
    """Per-group descriptives: mean (M), median (ME), sample SD, count."""

    mean: float
    median: float
    sd: float | None
    n: int


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float


@dataclass(frozen=True)
class MeanTestResult:
    statistic: float
    df: float
    p_value: float
    variant: str  # "pooled" | "welch"


def _mean(xs: list[float]) -> float:
    return math.fsum(xs) / len(xs)


def _sample_var(xs: list[float], mean: float) -> float:
    return math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1)


def descriptive(sample: list[float]) -> GroupStats:
    """Mean, median (midpoint of middle pair for even n), sample SD (n-1).

    SD is None for a single observation.
    """
    if not sample:
        raise EmptySample("descriptive statistics require at least one value")
    xs = [float(x) for x in sample]
    m = _mean(xs)
    sd = math.sqrt(_sample_var(xs, m)) if len(xs) >= 2 else None
    return GroupStats(mean=m, median=float(median(xs)), sd=sd, n=len(xs))


# --- distribution helpers ------------------------------------------------

def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    max_iter = 300
    eps = 1e-15
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def _betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def _t_p_two_sided(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return _betainc(df / 2.0, 0.5, df / (df + t * t))


def _f_sf(f: float, df1: float, df2: float) -> float:
    if math.isinf(f):
        return 0.0
    return _betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


# --- Shapiro-Wilk (Royston AS R94) ---------------------------------------

# Polynomial coefficients, ascending powers.
_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)
_PI6 = 6.0 / math.pi
_STQR = math.asin(math.sqrt(0.75))


def _poly(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _sw_half_weights(n: int) -> list[float]:
    """Lower-half W coefficients (negative); the full vector is antisymmetric."""
    half = n // 2
    if n == 3:
        return [-math.sqrt(0.5)]
    an25 = n + 0.25
    m = [_INV_NORM((i - 0.375) / an25) for i in range(1, half + 1)]
    summ2 = 2.0 * math.fsum(v * v for v in m)
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a1 = _poly(_SW_C1, rsn) - m[0] / ssumm2
    if n > 5:
        a2 = _poly(_SW_C2, rsn) - m[1] / ssumm2
        fac = math.sqrt(
            (summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
            / (1.0 - 2.0 * a1**2 - 2.0 * a2**2)
        )
        return [-a1, -a2] + [v / fac for v in m[2:]]
    fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1**2))
    return [-a1] + [v / fac for v in m[1:]]


def shapiro_wilk(sample: list[float]) -> TestResult:
    """W statistic and p-value per the Royston AS R94 approximation."""
    n = len(sample)
    if n < 3 or n > 5000:
        raise SampleSizeOutOfRange(f"sample size {n} outside the supported 3..5000")
    x = sorted(float(v) for v in sample)
    if x[0] == x[-1]:
        raise ValueError("all sample values are identical; W is undefined")

    weights = _sw_half_weights(n)
    num = math.fsum(w * (x[i] - x[n - 1 - i]) for i, w in enumerate(weights))
    m = _mean(x)
    ssq = math.fsum((v - m) ** 2 for v in x)
    w_stat = min(num * num / ssq, 1.0)

    if n == 3:
        p = _PI6 * (math.asin(math.sqrt(w_stat)) - _STQR)
        return TestResult(w_stat, min(max(p, 0.0), 1.0))

    one_minus_w = max(1.0 - w_stat, 1e-300)
    y = math.log(one_minus_w)
    if n <= 11:
        gamma = _poly(_SW_G, n)
        if y >= gamma:
            return TestResult(w_stat, 1e-19)
        y = -math.log(gamma - y)
        mu = _poly(_SW_C3, n)
        sigma = math.exp(_poly(_SW_C4, n))
    else:
        ln_n = math.log(n)
        mu = _poly(_SW_C5, ln_n)
        sigma = math.exp(_poly(_SW_C6, ln_n))
    return TestResult(w_stat, _norm_sf((y - mu) / sigma))


# --- variance homogeneity and mean comparison ----------------------------

def levene(a: list[float], b: list[float], center: str = "mean") -> TestResult:
    """Two-sample Levene test on absolute deviations from group centers.

    center="mean" is the classic Levene; center="median" gives the
    Brown-Forsythe variant. p from F(1, n_a + n_b - 2).
    """
    if len(a) < 2 or len(b) < 2:
        raise SampleTooSmall("levene requires at least 2 values per sample")
    if center not in ("mean", "median"):
        raise ValueError(f"unknown center {center!r}")
    groups = []
    for xs in (a, b):
        xs = [float(v) for v in xs]
        c = _mean(xs) if center == "mean" else float(median(xs))
        groups.append([abs(v - c) for v in xs])
    za, zb = groups
    n_a, n_b = len(za), len(zb)
    n_total = n_a + n_b
    mza, mzb = _mean(za), _mean(zb)
    grand = math.fsum(za + zb) / n_total
    between = n_a * (mza - grand) ** 2 + n_b * (mzb - grand) ** 2
    within = math.fsum((z - mza) ** 2 for z in za) + math.fsum(
        (z - mzb) ** 2 for z in zb
    )
    if within == 0.0:
        f = 0.0 if between == 0.0 else math.inf
    else:
        f = (n_total - 2) * between / within
    return TestResult(f, _f_sf(f, 1, n_total - 2))


def welch_t(a: list[float], b: list[float]) -> MeanTestResult:
    """Welch two-sample t with Welch-Satterthwaite df; two-sided p."""
    if len(a) < 2 or len(b) < 2:
        raise SampleTooSmall("welch_t requires at least 2 values per sample")
    xa = [float(v) for v in a]
    xb = [float(v) for v in b]
    n_a, n_b = len(xa), len(xb)
    ma, mb = _mean(xa), _mean(xb)
    va, vb = _sample_var(xa, ma), _sample_var(xb, mb)
    qa, qb = va / n_a, vb / n_b
    se2 = qa + qb
    if se2 == 0.0:
        t = 0.0 if ma == mb else math.copysign(math.inf, ma - mb)
        return MeanTestResult(t, float(n_a + n_b - 2), 1.0 if t == 0.0 else 0.0, "welch")
    t = (ma - mb) / math.sqrt(se2)
    df = se2**2 / (qa**2 / (n_a - 1) + qb**2 / (n_b - 1))
    return MeanTestResult(t, df, _t_p_two_sided(t, df), "welch")


def pooled_t(a: list[float], b: list[float]) -> MeanTestResult:
    """Equal-variance two-sample t with pooled SD; two-sided p."""
    if len(a) < 2 or len(b) < 2:
        raise SampleTooSmall("pooled_t requires at least 2 values per sample")
    xa = [float(v) for v in a]
    xb = [float(v) for v in b]
    n_a, n_b = len(xa), len(xb)
    ma, mb = _mean(xa), _mean(xb)
    va, vb = _sample_var(xa, ma), _sample_var(xb, mb)
    df = n_a + n_b - 2
    sp2 = ((n_a - 1) * va + (n_b - 1) * vb) / df
    se2 = sp2 * (1.0 / n_a + 1.0 / n_b)
    if se2 == 0.0:
        t = 0.0 if ma == mb else math.copysign(math.inf, ma - mb)
        return MeanTestResult(t, float(df), 1.0 if t == 0.0 else 0.0, "pooled")
    t = (ma - mb) / math.sqrt(se2)
    return MeanTestResult(t, float(df), _t_p_two_sided(t, df), "pooled")
