"""Discrete-distribution utilities: Poisson PMF, total variation, Pearson
chi-square tests and binomial confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probabilities on {0, ..., k_max} plus the mass beyond k_max."""

    probs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or self.tail < -1e-15:
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() + self.tail - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum() + self.tail!r}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def k_max(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))


def default_k_max(a: float) -> int:
    return int(math.ceil(a + 10.0 * math.sqrt(a)))


def poisson_pmf(a: float, k_max: int | None = None) -> DiscreteDistribution:
    """Poisson(a) truncated at ``k_max`` with the remaining mass as tail."""
    if a < 0:
        raise ValueError("Poisson parameter must be non-negative")
    if k_max is None:
        k_max = default_k_max(a)
    p = np.empty(k_max + 1)
    p[0] = math.exp(-a)
    for k in range(k_max):
        p[k + 1] = p[k] * a / (k + 1)
    # the tail is computed independently of the head, then the head is
    # renormalised by at most a few ulps so the total is exactly one
    tail = float(_st.poisson.sf(k_max, a)) if a > 0 else 0.0
    head = p.sum()
    if head > 0:
        p *= (1.0 - tail) / head
    return DiscreteDistribution(p, tail)


def empirical_distribution(samples, k_max: int) -> DiscreteDistribution:
    """Empirical law of non-negative integer ``samples`` on {0..k_max} + tail."""
    x = np.asarray(samples, dtype=np.int64)
    if x.size == 0:
        raise ValueError("no samples")
    counts = np.bincount(np.minimum(x, k_max + 1), minlength=k_max + 2)
    freq = counts / x.size
    return DiscreteDistribution(freq[: k_max + 1], float(freq[k_max + 1]))


def tv_distance(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation distance; the tails are compared as one lumped atom."""
    if p.k_max != q.k_max:
        raise ValueError(f"mismatched supports: k_max {p.k_max} vs {q.k_max}")
    return 0.5 * float(np.abs(p.probs - q.probs).sum() + abs(p.tail - q.tail))


def _pool(expected: np.ndarray, observed: list[np.ndarray], minimum: float = 5.0):
    """Merge adjacent bins (from both ends towards the mode) until every
    pooled expected count is at least ``minimum``."""
    edges = []
    acc = 0.0
    start = 0
    for k, e in enumerate(expected):
        acc += e
        if acc >= minimum:
            edges.append((start, k + 1))
            start, acc = k + 1, 0.0
    if start < len(expected):
        if not edges:
            raise ValueError("too few trials to form two bins with expected count >= 5")
        lo, _ = edges.pop()
        edges.append((lo, len(expected)))
    if len(edges) < 2:
        raise ValueError("too few trials to form two bins with expected count >= 5")
    pooled_e = np.array([expected[a:b].sum() for a, b in edges])
    pooled_o = [np.array([o[a:b].sum() for a, b in edges]) for o in observed]
    return pooled_e, pooled_o


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


def chi_square_gof(counts, expected: DiscreteDistribution) -> ChiSquareResult:
    """Pearson goodness of fit of per-k trial counts against ``expected``.

    ``counts[k]`` is the number of trials with outcome k for k <= k_max and
    ``counts[k_max + 1]`` (if given) the number beyond it.
    """
    obs = np.asarray(counts, dtype=float)
    K = expected.k_max
    full = np.zeros(K + 2)
    full[: min(len(obs), K + 2)] = obs[: K + 2]
    if len(obs) > K + 2:
        full[K + 1] += obs[K + 2 :].sum()
    n = full.sum()
    exp_counts = n * np.append(expected.probs, expected.tail)
    e, (o,) = _pool(exp_counts, [full])
    stat = float(np.sum((o - e) ** 2 / e))
    dof = len(e) - 1
    return ChiSquareResult(stat, dof, float(_st.chi2.sf(stat, dof)))


def chi_square_two_sample(samples_a, samples_b) -> ChiSquareResult:
    """Pearson homogeneity test of two samples of counts (2 x k table)."""
    a = np.asarray(samples_a, dtype=np.int64)
    b = np.asarray(samples_b, dtype=np.int64)
    k_max = int(max(a.max(initial=0), b.max(initial=0)))
    ca = np.bincount(a, minlength=k_max + 1).astype(float)
    cb = np.bincount(b, minlength=k_max + 1).astype(float)
    na, nb = ca.sum(), cb.sum()
    total = ca + cb
    # pool on the smaller expected row
    e_min = total * min(na, nb) / (na + nb)
    _, (pa, pb) = _pool(e_min, [ca, cb])
    pt = pa + pb
    ea = pt * na / (na + nb)
    eb = pt * nb / (na + nb)
    stat = float(np.sum((pa - ea) ** 2 / ea) + np.sum((pb - eb) ** 2 / eb))
    dof = len(pt) - 1
    return ChiSquareResult(stat, dof, float(_st.chi2.sf(stat, dof)))


def wilson_interval(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("Wilson interval needs n >= 1")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    z = float(_st.norm.ppf(0.5 + 0.5 * level))
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == n else min(1.0, centre + half)
    return low, high


def tv_standard_error(
    samples, reference: DiscreteDistribution, rng: np.random.Generator, n_boot: int = 200
) -> float:
    """Bootstrap standard error of the empirical-vs-reference TV distance."""
    x = np.asarray(samples)
    K = reference.k_max
    emp = empirical_distribution(x, K)
    p = np.append(emp.probs, emp.tail)
    draws = rng.multinomial(len(x), p, size=n_boot) / len(x)
    ref = np.append(reference.probs, reference.tail)
    tv = 0.5 * np.abs(draws - ref).sum(axis=1)
    return float(tv.std(ddof=1))
