"""Initial particle clouds in the Poisson-limit scaling regime and repeated
survivor-count experiments.

A cloud for final time tau and limit measure nu holds
N = round(exp(tau * lambda_1 / 2) * nu(Q)) points laid out so that
exp(-tau * lambda_1 / 2) * N(B) approximates nu(B). Each trial counts the
particles still inside at tau, either by full path simulation (``sde``) or by
independent Bernoulli(u(tau, x_k)) draws (``thinning``), which has the same
law because the survival indicators are independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import Disk, Domain, Rectangle
from .measures import (
    Density,
    Lebesgue,
    Measure,
    RingWeighted,
    UnsupportedMeasure,
    density_values,
    total_mass,
)
from .rng import numpy_generator
from .sde import DiffusionSpec, survive_ensemble
from .spectral import SurvivalModel, poisson_parameter, principal_mode
from .stats import (
    ChiSquareResult,
    DiscreteDistribution,
    chi_square_gof,
    default_k_max,
    empirical_distribution,
    poisson_pmf,
    tv_distance,
    tv_standard_error,
)

DEFAULT_MAX_COUNT = 5_000_000
SCHEMES = ("grid", "stratified", "iid")
MODES = ("thinning", "sde")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class CloudTooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InitialCloud:
    domain: Domain
    measure: Measure
    points: np.ndarray
    tau: float
    lambda1: float
    scheme: str

    @property
    def scale_factor(self) -> float:
        return math.exp(-0.5 * self.tau * self.lambda1)

    def __len__(self) -> int:
        return len(self.points)

    def scaled_count(self, indicator: Callable[[np.ndarray], np.ndarray]) -> float:
        """exp(-tau lambda_1 / 2) * N(B) for the set B given by ``indicator``."""
        if len(self.points) == 0:
            return 0.0
        return self.scale_factor * float(np.count_nonzero(indicator(self.points)))


def particle_count(domain: Domain, nu: Measure, tau: float, lambda1: float) -> int:
    return int(round(math.exp(0.5 * tau * lambda1) * total_mass(domain, nu)))


def _unit_offsets(n: int, scheme: str, rng) -> np.ndarray:
    if scheme == "grid":
        return np.full(n, 0.5)
    return rng.random(n)


def _sunflower(radius: float, s_lo: float, s_hi: float, n: int, scheme: str, rng) -> np.ndarray:
    """n points in the annulus radius*sqrt(s_lo) <= |x| < radius*sqrt(s_hi).

    Equal-area radial strata with a golden-angle rotation between successive
    points; ``grid`` takes each stratum's midpoint, ``stratified`` a uniform
    point within it, ``iid`` ignores the strata.
    """
    if n == 0:
        return np.empty((0, 2))
    k = np.arange(n)
    if scheme == "iid":
        s = s_lo + (s_hi - s_lo) * rng.random(n)
        theta = 2.0 * math.pi * rng.random(n)
    else:
        s = s_lo + (s_hi - s_lo) * (k + _unit_offsets(n, scheme, rng)) / n
        theta = 2.0 * math.pi * np.mod(k * _GOLDEN, 1.0)
    rho = radius * np.sqrt(s)
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])


def _kronecker(rect: Rectangle, n: int, scheme: str, rng) -> np.ndarray:
    if n == 0:
        return np.empty((0, 2))
    k = np.arange(n)
    if scheme == "iid":
        u, v = rng.random(n), rng.random(n)
    else:
        u = (k + _unit_offsets(n, scheme, rng)) / n
        v = np.mod(k * _GOLDEN + 0.5 / n, 1.0)
    # keep strictly inside: the closed boundary is absorbing
    eps = 1e-12
    u = np.clip(u, eps, 1 - eps)
    v = np.clip(v, eps, 1 - eps)
    return np.column_stack([u * rect.side_x, v * rect.side_y])


def _largest_remainder(n: int, weights: np.ndarray) -> np.ndarray:
    share = n * weights / weights.sum()
    base = np.floor(share).astype(int)
    short = n - base.sum()
    order = np.argsort(-(share - base), kind="stable")
    base[order[:short]] += 1
    return base


def _uniform_points(domain: Domain, n: int, scheme: str, rng) -> np.ndarray:
    if isinstance(domain, Disk):
        return _sunflower(domain.radius, 0.0, 1.0, n, scheme, rng)
    if isinstance(domain, Rectangle):
        return _kronecker(domain, n, scheme, rng)
    raise TypeError(f"unsupported domain {domain!r}")


def build_cloud(
    domain: Domain,
    nu: Measure,
    tau: float,
    lambda1: float,
    scheme: str = "grid",
    seed: int = 0,
    max_count: int = DEFAULT_MAX_COUNT,
) -> InitialCloud:
    """Deterministic (``grid``), jittered (``stratified``) or i.i.d. cloud."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    expected = math.exp(0.5 * tau * lambda1) * total_mass(domain, nu)
    if expected > max_count:
        raise CloudTooLarge(
            f"tau={tau:g} needs {expected:.3g} particles, above the guard {max_count}"
        )
    n = int(round(expected))
    rng = numpy_generator(seed, 0xC10D)

    if isinstance(nu, Lebesgue):
        points = _uniform_points(domain, n, scheme, rng)
    elif isinstance(nu, RingWeighted):
        if not isinstance(domain, Disk):
            raise UnsupportedMeasure("ring-weighted measures need a disk domain")
        masses = np.asarray(nu.weights) * nu.partition(domain).measures()
        if scheme == "iid":
            counts = rng.multinomial(n, masses / masses.sum()) if n else np.zeros(nu.n, int)
        else:
            counts = _largest_remainder(n, masses) if n else np.zeros(nu.n, int)
        parts = [
            _sunflower(domain.radius, (i / nu.n) ** 2, ((i + 1) / nu.n) ** 2, c, scheme, rng)
            for i, c in enumerate(counts)
        ]
        points = np.concatenate(parts) if parts else np.empty((0, 2))
    elif isinstance(nu, Density):
        points = _density_points(domain, nu, n, scheme, rng)
    else:
        raise UnsupportedMeasure(f"unsupported measure {nu!r}")
    points = points.reshape(-1, 2)
    return InitialCloud(domain, nu, points, tau, lambda1, scheme)


def _density_points(domain: Domain, nu: Density, n: int, scheme: str, rng) -> np.ndarray:
    if n == 0:
        return np.empty((0, 2))
    if scheme == "iid":
        probe = _uniform_points(domain, 4096, "grid", None)
        top = 1.1 * float(np.max(density_values(domain, nu, probe)))
        out = []
        have = 0
        while have < n:
            cand = _uniform_points(domain, 2 * (n - have) + 16, "iid", rng)
            keep = rng.random(len(cand)) * top < density_values(domain, nu, cand)
            out.append(cand[keep])
            have += int(keep.sum())
        return np.concatenate(out)[:n]
    # systematic resampling of a fine quasi-uniform base lattice, walked in
    # Hilbert-curve order so consecutive picks are spatial neighbours
    base = _uniform_points(domain, 8 * n, "grid", None)
    x0, x1, y0, y1 = domain.bounding_box()
    base = base[np.argsort(_hilbert_index((base[:, 0] - x0) / (x1 - x0),
                                          (base[:, 1] - y0) / (y1 - y0)), kind="stable")]
    w = density_values(domain, nu, base)
    cum = np.cumsum(w)
    cum /= cum[-1]
    pos = (np.arange(n) + _unit_offsets(n, scheme, rng)) / n
    idx = np.minimum(np.searchsorted(cum, pos, side="left"), len(base) - 1)
    return base[idx]


def _hilbert_index(u: np.ndarray, v: np.ndarray, order: int = 16) -> np.ndarray:
    """Position along the Hilbert curve of points in the unit square."""
    side = 1 << order
    x = np.clip((u * side).astype(np.int64), 0, side - 1)
    y = np.clip((v * side).astype(np.int64), 0, side - 1)
    d = np.zeros_like(x)
    s = side >> 1
    while s > 0:
        rx = (x & s) > 0
        ry = (y & s) > 0
        d += s * s * ((3 * rx.astype(np.int64)) ^ ry.astype(np.int64))
        flip = ~ry & rx
        x = np.where(flip, side - 1 - x, x)
        y = np.where(flip, side - 1 - y, y)
        swap = ~ry
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s >>= 1
    return d


def thinning_count(u: np.ndarray, rng: np.random.Generator) -> int:
    """Number of successes among independent Bernoulli(u_k) draws.

    Every particle becomes a candidate with probability max(u) and a candidate
    is kept with probability u_k / max(u); both stages are independent, so
    each particle survives with probability exactly u_k while only the
    candidates are touched.
    """
    n = len(u)
    if n == 0:
        return 0
    p_max = float(u.max())
    if p_max <= 0.0:
        return 0
    c = int(rng.binomial(n, p_max))
    if c == 0:
        return 0
    idx = rng.choice(n, size=c, replace=False)
    return int(np.count_nonzero(rng.random(c) * p_max < u[idx]))


def survival_at_cloud(model: SurvivalModel, cloud: InitialCloud) -> tuple[np.ndarray, float]:
    """Certified survival probabilities u(tau, x_k), clamped to [0, 1]."""
    est = model.survival(cloud.tau, cloud.points)
    return np.clip(np.asarray(est.value, dtype=float).reshape(-1), 0.0, 1.0), est.bound


@dataclass(frozen=True)
class PgfGap:
    s: float
    exact: float
    poisson: float
    bound: float
    measure_term: float
    tail_term: float
    truncation_term: float

    @property
    def gap(self) -> float:
        return abs(self.exact - self.poisson)

    @property
    def allowance(self) -> float:
        return self.bound + self.measure_term + self.tail_term + self.truncation_term


def exact_pgf_gap(
    cloud: InitialCloud,
    model: SurvivalModel,
    tau: float,
    s: float,
    a: float | None = None,
) -> PgfGap:
    """Exact log-PGF of the survivor count against the Poisson limit.

    Returns log prod(1 - u_k (1 - s)), -a (1 - s), the quadratic remainder
    bound sum (u_k (1 - s))^2 (valid with constant 1 while u_k <= 1/2), and
    the two first-order discrepancies: the measure term
    |exp(-tau l1 / 2) sum F(x_k) - a| (1 - s) and the higher-mode tail
    |sum u_k - exp(-tau l1 / 2) sum F(x_k)| (1 - s).
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if tau != cloud.tau:
        raise ValueError(f"cloud was built for tau={cloud.tau}, not {tau}")
    pm = principal_mode(model.spectrum)
    if a is None:
        a = poisson_parameter(pm, cloud.measure)
    u, cert = survival_at_cloud(model, cloud)
    if len(u) and u.max() > 0.5:
        raise ValueError(
            f"max survival {u.max():.3g} > 1/2: the remainder constant 1 is not valid; "
            "increase tau"
        )
    z = u * (1.0 - s)
    exact = float(np.sum(np.log1p(-z)))
    principal = cloud.scale_factor * float(np.sum(pm(cloud.points))) if len(u) else 0.0
    return PgfGap(
        s=s,
        exact=exact,
        poisson=-a * (1.0 - s),
        bound=float(np.sum(z * z)),
        measure_term=abs(principal - a) * (1.0 - s),
        tail_term=abs(float(u.sum()) - principal) * (1.0 - s),
        truncation_term=len(u) * cert * (1.0 - s),
    )


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    tau: float
    mode: str
    trials: int
    seed: int
    n_particles: int
    a: float
    expected_mean: float
    counts: np.ndarray
    empirical: DiscreteDistribution
    poisson: DiscreteDistribution
    tv_distance: float
    tv_stderr: float
    chi_square: ChiSquareResult | None
    mean: float
    variance: float
    mean_stderr: float
    variance_stderr: float
    sum_u_sq_ratio: float
    pgf_gap_s0: float | None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        chi = self.chi_square
        return {
            "tau": self.tau,
            "mode": self.mode,
            "trials": self.trials,
            "seed": self.seed,
            "n_particles": self.n_particles,
            "a": self.a,
            "expected_mean": self.expected_mean,
            "mean": self.mean,
            "mean_stderr": self.mean_stderr,
            "variance": self.variance,
            "variance_stderr": self.variance_stderr,
            "tv_distance": self.tv_distance,
            "tv_stderr": self.tv_stderr,
            "chi_square": None if chi is None else {
                "statistic": chi.statistic, "dof": chi.dof, "p_value": chi.p_value,
            },
            "sum_u_sq_ratio": self.sum_u_sq_ratio,
            "pgf_gap_s0": self.pgf_gap_s0,
            "k_max": self.empirical.k_max,
            "empirical_pmf": [float(p) for p in self.empirical.probs],
            "empirical_tail": self.empirical.tail,
            "poisson_pmf": [float(p) for p in self.poisson.probs],
            "poisson_tail": self.poisson.tail,
            "counts": [int(c) for c in self.counts],
            **self.extra,
        }


def run_trials(
    cloud: InitialCloud,
    model: SurvivalModel,
    mode: str,
    trials: int,
    seed: int,
    spec: DiffusionSpec | None = None,
    dt: float | None = None,
    bridge: bool = True,
    a: float | None = None,
    n_boot: int = 200,
) -> ExperimentReport:
    """Repeat the survivor count ``trials`` times and compare with Poisson(a)."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if trials < 1:
        raise ValueError("need at least one trial")
    pm = principal_mode(model.spectrum)
    if a is None:
        a = poisson_parameter(pm, cloud.measure)
    tau = cloud.tau

    u = None
    try:
        u, _ = survival_at_cloud(model, cloud)
    except ValueError:
        if mode == "thinning":
            raise
    counts = np.empty(trials, dtype=np.int64)
    if mode == "thinning":
        for t in range(trials):
            counts[t] = thinning_count(u, numpy_generator(seed, t))
    else:
        if spec is None or dt is None:
            raise ValueError("sde mode needs a diffusion spec and dt")
        for t in range(trials):
            counts[t] = survive_ensemble(spec, cloud.domain, cloud, tau, dt, seed, t, bridge)

    k_max = default_k_max(a)
    empirical = empirical_distribution(counts, k_max)
    reference = poisson_pmf(a, k_max)
    tv = tv_distance(empirical, reference)
    tv_se = tv_standard_error(counts, reference, numpy_generator(seed, 0xB007), n_boot)
    try:
        chi = chi_square_gof(np.bincount(counts), reference)
    except ValueError:
        chi = None
    n = trials
    mean = float(counts.mean())
    var = float(counts.var(ddof=1)) if n > 1 else 0.0
    m4 = float(np.mean((counts - mean) ** 4))
    var_pop = float(counts.var())
    mean_se = math.sqrt(var / n) if n > 1 else math.inf
    var_se = math.sqrt(max(m4 - var_pop**2, 0.0) / n) if n > 1 else math.inf

    if u is not None and u.sum() > 0:
        expected_mean = float(u.sum())
        ratio = float(np.sum(u * u) / u.sum())
        try:
            gap = exact_pgf_gap(cloud, model, tau, 0.0, a).gap
        except ValueError:
            gap = None
    else:
        expected_mean, ratio, gap = math.nan, math.nan, None
    return ExperimentReport(
        tau=tau, mode=mode, trials=trials, seed=seed, n_particles=len(cloud), a=a,
        expected_mean=expected_mean, counts=counts, empirical=empirical, poisson=reference,
        tv_distance=tv, tv_stderr=tv_se, chi_square=chi, mean=mean, variance=var,
        mean_stderr=mean_se, variance_stderr=var_se, sum_u_sq_ratio=ratio, pgf_gap_s0=gap,
    )


def convergence_sweep(
    domain: Domain,
    nu: Measure,
    taus: Sequence[float],
    trials: int,
    mode: str,
    model: SurvivalModel,
    seed: int,
    scheme: str = "grid",
    spec: DiffusionSpec | None = None,
    dt: float | None = None,
    max_count: int = DEFAULT_MAX_COUNT,
) -> list[dict]:
    """One row per tau: TV distance, mean, variance and PGF gap."""
    lam1 = float(model.spectrum.lambdas[0])
    a = poisson_parameter(principal_mode(model.spectrum), nu)
    rows = []
    for tau in taus:
        cloud = build_cloud(domain, nu, tau, lam1, scheme, seed, max_count)
        rep = run_trials(cloud, model, mode, trials, seed, spec, dt, a=a)
        rows.append({
            "tau": tau,
            "n_particles": rep.n_particles,
            "a": a,
            "tv_distance": rep.tv_distance,
            "tv_stderr": rep.tv_stderr,
            "mean": rep.mean,
            "mean_stderr": rep.mean_stderr,
            "variance": rep.variance,
            "variance_stderr": rep.variance_stderr,
            "dispersion": rep.variance / rep.mean if rep.mean > 0 else math.nan,
            "expected_mean": rep.expected_mean,
            "pgf_gap_s0": rep.pgf_gap_s0,
            "sum_u_sq_ratio": rep.sum_u_sq_ratio,
        })
    return rows
