"""Euler-Maruyama simulation of dX = diag(sigma_x, sigma_y) dW with absorption
at the domain boundary, plus Monte Carlo survival estimators.

With additive noise and no drift each Euler step is exact in law; the only
discretisation error is missed boundary excursions between grid times. The
optional Brownian-bridge test absorbs a step whose endpoints are both inside
with probability exp(-2 d1 d2 / (s^2 h)), the crossing probability for a
straight boundary at distances d1, d2 with normal noise scale s.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .domain import Disk, Domain, Rectangle
from .rng import LANE_BRIDGE, RngStream, gaussian_pair, uniform_pair
from .stats import wilson_interval

_DISK, _RECT = 0, 1

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@dataclass(frozen=True)
class DiffusionSpec:
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("noise scales must be positive")

    @classmethod
    def isotropic(cls, sigma: float) -> "DiffusionSpec":
        return cls(sigma, sigma)

    def validate(self, domain: Domain) -> None:
        if isinstance(domain, Disk) and self.sigma_x != self.sigma_y:
            raise ValueError("the disk requires isotropic noise (sigma_x == sigma_y)")


@dataclass(frozen=True)
class ParticleOutcome:
    absorbed: bool
    absorption_time: float | None
    final_position: tuple[float, float] | None


@dataclass(frozen=True)
class BatchOutcome:
    absorbed: np.ndarray
    absorption_time: np.ndarray  # nan for survivors
    final_position: np.ndarray  # nan rows for absorbed particles

    @property
    def survivors(self) -> int:
        return int(np.count_nonzero(~self.absorbed))


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    ci_low: float
    ci_high: float
    n: int

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n": self.n,
        }


def _geometry(domain: Domain) -> tuple[int, float, float]:
    if isinstance(domain, Disk):
        return _DISK, domain.radius, 0.0
    if isinstance(domain, Rectangle):
        return _RECT, domain.side_x, domain.side_y
    raise TypeError(f"unsupported domain {domain!r}")


@numba.njit(cache=True, inline="always")
def _distance(kind, p0, p1, sx, sy, x, y):
    """Signed distance to the boundary and the noise scale normal to it."""
    if kind == _DISK:
        return p0 - math.sqrt(x * x + y * y), sx
    d = x
    s = sx
    if p0 - x < d:
        d = p0 - x
    if y < d:
        d = y
        s = sy
    if p1 - y < d:
        d = p1 - y
        s = sy
    return d, s


@numba.njit(cache=True, parallel=True)
def _simulate(kind, p0, p1, sx, sy, starts, particle_ids, n_steps, dt, last_dt,
              seed, trial, bridge, absorbed, times, finals):
    n = starts.shape[0]
    for i in numba.prange(n):
        pid = particle_ids[i]
        x = starts[i, 0]
        y = starts[i, 1]
        d, s = _distance(kind, p0, p1, sx, sy, x, y)
        absorbed[i] = False
        times[i] = np.nan
        if d <= 0.0:
            absorbed[i] = True
            times[i] = 0.0
        t = 0.0
        step = 0
        while not absorbed[i] and step < n_steps:
            h = last_dt if step == n_steps - 1 else dt
            sq = math.sqrt(h)
            z1, z2 = gaussian_pair(seed, trial, pid, step)
            xn = x + sx * sq * z1
            yn = y + sy * sq * z2
            dn, _ = _distance(kind, p0, p1, sx, sy, xn, yn)
            t += h
            if dn <= 0.0:
                absorbed[i] = True
                times[i] = t
            elif bridge:
                p_cross = math.exp(-2.0 * d * dn / (s * s * h))
                # u > 0 always, so the draw is only needed when p_cross > 0
                if p_cross > 0.0:
                    u, _ = uniform_pair(seed, trial, pid, step, LANE_BRIDGE)
                    if u <= p_cross:
                        absorbed[i] = True
                        times[i] = t
            x, y = xn, yn
            d, s = _distance(kind, p0, p1, sx, sy, x, y)
            step += 1
        if absorbed[i]:
            finals[i, 0] = np.nan
            finals[i, 1] = np.nan
        else:
            finals[i, 0] = x
            finals[i, 1] = y


def time_grid(tau: float, dt: float) -> tuple[int, float]:
    """Number of steps and the length of the (possibly shortened) last one."""
    if tau < 0 or dt <= 0:
        raise ValueError("need tau >= 0 and dt > 0")
    if tau == 0:
        return 0, dt
    n_full = math.floor(tau / dt * (1 + 1e-12))
    rest = tau - n_full * dt
    if rest > 1e-12 * tau:
        return n_full + 1, rest
    return n_full, dt


def simulate_batch(
    spec: DiffusionSpec,
    domain: Domain,
    starts,
    tau: float,
    dt: float,
    seed: int,
    trial: int = 0,
    particle_ids: Sequence[int] | None = None,
    bridge: bool = True,
) -> BatchOutcome:
    """Simulate many particles; particle ``i`` uses stream (seed, trial, ids[i])."""
    spec.validate(domain)
    RngStream(seed, trial)
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(starts, dtype=float)))
    if np.any(domain.signed_distance(pts) < 0):
        raise ValueError("start points must lie in the closed domain")
    ids = (np.arange(len(pts), dtype=np.int64) if particle_ids is None
           else np.ascontiguousarray(particle_ids, dtype=np.int64))
    if len(ids) != len(pts):
        raise ValueError("one particle id per start point")
    n_steps, last_dt = time_grid(tau, dt)
    kind, p0, p1 = _geometry(domain)
    absorbed = np.empty(len(pts), dtype=np.bool_)
    times = np.empty(len(pts))
    finals = np.empty((len(pts), 2))
    _simulate(kind, p0, p1, spec.sigma_x, spec.sigma_y, pts, ids, n_steps, dt, last_dt,
              np.uint64(seed), np.uint64(trial), bridge, absorbed, times, finals)
    return BatchOutcome(absorbed, times, finals)


def simulate_particle(
    spec: DiffusionSpec,
    domain: Domain,
    start,
    tau: float,
    dt: float,
    rng: RngStream,
    bridge: bool = True,
) -> ParticleOutcome:
    if dt > tau > 0:
        raise ValueError("dt must not exceed tau")
    out = simulate_batch(spec, domain, [start], tau, dt, rng.seed, rng.trial,
                         [rng.particle], bridge)
    if out.absorbed[0]:
        return ParticleOutcome(True, float(out.absorption_time[0]), None)
    return ParticleOutcome(False, None, (float(out.final_position[0, 0]),
                                        float(out.final_position[0, 1])))


def mc_survival(
    spec: DiffusionSpec,
    domain: Domain,
    start,
    tau: float,
    dt: float,
    n_paths: int,
    seed: int,
    bridge: bool = True,
    level: float = 0.95,
    chunk: int = 1_000_000,
) -> McEstimate:
    """Fraction of ``n_paths`` independent paths from ``start`` alive at ``tau``."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    survivors = 0
    for lo in range(0, n_paths, chunk):
        ids = np.arange(lo, min(lo + chunk, n_paths), dtype=np.int64)
        starts = np.broadcast_to(np.asarray(start, dtype=float), (len(ids), 2))
        survivors += simulate_batch(spec, domain, starts, tau, dt, seed, 0, ids, bridge).survivors
    p = survivors / n_paths
    low, high = wilson_interval(survivors, n_paths, level)
    return McEstimate(p, math.sqrt(p * (1 - p) / n_paths), low, high, n_paths)


def survive_ensemble(
    spec: DiffusionSpec,
    domain: Domain,
    cloud,
    tau: float,
    dt: float,
    seed: int,
    trial: int = 0,
    bridge: bool = True,
) -> int:
    """Survivor count for one trial; particle k uses stream (seed, trial, k)."""
    points = getattr(cloud, "points", cloud)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return 0
    if not np.all(domain.contains(points)):
        raise ValueError("cloud points must lie inside the domain")
    return simulate_batch(spec, domain, points, tau, dt, seed, trial, None, bridge).survivors
