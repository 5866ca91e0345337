"""Limit measures for the initial particle cloud and the quadrature used to
integrate against them.

Three kinds are supported: a multiple of Lebesgue measure, Lebesgue measure
weighted ring by ring on a disk, and Lebesgue measure with a density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .domain import Disk, Domain, Rectangle, RingPartition

QUAD_RINGS = 4096
QUAD_ANGLES = 256
QUAD_CELLS = 1024


class UnsupportedMeasure(ValueError):
    pass


@dataclass(frozen=True)
class Lebesgue:
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("measure scale must be non-negative")


@dataclass(frozen=True)
class RingWeighted:
    """sum_i weights[i] * Lebesgue restricted to ring K_{n,i} of a disk."""

    n: int
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != self.n:
            raise ValueError(f"need {self.n} ring weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ValueError("ring weights must be non-negative")

    def partition(self, disk: Disk) -> RingPartition:
        return RingPartition(disk.radius, self.n)


@dataclass(frozen=True)
class Density:
    """Lebesgue measure with a non-negative density ``func(points) -> values``."""

    func: Callable[[np.ndarray], np.ndarray]
    label: str = "density"


Measure = Union[Lebesgue, RingWeighted, Density]


def quadrature_nodes(domain: Domain, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Points (M, 2) and weights (M,) of a product rule on ``domain``.

    Disk: the concentric ring partition with two Gauss points per ring in the
    radius, times a uniform angular rule (exact for trigonometric polynomials
    up to degree QUAD_ANGLES - 1). Rectangle: two Gauss points per cell in each
    direction.
    """
    if isinstance(domain, Disk):
        rings = RingPartition(domain.radius, n or QUAD_RINGS)
        rho, w_rho = rings.gauss_nodes(2)
        theta = 2.0 * math.pi * (np.arange(QUAD_ANGLES) + 0.5) / QUAD_ANGLES
        pts = np.stack(
            [np.outer(rho, np.cos(theta)), np.outer(rho, np.sin(theta))], axis=-1
        ).reshape(-1, 2)
        w = np.repeat(w_rho / QUAD_ANGLES, QUAD_ANGLES)
        return pts, w
    if isinstance(domain, Rectangle):
        x, wx = gauss_1d(domain.side_x, n or QUAD_CELLS)
        y, wy = gauss_1d(domain.side_y, n or QUAD_CELLS)
        pts = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1).reshape(-1, 2)
        return pts, np.outer(wx, wy).ravel()
    raise TypeError(f"unknown domain {domain!r}")


def gauss_1d(length: float, cells: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite two-point Gauss rule on [0, length]."""
    x, w = np.polynomial.legendre.leggauss(2)
    h = length / cells
    mid = (np.arange(cells) + 0.5) * h
    nodes = (mid[:, None] + 0.5 * h * x[None, :]).ravel()
    weights = np.tile(0.5 * h * w, cells)
    return nodes, weights


def density_values(domain: Domain, nu: Measure, points: np.ndarray) -> np.ndarray:
    """Density of ``nu`` with respect to Lebesgue measure at ``points``."""
    points = np.asarray(points, dtype=float)
    if isinstance(nu, Lebesgue):
        return np.full(points.shape[:-1], nu.scale)
    if isinstance(nu, RingWeighted):
        if not isinstance(domain, Disk):
            raise UnsupportedMeasure("ring-weighted measures need a disk domain")
        idx = nu.partition(domain).ring_index(points)
        w = np.asarray(nu.weights, dtype=float)
        return np.where(idx >= 0, w[np.clip(idx, 0, nu.n - 1)], 0.0)
    if isinstance(nu, Density):
        return np.asarray(nu.func(points), dtype=float)
    raise UnsupportedMeasure(f"unsupported measure {nu!r}")


def integrate(domain: Domain, nu: Measure, func=None) -> float:
    """Quadrature of ``func`` (default 1) against ``nu`` over ``domain``."""
    if isinstance(nu, RingWeighted) and isinstance(domain, Disk):
        # integrate ring by ring so the density jumps fall on node-free edges
        total = 0.0
        per_ring = max(1, QUAD_RINGS // nu.n)
        for i, w in enumerate(nu.weights):
            if w == 0.0:
                continue
            lo, hi = domain.radius * i / nu.n, domain.radius * (i + 1) / nu.n
            pts, wts = _annulus_nodes(lo, hi, per_ring)
            vals = np.ones(len(wts)) if func is None else func(pts)
            total += w * float(np.dot(wts, vals))
        return total
    pts, wts = quadrature_nodes(domain)
    dens = density_values(domain, nu, pts)
    vals = dens if func is None else dens * func(pts)
    return float(np.dot(wts, vals))


def _annulus_nodes(lo: float, hi: float, rings: int):
    edges = np.linspace(lo, hi, rings + 1)
    x, w = np.polynomial.legendre.leggauss(2)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    rho = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w_rho = (half[:, None] * w[None, :]).ravel() * 2.0 * math.pi * rho
    theta = 2.0 * math.pi * (np.arange(QUAD_ANGLES) + 0.5) / QUAD_ANGLES
    pts = np.stack(
        [np.outer(rho, np.cos(theta)), np.outer(rho, np.sin(theta))], axis=-1
    ).reshape(-1, 2)
    return pts, np.repeat(w_rho / QUAD_ANGLES, QUAD_ANGLES)


def total_mass(domain: Domain, nu: Measure) -> float:
    """nu(Q); closed form where available."""
    if isinstance(nu, Lebesgue):
        return nu.scale * domain.area
    if isinstance(nu, RingWeighted):
        if not isinstance(domain, Disk):
            raise UnsupportedMeasure("ring-weighted measures need a disk domain")
        return float(np.dot(nu.weights, nu.partition(domain).measures()))
    return integrate(domain, nu)
