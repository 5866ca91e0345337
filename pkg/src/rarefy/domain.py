"""Canonical planar domains: a disk centred at the origin and an axis-aligned
rectangle with a corner at the origin.

Boundary points count as outside: survival is zero on the boundary, so a
particle sitting on it is already absorbed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


def _as_points(point) -> tuple[np.ndarray, bool]:
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError(f"points must have trailing dimension 2, got shape {p.shape}")
    return p, p.ndim == 1


@dataclass(frozen=True)
class Disk:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def signed_distance(self, point):
        p, scalar = _as_points(point)
        d = self.radius - np.hypot(p[..., 0], p[..., 1])
        return float(d) if scalar else d

    def contains(self, point):
        d = self.signed_distance(point)
        return d > 0

    def bounding_box(self) -> tuple[float, float, float, float]:
        r = self.radius
        return (-r, r, -r, r)


@dataclass(frozen=True)
class Rectangle:
    side_x: float
    side_y: float

    def __post_init__(self):
        if not (self.side_x > 0 and self.side_y > 0):
            raise ValueError(
                f"rectangle sides must be positive, got {self.side_x} x {self.side_y}"
            )

    @property
    def area(self) -> float:
        return self.side_x * self.side_y

    def face_distances(self, point) -> np.ndarray:
        """Signed distances to the faces x=0, x=a_x, y=0, y=a_y (last axis)."""
        p, _ = _as_points(point)
        x, y = p[..., 0], p[..., 1]
        return np.stack([x, self.side_x - x, y, self.side_y - y], axis=-1)

    def signed_distance(self, point):
        p, scalar = _as_points(point)
        d = self.face_distances(p).min(axis=-1)
        return float(d) if scalar else d

    def contains(self, point):
        d = self.signed_distance(point)
        return d > 0

    def bounding_box(self) -> tuple[float, float, float, float]:
        return (0.0, self.side_x, 0.0, self.side_y)


Domain = Union[Disk, Rectangle]


def contains(domain: Domain, point):
    """True iff ``point`` lies strictly inside ``domain``."""
    return domain.contains(point)


def signed_distance(domain: Domain, point):
    """Positive inside, zero on the boundary, negative outside."""
    return domain.signed_distance(point)


@dataclass(frozen=True)
class RingPartition:
    """Concentric rings K_i = {r i/n <= |x| < r (i+1)/n}, i = 0..n-1."""

    radius: float
    n: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.n < 1:
            raise ValueError("ring count must be >= 1")

    @property
    def boundaries(self) -> np.ndarray:
        return self.radius * np.arange(self.n + 1) / self.n

    def g(self, rho):
        """Area of the disk of relative radius ``rho`` in [0, 1]."""
        return math.pi * self.radius**2 * np.asarray(rho) ** 2

    def ring_measure(self, i: int) -> float:
        if not 0 <= i < self.n:
            raise IndexError(f"ring index {i} out of range for n={self.n}")
        return float(self.g((i + 1) / self.n) - self.g(i / self.n))

    def measures(self) -> np.ndarray:
        rho = np.arange(self.n + 1) / self.n
        return np.diff(self.g(rho))

    def ring_index(self, point) -> np.ndarray:
        """Index of the ring containing each point; -1 outside the disk."""
        p, _ = _as_points(point)
        rho = np.hypot(p[..., 0], p[..., 1]) / self.radius
        idx = np.floor(rho * self.n).astype(int)
        return np.where(rho < 1.0, idx, -1)

    def gauss_nodes(self, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
        """Radial nodes and weights for integrals of radial functions.

        Gauss-Legendre with ``order`` points inside every ring, weights
        already include the 2 pi rho Jacobian, so ``sum(w * f(rho))``
        approximates the area integral of a radial function ``f``.
        """
        x, w = np.polynomial.legendre.leggauss(order)
        edges = self.boundaries
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        rho = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel() * 2.0 * math.pi * rho
        return rho, weights


def ring_measure(partition: RingPartition, i: int) -> float:
    return partition.ring_measure(i)
