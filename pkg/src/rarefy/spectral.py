"""Dirichlet spectra of A = sum sigma_ij d_i d_j on the disk and the rectangle,
the survival-probability series built on them, and truncation certificates.

Eigenvalues are those of -A, so the survival series decays like
``exp(-t * lambda_k / 2)`` (the generator of dX = sigma dW is A / 2).

The disk spectrum keeps only the angular-order-zero modes. The constant
initial condition is radially symmetric, so every other mode has a zero
coefficient and contributes nothing to u, F, a or the Parseval sum for 1.
Its mode list is therefore *not* the full Dirichlet spectrum of the disk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .domain import Disk, Domain, Rectangle, RingPartition
from .measures import (
    Density,
    Lebesgue,
    Measure,
    RingWeighted,
    UnsupportedMeasure,
    integrate,
)
from .special import BesselRootTable, bessel_j0, bessel_j1, j0_roots

DEFAULT_CAP = 1e-6
TAIL_WINDOW = 10
MAX_DISK_MODES = 200_000
_SERIES_BLOCK = 1 << 22

# consecutive J0 zeros are at least this far apart (the first gap, 3.1153,
# is the smallest; gaps increase towards pi)
_J0_MIN_GAP = 3.0


class UncertifiedRegimeError(ValueError):
    """The truncated series cannot be certified below the configured cap."""

    def __init__(self, t: float, bound: float, cap: float, t_min: float):
        self.t = t
        self.bound = bound
        self.cap = cap
        self.t_min = t_min
        super().__init__(
            f"t={t:g} is below t_min={t_min:.6g}: truncation bound {bound:.3g} "
            f"exceeds cap {cap:.3g}"
        )


@dataclass(frozen=True)
class Mode:
    eigenvalue: float
    coefficient: float
    sup_norm: float
    label: tuple[int, ...]


class Spectrum:
    """Ordered modes with non-zero coefficient for the unit initial condition.

    Subclasses provide ``lambdas``, ``coeffs``, ``sup_norms``, ``labels`` and
    ``eigenfunctions(points) -> (..., K)``.
    """

    domain: Domain
    lambdas: np.ndarray
    coeffs: np.ndarray
    sup_norms: np.ndarray
    labels: list

    @property
    def size(self) -> int:
        return len(self.lambdas)

    def __len__(self) -> int:
        return self.size

    @property
    def modes(self) -> list[Mode]:
        return [
            Mode(float(l), float(c), float(s), tuple(lab))
            for l, c, s, lab in zip(self.lambdas, self.coeffs, self.sup_norms, self.labels)
        ]

    @cached_property
    def multiplicities(self) -> np.ndarray:
        """Number of stored modes sharing each mode's eigenvalue."""
        lam = self.lambdas
        close = np.isclose(lam[:, None], lam[None, :], rtol=1e-12, atol=0.0)
        return close.sum(axis=1)

    @property
    def principal_count(self) -> int:
        return int(self.multiplicities[0])

    def survival_terms(self, t: float, points) -> np.ndarray:
        return self.eigenfunctions(points) * (self.coeffs * np.exp(-0.5 * t * self.lambdas))

    def series(self, t: float, points):
        """Partial sum of the survival series at ``points`` (no certificate)."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        total = np.empty(len(flat))
        # bound the (points, modes) temporaries for very large clouds
        step = max(1, _SERIES_BLOCK // max(self.size, 1))
        for lo in range(0, len(flat), step):
            total[lo:lo + step] = self.survival_terms(t, flat[lo:lo + step]).sum(axis=-1)
        out = np.where(self.domain.contains(flat), total, 0.0).reshape(pts.shape[:-1])
        return float(out) if out.ndim == 0 else out

    def tail_bound(self, t: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DiskSpectrum(Spectrum):
    domain: Disk
    sigma: float
    roots: np.ndarray

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def radius(self) -> float:
        return self.domain.radius

    @cached_property
    def lambdas(self) -> np.ndarray:
        return (self.sigma * self.roots / self.radius) ** 2

    @cached_property
    def _j1_at_roots(self) -> np.ndarray:
        return bessel_j1(self.roots)

    @cached_property
    def coeffs(self) -> np.ndarray:
        return 2.0 * math.sqrt(math.pi) * self.radius / self.roots

    @cached_property
    def _norms(self) -> np.ndarray:
        return math.sqrt(math.pi) * self.radius * np.abs(self._j1_at_roots)

    @cached_property
    def sup_norms(self) -> np.ndarray:
        # |J0| <= 1 with equality at the centre
        return 1.0 / self._norms

    @cached_property
    def labels(self) -> list:
        return [(0, m) for m in range(1, self.size + 1)]

    def radial(self, rho) -> np.ndarray:
        """Eigenfunctions as functions of the radius, shape (..., K)."""
        rho = np.asarray(rho, dtype=float)
        arg = np.abs(rho)[..., None] * (self.roots / self.radius)
        # sign chosen so every coefficient is positive
        sign = np.sign(self._j1_at_roots)
        return bessel_j0(arg) * (sign / self._norms)

    def eigenfunctions(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return self.radial(np.hypot(p[..., 0], p[..., 1]))

    @cached_property
    def _tail_window(self) -> "DiskSpectrum":
        return disk_spectrum(self.radius, self.sigma, (TAIL_WINDOW + 1) * self.size + 1)

    def tail_bound(self, t: float) -> float:
        K = self.size
        ext = self._tail_window
        amp = ext.coeffs * ext.sup_norms
        window = slice(K, (TAIL_WINDOW + 1) * K)
        explicit = float(np.sum(amp[window] * np.exp(-0.5 * t * ext.lambdas[window])))
        # modes beyond the window: mu_k >= mu_L + gap (k - L), amplitude decreasing
        mu_l = ext.roots[-1]
        lam_l = ext.lambdas[-1]
        scale = (self.sigma / self.radius) ** 2
        q = math.exp(-_J0_MIN_GAP * t * scale * mu_l)
        majorant = float(amp[K:].max()) * math.exp(-0.5 * t * lam_l) / (1.0 - q)
        return explicit + majorant


_DISK_CACHE: dict[int, BesselRootTable] = {}


def _root_table(K: int) -> BesselRootTable:
    for size, table in _DISK_CACHE.items():
        if size >= K:
            return table
    table = j0_roots(max(K, 64))
    _DISK_CACHE.clear()
    _DISK_CACHE[len(table)] = table
    return table


def disk_spectrum(r: float, sigma: float, K: int) -> DiskSpectrum:
    """Radial Dirichlet modes of a disk of radius ``r``.

    lambda_m = (sigma mu_m / r)^2, f_m(x) = J0(mu_m |x| / r) / (sqrt(pi) r |J1(mu_m)|),
    c_m = 2 sqrt(pi) r / mu_m, where mu_m is the m-th zero of J0.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if K > MAX_DISK_MODES:
        raise ValueError(f"K={K} exceeds the root-table capacity {MAX_DISK_MODES}")
    roots = np.array(_root_table(K).roots[:K])
    roots.setflags(write=False)
    return DiskSpectrum(domain=Disk(r), sigma=sigma, roots=roots)


def _odd_axis_sum(alpha: float, t: float, m0: int) -> float:
    """Upper bound for sum over odd m >= m0 of (4 / (pi m)) exp(-t alpha m^2 / 2).

    Uses m^2 - m0^2 >= 2 m0 (m - m0) to dominate by a geometric series.
    """
    first = 4.0 / (math.pi * m0) * math.exp(-0.5 * t * alpha * m0 * m0)
    q = math.exp(-2.0 * t * alpha * m0)
    return first / (1.0 - q)


@dataclass(frozen=True, eq=False)
class RectangleSpectrum(Spectrum):
    domain: Rectangle
    sigma_x: float
    sigma_y: float
    m: np.ndarray
    n: np.ndarray
    max_index: int | None = None

    @property
    def _alpha(self) -> float:
        return (self.sigma_x * math.pi / self.domain.side_x) ** 2

    @property
    def _beta(self) -> float:
        return (self.sigma_y * math.pi / self.domain.side_y) ** 2

    @cached_property
    def lambdas(self) -> np.ndarray:
        return self._alpha * self.m**2 + self._beta * self.n**2

    @cached_property
    def coeffs(self) -> np.ndarray:
        area = self.domain.area
        return 8.0 * math.sqrt(area) / (math.pi**2 * self.m * self.n)

    @cached_property
    def sup_norms(self) -> np.ndarray:
        return np.full(self.size, 2.0 / math.sqrt(self.domain.area))

    @cached_property
    def labels(self) -> list:
        return [(int(a), int(b)) for a, b in zip(self.m, self.n)]

    def eigenfunctions(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        kx = self.m * (math.pi / self.domain.side_x)
        ky = self.n * (math.pi / self.domain.side_y)
        sx = np.sin(p[..., 0][..., None] * kx)
        sy = np.sin(p[..., 1][..., None] * ky)
        return (2.0 / math.sqrt(self.domain.area)) * sx * sy

    @cached_property
    def _tail_window(self) -> "RectangleSpectrum":
        return rectangle_spectrum(
            self.domain.side_x, self.domain.side_y, self.sigma_x, self.sigma_y,
            (TAIL_WINDOW + 1) * self.size,
        )

    def _box_tail(self, t: float, m0: int) -> float:
        # modes with m >= m0 or n >= m0
        ax, by = self._alpha, self._beta
        return (
            _odd_axis_sum(ax, t, m0) * _odd_axis_sum(by, t, 1)
            + _odd_axis_sum(ax, t, 1) * _odd_axis_sum(by, t, m0)
        )

    def tail_bound(self, t: float) -> float:
        if self.max_index is not None:
            return self._box_tail(t, self.max_index + 2)
        K = self.size
        ext = self._tail_window
        amp = ext.coeffs * ext.sup_norms
        window = slice(K, None)
        explicit = float(np.sum(amp[window] * np.exp(-0.5 * t * ext.lambdas[window])))
        # every mode beyond the window has lambda >= lam_l, hence
        # alpha m^2 >= lam_l / 2 or beta n^2 >= lam_l / 2
        lam_l = float(ext.lambdas[-1])
        mx = _next_odd(math.sqrt(0.5 * lam_l / self._alpha))
        ny = _next_odd(math.sqrt(0.5 * lam_l / self._beta))
        ax, by = self._alpha, self._beta
        majorant = (
            _odd_axis_sum(ax, t, mx) * _odd_axis_sum(by, t, 1)
            + _odd_axis_sum(ax, t, 1) * _odd_axis_sum(by, t, ny)
        )
        return explicit + majorant


def _next_odd(x: float) -> int:
    k = max(1, math.floor(x))
    return k if k % 2 else k + 1


def rectangle_spectrum(
    a_x: float,
    a_y: float,
    sigma_x: float,
    sigma_y: float,
    K: int | None = None,
    max_index: int | None = None,
) -> RectangleSpectrum:
    """Separable modes of an a_x-by-a_y rectangle with diagonal diffusion.

    Only odd (m, n) carry a non-zero coefficient for the unit initial
    condition. Either the ``K`` lowest such modes are kept, or (with
    ``max_index``) every odd pair with m, n <= max_index.
    """
    for v in (a_x, a_y, sigma_x, sigma_y):
        if not v > 0:
            raise ValueError("rectangle sides and diffusion scales must be positive")
    alpha = (sigma_x * math.pi / a_x) ** 2
    beta = (sigma_y * math.pi / a_y) ** 2
    if max_index is not None:
        odd = np.arange(1, max_index + 1, 2)
        mm, nn = np.meshgrid(odd, odd, indexing="ij")
    else:
        if K is None or K < 1:
            raise ValueError("K must be >= 1")
        # K lowest odd pairs lie within this box: lambda_K <= lambda(2K-1, 1)
        lam_cap = alpha * (2 * K - 1) ** 2 + beta
        mx = int(math.sqrt(lam_cap / alpha)) + 2
        ny = int(math.sqrt(lam_cap / beta)) + 2
        mm, nn = np.meshgrid(np.arange(1, mx + 1, 2), np.arange(1, ny + 1, 2), indexing="ij")
    mm, nn = mm.ravel(), nn.ravel()
    lam = alpha * mm**2 + beta * nn**2
    order = np.lexsort((nn, mm, lam))
    if max_index is None:
        order = order[:K]
    return RectangleSpectrum(
        domain=Rectangle(a_x, a_y),
        sigma_x=sigma_x,
        sigma_y=sigma_y,
        m=mm[order].astype(float),
        n=nn[order].astype(float),
        max_index=max_index,
    )


def parseval_defect(spectrum: Spectrum) -> float:
    """|Q| minus the partial Parseval sum of the stored coefficients."""
    return float(spectrum.domain.area - np.sum(spectrum.coeffs**2))


def truncation_bound(model: "SurvivalModel | Spectrum", t: float) -> float:
    """Uniform bound on |u(t, x) - u_K(t, x)| over the domain."""
    if t <= 0:
        raise ValueError("truncation bound needs t > 0")
    spectrum = model.spectrum if isinstance(model, SurvivalModel) else model
    return spectrum.tail_bound(t)


class SurvivalEstimate(NamedTuple):
    value: np.ndarray | float
    bound: float


@dataclass(frozen=True, eq=False)
class SurvivalModel:
    spectrum: Spectrum
    cap: float = DEFAULT_CAP

    def truncation_bound(self, t: float) -> float:
        return truncation_bound(self, t)

    @cached_property
    def t_min(self) -> float:
        """Smallest t whose truncation bound is at most ``cap``."""
        hi = 1e-3
        while self.truncation_bound(hi) > self.cap:
            hi *= 2.0
        lo = hi / 2.0
        if hi == 1e-3:
            lo = 1e-12
            if self.truncation_bound(lo) <= self.cap:
                return lo
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if self.truncation_bound(mid) > self.cap:
                lo = mid
            else:
                hi = mid
            if hi / lo - 1.0 < 1e-12:
                break
        return hi

    def check(self, t: float) -> float:
        if t <= 0:
            raise UncertifiedRegimeError(t, math.inf, self.cap, self.t_min)
        bound = self.truncation_bound(t)
        if bound > self.cap:
            raise UncertifiedRegimeError(t, bound, self.cap, self.t_min)
        return bound

    def survival(self, t: float, points) -> SurvivalEstimate:
        bound = self.check(t)
        return SurvivalEstimate(self.spectrum.series(t, points), bound)


def survival_probability(model: SurvivalModel, t: float, x) -> SurvivalEstimate:
    """Raw partial sum of the survival series with its uniform error bound.

    Points outside the open domain (including the boundary) get 0. The value
    is not clamped to [0, 1].
    """
    return model.survival(t, x)


@dataclass(frozen=True, eq=False)
class PrincipalMode:
    spectrum: Spectrum
    coefficients: np.ndarray
    max_value: float
    argmax: tuple[float, float]

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        n1 = len(self.coefficients)
        vals = self.spectrum.eigenfunctions(pts)[..., :n1] @ self.coefficients
        vals = np.where(self.spectrum.domain.contains(pts), vals, 0.0)
        return float(vals) if vals.ndim == 0 else vals

    @property
    def eigenvalue(self) -> float:
        return float(self.spectrum.lambdas[0])


def principal_mode(spectrum: Spectrum) -> PrincipalMode:
    """F = sum of c_1i f_1i over the first eigenspace, with its maximum."""
    if spectrum.size < 1:
        raise ValueError("empty spectrum")
    n1 = spectrum.principal_count
    coeffs = np.array(spectrum.coeffs[:n1])
    head = _truncated(spectrum, n1)
    pm = PrincipalMode(head, coeffs, math.nan, (math.nan, math.nan))
    x0, x1, y0, y1 = spectrum.domain.bounding_box()
    gx = np.linspace(x0, x1, 64)
    gy = np.linspace(y0, y1, 64)
    grid = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1)
    vals = pm(grid)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = np.array([gx[i], gy[j]])
    hx, hy = gx[1] - gx[0], gy[1] - gy[0]
    # coordinate-wise golden-section refinement around the best grid node
    for _ in range(4):
        for axis, h in ((0, hx), (1, hy)):
            def neg(v, axis=axis):
                p = best.copy()
                p[axis] = v
                return -pm(p)
            res = minimize_scalar(
                neg, bracket=None, bounds=(best[axis] - h, best[axis] + h),
                method="bounded", options={"xatol": 1e-12},
            )
            if -res.fun >= pm(best):
                best[axis] = res.x
    return PrincipalMode(head, coeffs, float(pm(best)), (float(best[0]), float(best[1])))


def _truncated(spectrum: Spectrum, K: int) -> Spectrum:
    if isinstance(spectrum, DiskSpectrum):
        return disk_spectrum(spectrum.radius, spectrum.sigma, K)
    if isinstance(spectrum, RectangleSpectrum):
        return RectangleSpectrum(
            domain=spectrum.domain, sigma_x=spectrum.sigma_x, sigma_y=spectrum.sigma_y,
            m=spectrum.m[:K], n=spectrum.n[:K],
        )
    raise TypeError(type(spectrum))


def poisson_parameter(pm: PrincipalMode, nu: Measure, method: str = "exact") -> float:
    """a = integral of F against nu.

    ``method="exact"`` uses closed forms (for Lebesgue measure the identity
    a = scale * sum c_1i^2, since the integral of f_1i is c_1i);
    ``method="quadrature"`` integrates F numerically.
    """
    domain = pm.spectrum.domain
    if method == "quadrature":
        return integrate(domain, nu, pm)
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    if isinstance(nu, Lebesgue):
        return float(nu.scale * np.sum(pm.coefficients**2))
    if isinstance(nu, RingWeighted):
        if not isinstance(pm.spectrum, DiskSpectrum):
            raise UnsupportedMeasure("ring-weighted measures need a disk domain")
        return _ring_integral(pm, nu)
    if isinstance(nu, Density):
        return integrate(domain, nu, pm)
    raise UnsupportedMeasure(f"unsupported measure {nu!r}")


def _ring_integral(pm: PrincipalMode, nu: RingWeighted) -> float:
    # int_0^R J0(mu rho / r) 2 pi rho d rho = 2 pi (r R / mu) J1(mu R / r)
    spec = pm.spectrum
    r, mu = spec.radius, float(spec.roots[0])
    scale = pm.coefficients[0] * float(np.sign(spec._j1_at_roots[0]) / spec._norms[0])
    edges = RingPartition(r, nu.n).boundaries
    cumulative = 2.0 * math.pi * r * edges / mu * bessel_j1(mu * edges / r)
    return float(scale * np.dot(nu.weights, np.diff(cumulative)))
