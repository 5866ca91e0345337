"""YAML run configuration, validated up front.

Top-level keys describe the physics shared by all subcommands; each
subcommand reads its own section. See ``configs/`` for one example per
subcommand.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .domain import Disk, Domain, Rectangle
from .measures import Lebesgue, Measure, RingWeighted
from .rarefaction import DEFAULT_MAX_COUNT, MODES, SCHEMES
from .sde import DiffusionSpec
from .spectral import DEFAULT_CAP, Spectrum, disk_spectrum, rectangle_spectrum


class ConfigError(ValueError):
    pass


def _positive(name: str, value: Any) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{name} must be positive, got {value!r}")
    return v


def _count(name: str, value: Any, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _times(name: str, value: Any) -> list[float]:
    if not isinstance(value, (list, tuple)) or not value:
        value = [value]
    return [_positive(name, v) for v in value]


@dataclass
class SurvivalSection:
    times: list[float] = field(default_factory=lambda: [0.5])
    grid: int = 11
    points: list[list[float]] = field(default_factory=list)


@dataclass
class SimulateSection:
    tau: float = 0.5
    dt: float = 1e-4
    paths: int = 100_000
    bridge: bool = True
    start: list[float] = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class ExperimentSection:
    taus: list[float] = field(default_factory=lambda: [2.5, 3.0, 4.0])
    mode: str = "thinning"
    trials: int = 5000
    scheme: str = "grid"
    dt: float = 1e-4
    bridge: bool = True
    max_count: int = DEFAULT_MAX_COUNT


@dataclass
class RunConfig:
    domain: str
    radius: float | None
    side_x: float | None
    side_y: float | None
    sigma_x: float
    sigma_y: float
    measure: dict
    seed: int = 0
    K: int = 20
    cert_cap: float = DEFAULT_CAP
    out: str = "out"
    survival: SurvivalSection = field(default_factory=SurvivalSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    def build_domain(self) -> Domain:
        if self.domain == "disk":
            return Disk(self.radius)
        return Rectangle(self.side_x, self.side_y)

    def build_spectrum(self, K: int | None = None) -> Spectrum:
        K = K or self.K
        if self.domain == "disk":
            return disk_spectrum(self.radius, self.sigma_x, K)
        return rectangle_spectrum(self.side_x, self.side_y, self.sigma_x, self.sigma_y, K)

    def build_diffusion(self) -> DiffusionSpec:
        return DiffusionSpec(self.sigma_x, self.sigma_y)

    def build_measure(self) -> Measure:
        if self.measure["kind"] == "lebesgue":
            return Lebesgue(self.measure["scale"])
        return RingWeighted(self.measure["n"], tuple(self.measure["weights"]))

    def resolved(self) -> dict:
        """Fully resolved configuration, stable key order."""
        return asdict(self)


_TOP_KEYS = {
    "seed", "domain", "radius", "side_x", "side_y", "sigma", "sigma_x", "sigma_y",
    "K", "cert_cap", "measure", "out", "survival", "simulate", "experiment",
}


def parse_config(raw: dict, seed: int | None = None, out: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kind = raw.get("domain", "disk")
    radius = side_x = side_y = None
    if kind == "disk":
        radius = _positive("radius", raw.get("radius", 1.0))
    elif kind == "rectangle":
        side_x = _positive("side_x", raw.get("side_x", 1.0))
        side_y = _positive("side_y", raw.get("side_y", 1.0))
    else:
        raise ConfigError(f"domain must be 'disk' or 'rectangle', got {kind!r}")

    sigma = raw.get("sigma")
    sx = _positive("sigma_x", raw.get("sigma_x", sigma if sigma is not None else 1.0))
    sy = _positive("sigma_y", raw.get("sigma_y", sigma if sigma is not None else 1.0))
    if kind == "disk" and sx != sy:
        raise ConfigError("the disk requires isotropic noise (sigma_x == sigma_y)")

    measure = dict(raw.get("measure") or {"kind": "lebesgue"})
    mkind = measure.get("kind", "lebesgue")
    if mkind == "lebesgue":
        scale = float(measure.get("scale", 1.0))
        if scale < 0:
            raise ConfigError("measure scale must be non-negative")
        measure = {"kind": "lebesgue", "scale": scale}
    elif mkind == "ring":
        if kind != "disk":
            raise ConfigError("ring measures need a disk domain")
        n = _count("measure.n", measure.get("n"))
        weights = [float(w) for w in measure.get("weights", [])]
        if len(weights) != n or any(w < 0 for w in weights):
            raise ConfigError(f"measure.weights must be {n} non-negative numbers")
        measure = {"kind": "ring", "n": n, "weights": weights}
    else:
        raise ConfigError(f"measure.kind must be 'lebesgue' or 'ring', got {mkind!r}")

    seed_val = raw.get("seed", 0) if seed is None else seed
    if isinstance(seed_val, bool) or not isinstance(seed_val, int) or not 0 <= seed_val < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed_val!r}")

    surv_raw = dict(raw.get("survival") or {})
    survival = SurvivalSection(
        times=_times("survival.times", surv_raw.get("times", [0.5])),
        grid=_count("survival.grid", surv_raw.get("grid", 11), minimum=2),
        points=[[float(c) for c in p] for p in surv_raw.get("points", [])],
    )
    sim_raw = dict(raw.get("simulate") or {})
    simulate = SimulateSection(
        tau=_positive("simulate.tau", sim_raw.get("tau", 0.5)),
        dt=_positive("simulate.dt", sim_raw.get("dt", 1e-4)),
        paths=_count("simulate.paths", sim_raw.get("paths", 100_000)),
        bridge=bool(sim_raw.get("bridge", True)),
        start=[float(c) for c in sim_raw.get("start", [0.0, 0.0] if kind == "disk"
                                             else [0.5 * side_x, 0.5 * side_y])],
    )
    if simulate.dt > simulate.tau:
        raise ConfigError("simulate.dt must not exceed simulate.tau")
    exp_raw = dict(raw.get("experiment") or {})
    experiment = ExperimentSection(
        taus=_times("experiment.taus", exp_raw.get("taus", [2.5, 3.0, 4.0])),
        mode=exp_raw.get("mode", "thinning"),
        trials=_count("experiment.trials", exp_raw.get("trials", 5000)),
        scheme=exp_raw.get("scheme", "grid"),
        dt=_positive("experiment.dt", exp_raw.get("dt", 1e-4)),
        bridge=bool(exp_raw.get("bridge", True)),
        max_count=_count("experiment.max_count", exp_raw.get("max_count", DEFAULT_MAX_COUNT)),
    )
    if experiment.mode not in MODES:
        raise ConfigError(f"experiment.mode must be one of {MODES}")
    if experiment.scheme not in SCHEMES:
        raise ConfigError(f"experiment.scheme must be one of {SCHEMES}")

    return RunConfig(
        domain=kind, radius=radius, side_x=side_x, side_y=side_y,
        sigma_x=sx, sigma_y=sy, measure=measure, seed=seed_val,
        K=_count("K", raw.get("K", 20)),
        cert_cap=_positive("cert_cap", raw.get("cert_cap", DEFAULT_CAP)),
        out=str(out if out is not None else raw.get("out", "out")),
        survival=survival, simulate=simulate, experiment=experiment,
    )


def load_config(path: str | Path, seed: int | None = None, out: str | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(raw, seed=seed, out=out)
