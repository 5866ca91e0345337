"""Survivor counts of absorbed diffusions and their Poisson limit.

Spectral survival probabilities on the disk and the rectangle, Monte Carlo
path simulation with absorption, and experiments comparing the survivor
count of a large initial cloud with its Poisson limit.
"""
from .domain import Disk, Rectangle, RingPartition, contains, ring_measure, signed_distance
from .measures import Density, Lebesgue, RingWeighted
from .rarefaction import (
    ExperimentReport,
    InitialCloud,
    build_cloud,
    convergence_sweep,
    exact_pgf_gap,
    run_trials,
)
from .sde import DiffusionSpec, mc_survival, simulate_particle, survive_ensemble
from .special import bessel_j0, bessel_j1, j0_roots
from .spectral import (
    SurvivalModel,
    UncertifiedRegimeError,
    disk_spectrum,
    parseval_defect,
    poisson_parameter,
    principal_mode,
    rectangle_spectrum,
    survival_probability,
    truncation_bound,
)
from .stats import chi_square_gof, poisson_pmf, tv_distance, wilson_interval

__version__ = "0.1.0"
