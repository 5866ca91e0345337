"""Acceptance criteria, one test each, at their stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
one PASS/FAIL line per criterion. The path-simulation checks take minutes.
"""
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

import oracles
from rarefy.domain import Disk, Rectangle
from rarefy.measures import Lebesgue
from rarefy.rarefaction import build_cloud, convergence_sweep, run_trials
from rarefy.sde import DiffusionSpec, mc_survival
from rarefy.special import j0_roots
from rarefy.spectral import (
    SurvivalModel,
    disk_spectrum,
    parseval_defect,
    poisson_parameter,
    principal_mode,
    rectangle_spectrum,
)
from rarefy.stats import chi_square_two_sample

SEED = 2024
TAUS = (2.5, 3.0, 4.0)


def test_c1_poisson_parameter_disk(criterion):
    mu1 = j0_roots(1)[0]
    pm = principal_mode(disk_spectrum(1.0, 1.0, 20))
    a = poisson_parameter(pm, Lebesgue())
    quad = poisson_parameter(pm, Lebesgue(), method="quadrature")
    closed_ok = abs(a - math.pi * (2 / mu1) ** 2) <= 1e-14 * a
    literal_ok = abs(a - 2.17295) <= 1e-5
    quad_ok = abs(quad - a) <= 1e-8
    criterion(
        "C1 poisson parameter (disk, Lebesgue)",
        closed_ok and literal_ok and quad_ok,
        f"a={a:.10f} closed_form={closed_ok} |a-2.17295|={abs(a - 2.17295):.2e} (tol 1e-5) "
        f"|quad-a|={abs(quad - a):.1e} (tol 1e-8)",
    )
    assert closed_ok
    assert quad_ok
    assert literal_ok, f"a = {a!r} differs from 2.17295 by {abs(a - 2.17295):.2e}"


def test_c2_bessel_roots(criterion):
    roots = j0_roots(3).roots
    errs = [abs(roots[m] - oracles.j0_root(m + 1)) for m in range(3)]
    ok = max(errs) <= 1e-10
    criterion("C2 J0 roots vs bisection oracle", ok,
              f"roots={[round(float(r), 6) for r in roots]} max_err={max(errs):.1e} (tol 1e-10)")
    assert ok


def test_c3_parseval(criterion):
    disk = parseval_defect(disk_spectrum(1.0, 1.0, 200))
    square = parseval_defect(rectangle_spectrum(1.0, 1.0, 1.0, 1.0, max_index=99))
    disk_ok = -1e-9 <= disk <= 1e-3 * math.pi
    square_ok = -1e-9 <= square <= 1e-4
    criterion("C3 Parseval defects", disk_ok and square_ok,
              f"disk K=200 {disk:.3e} (tol {1e-3 * math.pi:.3e}); "
              f"square odd m,n<=99 {square:.3e} (tol 1e-4)")
    assert disk_ok and square_ok, f"defects: disk {disk:.4e} (<= {1e-3 * math.pi:.4e}), square {square:.4e} (<= 1e-4)"


def test_c4_series_vs_monte_carlo(criterion):
    unit = DiffusionSpec(1.0, 1.0)
    disk_model = SurvivalModel(disk_spectrum(1.0, 1.0, 20))
    sq_model = SurvivalModel(rectangle_spectrum(1.0, 1.0, 1.0, 1.0, 20))
    disk_u = disk_model.survival(0.5, (0.0, 0.0))
    sq_u = sq_model.survival(0.2, (0.5, 0.5))
    disk_mc = mc_survival(unit, Disk(1.0), (0.0, 0.0), 0.5, 1e-4, 1_000_000, seed=SEED)
    sq_mc = mc_survival(unit, Rectangle(1.0, 1.0), (0.5, 0.5), 0.2, 1e-4, 1_000_000, seed=SEED)
    z_disk = (disk_mc.estimate - disk_u.value) / disk_mc.stderr
    z_sq = (sq_mc.estimate - sq_u.value) / sq_mc.stderr
    ok = (abs(z_disk) <= 3 and abs(z_sq) <= 3 and disk_u.bound < 1e-6 and sq_u.bound < 1e-6)
    criterion("C4 series vs Monte Carlo (1e6 paths)", ok,
              f"disk u={disk_u.value:.6f} mc={disk_mc.estimate:.6f} z={z_disk:+.2f}; "
              f"square u={sq_u.value:.6f} mc={sq_mc.estimate:.6f} z={z_sq:+.2f}")
    assert ok


@pytest.fixture(scope="module")
def sweep():
    model = SurvivalModel(disk_spectrum(1.0, 1.0, 20))
    return convergence_sweep(Disk(1.0), Lebesgue(), TAUS, 5000, "thinning", model, SEED, "grid")


def test_c5_poisson_limit(criterion, sweep):
    last = sweep[-1]
    tv_ok = last["tv_distance"] < 0.02
    mono_ok = all(
        b["tv_distance"] <= a["tv_distance"] + 2 * math.hypot(a["tv_stderr"], b["tv_stderr"])
        for a, b in zip(sweep, sweep[1:])
    )
    moments_ok = all(
        abs(r["mean"] - r["a"]) <= 4 * r["mean_stderr"]
        and abs(r["variance"] - r["a"]) <= 4 * r["variance_stderr"]
        for r in sweep
    )
    detail = " ".join(
        f"tau={r['tau']}: tv={r['tv_distance']:.4f}+-{r['tv_stderr']:.4f} "
        f"mean={r['mean']:.3f} var={r['variance']:.3f};"
        for r in sweep
    )
    criterion("C5 Poisson limit (thinning, 5000 trials)", tv_ok and mono_ok and moments_ok,
              f"a={last['a']:.5f} {detail}")
    assert tv_ok and mono_ok and moments_ok


@pytest.mark.slow
def test_c6_sde_matches_thinning(criterion):
    model = SurvivalModel(disk_spectrum(1.0, 1.0, 20))
    lam1 = float(model.spectrum.lambdas[0])
    cloud = build_cloud(Disk(1.0), Lebesgue(), 2.0, lam1, "grid", SEED)
    sde = run_trials(cloud, model, "sde", 500, SEED, DiffusionSpec(1.0, 1.0), dt=1e-4)
    thin = run_trials(cloud, model, "thinning", 500, SEED + 1)
    test = chi_square_two_sample(sde.counts, thin.counts)
    ok = test.p_value >= 0.01
    criterion("C6 SDE vs thinning two-sample chi-square (tau=2)", ok,
              f"N={len(cloud)} sde_mean={sde.mean:.3f} thin_mean={thin.mean:.3f} "
              f"chi2={test.statistic:.2f} dof={test.dof} p={test.p_value:.3f}")
    assert ok


def test_c7_pgf_gap_mechanism(criterion, sweep):
    gaps = [r["pgf_gap_s0"] for r in sweep]
    mono_ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    ratio = sweep[-1]["sum_u_sq_ratio"]
    ratio_ok = ratio < 0.01
    criterion("C7 PGF gap decreasing, sum u^2 / sum u < 0.01", mono_ok and ratio_ok,
              f"gaps={[f'{g:.2e}' for g in gaps]} ratio(tau=4)={ratio:.2e}")
    assert mono_ok and ratio_ok


_C8_CONFIG = {
    "seed": 11,
    "domain": "disk",
    "K": 20,
    "survival": {"times": [0.5, 1.0], "grid": 9},
    "simulate": {"tau": 0.3, "dt": 1e-3, "paths": 20000},
    "experiment": {"taus": [2.5, 3.0], "trials": 300, "mode": "thinning"},
}
_C8_SDE = {"seed": 12, "domain": "disk", "K": 20,
           "experiment": {"taus": [1.0], "trials": 20, "mode": "sde", "dt": 1e-3}}


def _run_all(workdir: Path, threads: int) -> dict[str, bytes]:
    workdir.mkdir()
    (workdir / "cfg.yaml").write_text(yaml.safe_dump(_C8_CONFIG), encoding="utf-8")
    (workdir / "sde.yaml").write_text(yaml.safe_dump(_C8_SDE), encoding="utf-8")
    env = dict(os.environ, NUMBA_NUM_THREADS="4")
    commands = [["roots", "--count", "20", "--out", "out/roots"]]
    for sub in ("spectrum", "survival", "simulate", "experiment"):
        commands.append([sub, "--config", "cfg.yaml", "--threads", str(threads), "--out", f"out/{sub}"])
    commands.append(["experiment", "--config", "sde.yaml", "--threads", str(threads), "--out", "out/sde"])
    stdout = {}
    for cmd in commands:
        proc = subprocess.run([sys.executable, "-m", "rarefy", *cmd], cwd=workdir, env=env,
                              capture_output=True, check=True)
        stdout[" ".join(cmd[:1] + cmd[-1:])] = proc.stdout
    files = {str(p.relative_to(workdir)): p.read_bytes()
             for p in sorted((workdir / "out").rglob("*")) if p.is_file()}
    return {**files, **stdout}


def test_c8_determinism(criterion, tmp_path):
    runs = [_run_all(tmp_path / f"run{i}", threads) for i, threads in enumerate((1, 4, 4))]
    same = all(r == runs[0] for r in runs[1:])
    criterion("C8 byte-identical reruns across --threads", same,
              f"{len(runs[0])} artefacts compared over threads 1/4/4")
    assert same
