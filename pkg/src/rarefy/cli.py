"""Command line entry point.

    rarefy roots --count 10
    rarefy spectrum   --config configs/spectrum.yaml [--out DIR]
    rarefy survival   --config configs/survival.yaml
    rarefy simulate   --config configs/simulate.yaml [--seed N] [--threads N]
    rarefy experiment --config configs/experiment.yaml

Exit codes: 0 success, 2 invalid configuration, 3 uncertified regime
(time below t_min), 4 internal numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .rarefaction import CloudTooLarge, build_cloud, run_trials
from .sde import mc_survival
from .special import RootBracketError, j0_roots
from .spectral import (
    SurvivalModel,
    UncertifiedRegimeError,
    parseval_defect,
    poisson_parameter,
    principal_mode,
)

log = logging.getLogger("rarefy")

EXIT_OK, EXIT_CONFIG, EXIT_UNCERTIFIED, EXIT_NUMERIC = 0, 2, 3, 4


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _prepare(cfg: RunConfig, command: str) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"{command}.config.json", cfg.resolved())
    return out


def cmd_roots(count: int, out: str | None) -> int:
    table = j0_roots(count)
    rows = [(m + 1, _fmt(mu)) for m, mu in enumerate(table.roots)]
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        _write_csv(Path(out) / "roots.csv", ["m", "mu"], rows)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["m", "mu"])
    w.writerows(rows)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    out = _prepare(cfg, "spectrum")
    spec = cfg.build_spectrum()
    rows = [
        (k + 1, _fmt(lam), _fmt(c), int(mult))
        for k, (lam, c, mult) in enumerate(zip(spec.lambdas, spec.coeffs, spec.multiplicities))
    ]
    _write_csv(out / "spectrum.csv", ["k", "lambda", "c", "mult"], rows)
    defect = parseval_defect(spec)
    print(f"parseval_defect,{_fmt(defect)}")
    return EXIT_OK


def _survival_points(cfg: RunConfig, domain) -> np.ndarray:
    if cfg.survival.points:
        return np.asarray(cfg.survival.points, dtype=float)
    x0, x1, y0, y1 = domain.bounding_box()
    g = cfg.survival.grid
    xs, ys = np.meshgrid(np.linspace(x0, x1, g), np.linspace(y0, y1, g), indexing="ij")
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    # keep the closed domain; points within rounding of the boundary count as on it
    return pts[domain.signed_distance(pts) >= -1e-12]


def cmd_survival(cfg: RunConfig) -> int:
    out = _prepare(cfg, "survival")
    domain = cfg.build_domain()
    model = SurvivalModel(cfg.build_spectrum(), cfg.cert_cap)
    pts = _survival_points(cfg, domain)
    rows = []
    for t in sorted(cfg.survival.times):
        est = model.survival(t, pts)
        for (x, y), u in zip(pts, np.atleast_1d(est.value)):
            rows.append((_fmt(t), _fmt(x), _fmt(y), _fmt(u), _fmt(est.bound)))
    _write_csv(out / "survival.csv", ["t", "x", "y", "u", "err_bound"], rows)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    out = _prepare(cfg, "simulate")
    s = cfg.simulate
    est = mc_survival(cfg.build_diffusion(), cfg.build_domain(), s.start, s.tau, s.dt,
                      s.paths, cfg.seed, s.bridge)
    payload = est.as_dict()
    _write_json(out / "simulate.json", payload)
    print(json.dumps(payload))
    return EXIT_OK


def cmd_experiment(cfg: RunConfig) -> int:
    out = _prepare(cfg, "experiment")
    e = cfg.experiment
    domain = cfg.build_domain()
    nu = cfg.build_measure()
    model = SurvivalModel(cfg.build_spectrum(), cfg.cert_cap)
    lam1 = float(model.spectrum.lambdas[0])
    a = poisson_parameter(principal_mode(model.spectrum), nu)
    reports, pmf_rows = [], []
    for tau in e.taus:
        cloud = build_cloud(domain, nu, tau, lam1, e.scheme, cfg.seed, e.max_count)
        rep = run_trials(cloud, model, e.mode, e.trials, cfg.seed, cfg.build_diffusion(),
                         e.dt, e.bridge, a=a)
        reports.append(rep.as_dict())
        probs = list(rep.empirical.probs) + [rep.empirical.tail]
        ref = list(rep.poisson.probs) + [rep.poisson.tail]
        # the last row (k = k_max + 1) carries the lumped tail mass
        pmf_rows += [(_fmt(tau), k, _fmt(p), _fmt(q)) for k, (p, q) in enumerate(zip(probs, ref))]
        log.info("tau=%g N=%d tv=%.4f mean=%.4f a=%.5f", tau, rep.n_particles,
                 rep.tv_distance, rep.mean, a)
    _write_json(out / "report.json", {"a": a, "reports": reports})
    _write_csv(out / "pmf.csv", ["tau", "k", "empirical", "poisson"], pmf_rows)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "survival": cmd_survival,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rarefy", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    roots = sub.add_parser("roots", help="print the first zeros of J0 as CSV")
    roots.add_argument("--count", type=int, default=10)
    roots.add_argument("--out", default=None)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None)
    return parser


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "roots":
            if args.count < 1:
                raise ConfigError("--count must be >= 1")
            return cmd_roots(args.count, args.out)
        _set_threads(args.threads)
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        return COMMANDS[args.command](cfg)
    except UncertifiedRegimeError as exc:
        print(f"error: uncertified regime: {exc}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    except (ConfigError, CloudTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RootBracketError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
