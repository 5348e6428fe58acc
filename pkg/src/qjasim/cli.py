"""Command-line experiment runner.

    qjasim <method> [--config PATH] [--seed N] [--out DIR] [--jobs N]

Exit codes: 0 success, 2 configuration error, 3 numeric-range error,
1 anything else.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .anneal import RunResult, gibbs_ground_probability, record_every, run_qa, run_qa_interpolated, run_qja
from .config import METHODS, ExperimentConfig, derive_seed, validate_config
from .dilation import (
    exact_expected_repetitions,
    linearized_repetitions,
    postselect,
    run_qja_dilated,
    steps_estimate,
)
from .errors import ConfigError, NumericRangeError, QjasimError
from .model import CostFunction, Schedule, linear_schedule, shift_nonnegative
from .qmap import gap_profile
from .reports import (
    DILATION_COLUMNS,
    GIBBS_COLUMNS,
    JE_COLUMNS,
    PLOT_SCRIPT,
    RUN_COLUMNS,
    SPECTRUM_COLUMNS,
    BundleWriter,
    run_filename,
    write_csv,
    write_json,
)
from .stochastic import exact_partition_ratio, work_exponents

log = logging.getLogger("qjasim")


@dataclass
class FigureBundle:
    output_dir: Path
    files: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


def _schedule(cfg: ExperimentConfig, cost: CostFunction, tau: float) -> Schedule:
    n = None if cfg.n_steps == "auto" else int(cfg.n_steps)
    return linear_schedule(cost, cfg.beta_max, tau, n)


def _anneal_task(method, cost_dict, beta_max, tau, n_steps, tol, strength) -> RunResult:
    cost = CostFunction.from_dict(cost_dict)
    sched = linear_schedule(cost, beta_max, tau, n_steps)
    if method == "qja":
        return run_qja(cost, sched, tol=tol)
    if method == "qa":
        return run_qa(cost, sched, tol=tol)
    return run_qa_interpolated(cost, sched, strength, tol=tol)


def _run_all(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [_anneal_task(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_anneal_task, *t) for t in tasks]
        return [f.result() for f in futures]


def _anneal(cfg: ExperimentConfig, cost: CostFunction, out: BundleWriter, methods) -> dict:
    n_steps = None if cfg.n_steps == "auto" else int(cfg.n_steps)
    tasks = [
        (m, cost.to_dict(), cfg.beta_max, tau, n_steps, cfg.ground_tol, cfg.transverse_strength)
        for tau in cfg.taus
        for m in methods
    ]
    results = _run_all(tasks, cfg.jobs)
    summary = {}
    for task, res in zip(tasks, results):
        method, tau = task[0], task[3]
        write_csv(out.path(run_filename(method, tau, cfg.seed)), RUN_COLUMNS, res.rows())
        entry = summary.setdefault(f"tau={tau:g}", {})
        entry[f"{method}_final_p_ground"] = res.final_p_ground
        entry["gibbs_final_p_ground"] = float(res.p_ground_gibbs[-1])
        if method == "qja":
            entry["qja_max_deviation"] = float(np.max(np.abs(res.p_ground - res.p_ground_gibbs)))
    return summary


def _gibbs_reference(cfg, cost, out):
    sched = _schedule(cfg, cost, cfg.taus[0])
    every = record_every(sched.n_steps)
    rows = [
        (k, float(sched.betas[k]), gibbs_ground_probability(cost, float(sched.betas[k]), cfg.ground_tol))
        for k in range(sched.n_steps + 1)
        if k % every == 0 or k == sched.n_steps
    ]
    write_csv(out.path(f"gibbs_{cfg.seed}.csv"), GIBBS_COLUMNS, rows)


def _fig1(cfg, cost, out):
    summary = _anneal(cfg, cost, out, ("qa", "qja"))
    _gibbs_reference(cfg, cost, out)
    keys = [f"tau={t:g}" for t in cfg.taus]
    qa_finals = [summary[k]["qa_final_p_ground"] for k in keys]
    summary["checks"] = {
        "qja_tracks_gibbs": all(summary[k]["qja_max_deviation"] < cfg.qja_gibbs_tol for k in keys),
        "qa_improves_with_tau": all(a < b for a, b in zip(qa_finals, qa_finals[1:])),
    }
    return summary


def _je_check(cfg, cost, out):
    sched = _schedule(cfg, cost, cfg.taus[0])
    w = np.exp(work_exponents(cost, sched, cfg.samples, derive_seed(cfg.seed, "je-check")))
    exact = exact_partition_ratio(cost, float(sched.betas[0]), sched.beta_final)
    counts = sorted({c for c in (10**k for k in range(2, 12)) if c < cfg.samples} | {cfg.samples})
    rows = []
    for c in counts:
        mean = float(w[:c].mean())
        se = float(w[:c].std(ddof=1) / math.sqrt(c))
        z = (mean - exact) / se if se > 0 else (0.0 if mean == exact else math.inf)
        rows.append((c, mean, se, exact, z))
    write_csv(out.path(f"je_{cfg.seed}.csv"), JE_COLUMNS, rows)
    return {"z_score": rows[-1][4], "mean": rows[-1][1], "exact_ratio": exact}


def _dilate_check(cfg, cost, out):
    shifted, offset = shift_nonnegative(cost)
    sched = _schedule(cfg, shifted, cfg.taus[0])
    state = run_qja_dilated(shifted, sched)
    weight_method = run_qja(shifted, sched, tol=cfg.ground_tol).final
    branch, prob = postselect(state, "0" * state.n_ancilla)
    classes = state.weight_class_probabilities()
    write_csv(
        out.path(f"dilation_{cfg.seed}.csv"),
        DILATION_COLUMNS,
        [(state.n_ancilla, j, float(p)) for j, p in enumerate(classes)],
    )
    record = {"energy_offset": offset}
    try:
        est = steps_estimate(shifted, p_error_cap=cfg.p_error_cap)
        record.update(est.to_dict(exact_expected_repetitions(shifted, est.beta_final)))
        record["linearized_repetitions"] = linearized_repetitions(shifted)
    except QjasimError as exc:
        record["error"] = str(exc)
    write_json(out.path(f"cost_estimate_{cfg.seed}.json"), record)
    return {
        "max_state_deviation": float(np.max(np.abs(branch.amplitudes - weight_method.normalized()))),
        "all_zero_probability": prob,
        "weight_method_norm_sq": weight_method.norm_sq,
        "total_probability": float(classes.sum()),
    }


def _spectrum(cfg, cost, out):
    sched = _schedule(cfg, cost, cfg.taus[0])
    rows = gap_profile(cost, sched, cfg.grid)
    write_csv(out.path(f"spectrum_{cfg.seed}.csv"), SPECTRUM_COLUMNS, rows)
    gmin = min(rows, key=lambda r: r[3])
    return {"delta_min": gmin[3], "beta_at_min": gmin[0]}


def run_experiment(cfg: ExperimentConfig, output_dir=None, plot_script: bool = False) -> FigureBundle:
    cost = cfg.build_instance()
    out = BundleWriter(output_dir or cfg.output_dir)
    try:
        with open(out.path("instance.json"), "w", encoding="utf-8") as fh:
            fh.write(cost.to_json() + "\n")
        if cfg.method == "fig1":
            summary = _fig1(cfg, cost, out)
            if plot_script:
                out.path("plot_fig1.py").write_text(PLOT_SCRIPT)
        elif cfg.method in ("qa", "qja", "qa-interp"):
            summary = _anneal(cfg, cost, out, (cfg.method,))
        elif cfg.method == "je-check":
            summary = _je_check(cfg, cost, out)
        elif cfg.method == "dilate-check":
            summary = _dilate_check(cfg, cost, out)
        else:
            summary = _spectrum(cfg, cost, out)
        manifest = {
            "method": cfg.method,
            "config_hash": cfg.config_hash(),
            "config": cfg.canonical(),
            "seed": cfg.seed,
            "version": __version__,
            "files": sorted(out.files),
            "summary": summary,
        }
        write_json(out.tmp / "manifest.json", manifest)
        target = out.commit()
    except BaseException:
        out.abort()
        raise
    return FigureBundle(target, sorted(out.files), manifest)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qjasim", description="Quantum Jarzynski annealing experiments.")
    p.add_argument("method", help="one of: " + ", ".join(METHODS))
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--plot-script", action="store_true", help="add a matplotlib script to fig1 bundles")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        raw = args.config.read_text(encoding="utf-8") if args.config else "{}"
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = validate_config(raw, method=args.method, seed=args.seed)
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError([("--jobs", ">= 1", str(args.jobs))])
            cfg = ExperimentConfig(**{**cfg.__dict__, "jobs": args.jobs})
        bundle = run_experiment(cfg, args.out, plot_script=args.plot_script)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericRangeError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except QjasimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %d files to %s", len(bundle.files) + 1, bundle.output_dir)
    print(bundle.output_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
