"""Experiment orchestration: sampler comparisons and (lambda, gamma) ablations."""

from __future__ import annotations

import csv
import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .core import SamplerKind
from .samplers import (
    StepKernel,
    StepSizeWarning,
    default_workers,
    gaussian_init,
    run_chains,
    run_single_chain,
)

logger = logging.getLogger(__name__)


def _fmt(v):
    return f"{v:.17g}"


def write_samples(path, samples):
    samples = np.asarray(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(samples.shape[1])])
        for row in samples:
            w.writerow([_fmt(v) for v in row])


def read_samples(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class Evaluator:
    """Binned target distributions for a 2D potential, built once and reused.

    ``box`` overrides the box rule when given.
    """

    def __init__(self, V, spec):
        self.V = V
        self.spec = spec
        search = diag.default_box(V)
        self.Z = diag.normalize_density(V, search, spec.quad_tol)
        if spec.box is not None:
            self.box = tuple(tuple(b) for b in spec.box)
        elif spec.box_rule == "quantile":
            self.box = diag.quantile_box(V, self.Z, spec.tail, search)
        elif spec.box_rule == "gaussian":
            self.box = search
        else:
            self.box = diag.dissipativity_box(V)
        self._targets = {}

    def edges(self, bins):
        return (
            diag.grid_edges(*self.box[0], bins),
            diag.grid_edges(*self.box[1], bins),
        )

    def target(self, bins):
        if bins not in self._targets:
            self._targets[bins] = diag.target_hist(
                self.V, self.Z, *self.edges(bins), order=self.spec.quad_order
            )
        return self._targets[bins]

    def kl(self, samples, bins):
        """Binned KL of ``samples`` (finite rows only) against the target; NaN if none usable."""
        samples = np.asarray(samples)
        samples = samples[np.all(np.isfinite(samples), axis=1)]
        if samples.shape[0] == 0:
            return float("nan"), 0
        try:
            h = diag.histogram2d(samples, *self.edges(bins))
        except ValueError:
            return float("nan"), samples.shape[0]
        return diag.binned_kl(h, self.target(bins)), h.n_outside

    def metadata(self):
        return {
            "Z": self.Z,
            "box": [list(b) for b in self.box],
            "box_rule": "explicit" if self.spec.box is not None else self.spec.box_rule,
        }


def _init_for(cfg):
    if cfg.init["type"] == "gaussian":
        return gaussian_init(cfg.sampler.seed, cfg.sampler.n_chains, cfg.init["mean"], cfg.init["std"])
    return cfg.initial_point()


def _sample(cfg, V, kind, on_nonfinite="raise", log=True, **overrides):
    sc = cfg.sampler_config(kind, **overrides)
    kernel = StepKernel.from_config(V, sc)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StepSizeWarning)
        if cfg.mode["type"] == "SingleChainBurnIn":
            x0 = cfg.initial_point() if cfg.init["type"] == "point" else _init_for(cfg)[0]
            samples = run_single_chain(kernel, sc, x0, cfg.mode["burn_in"])
        else:
            samples = run_chains(kernel, sc, _init_for(cfg), on_nonfinite=on_nonfinite)
    notes = [str(w.message) for w in caught if issubclass(w.category, StepSizeWarning)]
    if log:
        for n in notes:
            logger.warning(n)
    return samples, kernel.stepsize_bound(), notes


def run_experiment(cfg, out_dir=None):
    """Run every configured sampler, write CSV/JSON artifacts and return the report dict."""
    t0 = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    V = cfg.build_potential()
    files = []

    evaluator = Evaluator(V, cfg.histogram) if V.d == 2 else None
    report = {
        "schema_version": cfg.schema_version,
        "config": cfg.to_dict(),
        "seed": cfg.sampler.seed,
        "samplers": {},
    }
    if evaluator is not None:
        report.update(evaluator.metadata())
        report["bins"] = cfg.histogram.bins
        report["bin_sweep"] = list(cfg.histogram.bin_sweep)
        target = evaluator.target(cfg.histogram.bins)
        target.to_csv(out / "target_hist.csv")
        files.append("target_hist.csv")

    for kind in cfg.samplers:
        ts = time.perf_counter()
        samples, bound, notes = _sample(cfg, V, kind)
        elapsed = time.perf_counter() - ts
        name = f"samples_{kind.value}.csv"
        write_samples(out / name, samples)
        files.append(name)
        mean, cov = diag.sample_moments(samples)
        entry = {
            "mean": mean.tolist(),
            "cov": cov.tolist(),
            "n_samples": int(samples.shape[0]),
            "n_nonfinite": 0,
            "wall_time_s": elapsed,
            "stepsize_bound": bound,
            "warnings": notes,
        }
        if evaluator is not None:
            entry["kl"] = {}
            for bins in cfg.histogram.bin_sweep:
                kl, n_out = evaluator.kl(samples, bins)
                entry["kl"][str(bins)] = kl
                entry.setdefault("n_outside", {})[str(bins)] = n_out
            h = diag.histogram2d(samples, *evaluator.edges(cfg.histogram.bins))
            hname = f"hist_{kind.value}.csv"
            h.to_csv(out / hname)
            files.append(hname)
        report["samplers"][kind.value] = entry
        logger.info("%s done in %.2fs", kind.value, elapsed)

    report["wall_time_s"] = time.perf_counter() - t0
    report["files"] = files + ["metrics.json"]
    with open(out / "metrics.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


ABLATION_LAMBDAS = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2]
ABLATION_GAMMAS = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]


def run_ablation(cfg, lambda_grid=None, gamma_grid=None, out_dir=None, workers=None):
    """DC-LA binned KL over a (lambda, gamma) grid; writes ``ablation.csv``.

    Diverged chains are dropped from the histogram and counted.

    Returns
    -------
    list of dict
        One row per grid cell with keys ``lambda, gamma, binned_kl, n_nonfinite_chains``.
    """
    lambda_grid = list(ABLATION_LAMBDAS if lambda_grid is None else lambda_grid)
    gamma_grid = list(ABLATION_GAMMAS if gamma_grid is None else gamma_grid)
    if not lambda_grid or not gamma_grid:
        raise ValueError("ablation grids must be non-empty")
    V = cfg.build_potential()
    if V.d != 2:
        raise ValueError("ablation needs a two-dimensional potential")
    evaluator = Evaluator(V, cfg.histogram)
    evaluator.target(cfg.histogram.bins)
    cells = [(lam, gam) for lam in lambda_grid for gam in gamma_grid]

    def run_cell(cell):
        lam, gam = cell
        samples, _, notes = _sample(
            cfg, V, SamplerKind.DCLA, on_nonfinite="keep", log=False, lam=lam, gamma=gam
        )
        n_bad = int(np.sum(~np.all(np.isfinite(samples), axis=1)))
        kl, _ = evaluator.kl(samples, cfg.histogram.bins)
        row = {"lambda": lam, "gamma": gam, "binned_kl": kl, "n_nonfinite_chains": n_bad}
        return row, bool(notes)

    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]
    rows = [r for r, _ in results]
    n_warn = sum(w for _, w in results)
    if n_warn:
        logger.warning("%d of %d grid cells use a gamma above the theoretical bound", n_warn, len(cells))

    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ablation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "gamma", "binned_kl", "n_nonfinite_chains"])
        for r in rows:
            w.writerow([_fmt(r["lambda"]), _fmt(r["gamma"]), _fmt(r["binned_kl"]), r["n_nonfinite_chains"]])
    meta = {
        "config": cfg.to_dict(),
        **evaluator.metadata(),
        "bins": cfg.histogram.bins,
        "cells_above_stepsize_bound": n_warn,
    }
    with open(out / "ablation_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return rows
