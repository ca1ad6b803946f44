"""End-to-end acceptance checks, one test per criterion."""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.stats import norm

from dcla import diagnostics as diag
from dcla import prox as px
from dcla import regularizers as regs
from dcla.core import ChainState, RandomStream, SamplerConfig
from dcla.harness import Evaluator
from dcla.config import HistogramSpec
from dcla.oracles import prox_check
from dcla.potentials import (
    DCPotential,
    QuadraticF,
    dissipativity_constants,
    max_stepsize,
    potential_subgradient,
)
from dcla.samplers import StepKernel, StepSizeWarning, dcla_step, dcla_step_unrolled, run_chains

SIGMA = np.array([[1.0, 0.8], [0.8, 1.0]])
TAU = 10.0


def test_prox_oracle_equivalence(record):
    t0 = time.perf_counter()
    devs = prox_check(200, seed=0)
    elapsed = time.perf_counter() - t0
    worst = max(devs.values())
    ok = worst < 1e-4 and elapsed < 30 and len(devs) == 7
    record(1, ok, f"prox oracle: max deviation {worst:.2e} over {len(devs)} operators in {elapsed:.1f}s")


def _moreau_cases():
    theta, a = 1.5, 3.0
    return [
        ("l1", px.L1Norm() * TAU, TAU * math.sqrt(2)),
        ("l2", px.L2Norm() * TAU, TAU),
        ("capped r1", regs.capped_l1(theta).component(regs.R1), theta * math.sqrt(2)),
        ("capped r2", regs.capped_l1(theta).component(regs.R2), 2 * theta * math.sqrt(2)),
        ("pil r1", regs.pil(theta, a).component(regs.R1), theta / (a - 1) * math.sqrt(2)),
        ("pil r2", regs.pil(theta, a).component(regs.R2), 2 * theta / (a - 1) * math.sqrt(2)),
    ]


def test_moreau_calculus(record):
    rng = np.random.default_rng(2)
    h = 1e-7
    worst = {"envelope": 0.0, "gap": 0.0, "grad": 0.0, "expansion": 0.0}
    for _ in range(1000):
        x, y = rng.uniform(-4, 4, size=(2, 2))
        lam = rng.uniform(0.05, 1.0)
        for _, g, G in _moreau_cases():
            env, val = px.moreau_value(g, lam, x), g.value(x)
            worst["envelope"] = max(worst["envelope"], env - val)
            worst["gap"] = max(worst["gap"], (val - env) - G * G * lam / 2)
            grad = px.moreau_grad(g, lam, x)
            fd = np.array(
                [(px.moreau_value(g, lam, x + e) - px.moreau_value(g, lam, x - e)) / (2 * h) for e in h * np.eye(2)]
            )
            worst["grad"] = max(worst["grad"], np.max(np.abs(fd - grad)) / max(1.0, np.max(np.abs(grad))))
            d = np.linalg.norm(g.prox(x, lam) - g.prox(y, lam)) - np.linalg.norm(x - y)
            worst["expansion"] = max(worst["expansion"], d)
    ok = (
        worst["envelope"] <= 1e-12
        and worst["gap"] <= 1e-12
        and worst["grad"] <= 1e-5
        and worst["expansion"] <= 1e-12
    )
    record(
        2,
        ok,
        "Moreau calculus: env-f {envelope:.1e}, gap excess {gap:.1e}, grad rel err {grad:.1e}, "
        "prox expansion {expansion:.1e}".format(**worst),
    )


def test_unrolled_identity(record):
    V = DCPotential(QuadraticF([1.0, 1.0], SIGMA), regs.l1_minus_l2(TAU))
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(1000):
        x = rng.normal(scale=3, size=2)
        gamma, lam = rng.uniform(1e-4, 1e-1, size=2)
        a = dcla_step(V, lam, gamma, ChainState(x), RandomStream(i, 0))
        b = dcla_step_unrolled(V, lam, gamma, ChainState(x), RandomStream(i, 0))
        worst = max(worst, float(np.max(np.abs(a.x - b.x))))
    record(3, worst <= 1e-10, f"unrolled identity: max |difference| {worst:.2e} over 1000 draws")


def test_gaussian_stationarity(record):
    gamma = 0.005
    V = DCPotential(QuadraticF([0.0, 0.0], SIGMA))
    cfg = SamplerConfig(gamma=gamma, n_chains=5000, n_steps=2000, seed=0, kind="ULA")
    t0 = time.perf_counter()
    ula = run_chains(StepKernel("ULA", V, gamma), cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        dcla = run_chains(StepKernel("DCLA", V, gamma, 0.01), cfg)
    elapsed = time.perf_counter() - t0
    ref = 2 * np.linalg.inv(2 * SIGMA - gamma * SIGMA @ SIGMA)
    _, cov = diag.sample_moments(ula)
    rel = np.linalg.norm(cov - ref) / np.linalg.norm(ref)
    identical = np.array_equal(ula, dcla)
    ok = rel < 0.05 and identical and elapsed < 60
    record(
        4,
        ok,
        f"Gaussian stationarity: cov rel Frobenius error {rel:.3f}, DC-LA(Zero) bit-identical={identical}, "
        f"{elapsed:.1f}s",
    )


@pytest.mark.slow
def test_kl_ordering(record):
    spec = HistogramSpec(bins=40, bin_sweep=[40])
    wins, times = {}, {}
    for m in ((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)):
        t0 = time.perf_counter()
        V = DCPotential(QuadraticF(m, SIGMA), regs.l1_minus_l2(TAU))
        ev = Evaluator(V, spec)
        count = 0
        for seed in range(3):
            kl = {}
            for kind in ("ULA", "MoreauULA", "DCLA"):
                cfg = SamplerConfig(gamma=0.005, lam=0.01, n_chains=5000, n_steps=1000, seed=seed, kind=kind)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", StepSizeWarning)
                    samples = run_chains(StepKernel.from_config(V, cfg), cfg)
                kl[kind] = ev.kl(samples, 40)[0]
            count += kl["DCLA"] < kl["ULA"] and kl["DCLA"] < kl["MoreauULA"]
        wins[m] = count
        times[m] = time.perf_counter() - t0
    ok = all(c >= 2 for c in wins.values()) and all(t < 300 for t in times.values())
    detail = ", ".join(f"m={m[0]:g}: {wins[m]}/3 seeds in {times[m]:.0f}s" for m in wins)
    record(5, ok, f"binned KL ordering (DC-LA below ULA and Moreau ULA): {detail}")


def test_stepsize_examples(record):
    got = (
        f"{max_stepsize(1, 1.0, 0.01, 1.0):.4e}",
        f"{max_stepsize(2, 1.0, 0.01, 1.0):.3e}",
        f"{max_stepsize(1, 1.0, 0.01, 1.0, 'DCLAS', L_r2=1.0):.4e}",
    )
    ok = got == ("1.2376e-05", "6.446e-08", "4.8058e-05")
    record(6, ok, f"step-size calculators: {', '.join(got)}")


def test_dissipativity(record):
    V = DCPotential(QuadraticF([0.0, 0.0], np.eye(2)), regs.l1_minus_l2(TAU))
    c = dissipativity_constants(V, 2)
    rng = np.random.default_rng(7)
    x = rng.uniform(-100, 100, size=(10_000, 2))
    angle = rng.uniform(0, 2 * np.pi, size=10_000)
    dist = rng.uniform(c.R, 5 * c.R, size=10_000)
    y = x + dist[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    diff = x - y
    lhs = np.sum((potential_subgradient(V, x) - potential_subgradient(V, y)) * diff, axis=1)
    violations = int(np.sum(lhs < c.mu * np.sum(diff**2, axis=1)))
    ok = (c.mu, c.R) == (0.5, 40.0) and violations == 0
    record(7, ok, f"dissipativity: constants ({c.mu:g}, {c.R:g}), {violations} violations in 10^4 pairs")


def test_quadrature(record):
    V = DCPotential(QuadraticF([0.0, 0.0], np.eye(2)))
    Z = diag.normalize_density(V, ((-8, 8), (-8, 8)), tol=1e-6)
    edges = np.linspace(-8, 8, 41)
    h = diag.target_hist(V, Z, edges, edges)
    ref = np.outer(np.diff(norm.cdf(edges)), np.diff(norm.cdf(edges)))
    per_bin = float(np.max(np.abs(h.mass - ref)))
    ok = abs(Z - 2 * math.pi) < 1e-4 and per_bin < 1e-6
    record(8, ok, f"quadrature: |Z - 2pi| = {abs(Z - 2 * math.pi):.1e}, max per-bin error {per_bin:.1e}")
