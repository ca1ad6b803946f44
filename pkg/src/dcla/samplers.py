"""Langevin transition kernels and the multi-chain runner.

Kernels work on batches: ``x`` and the noise ``z`` have shape ``(..., d)``.
The chain-level wrappers (``ula_step``, ``dcla_step``, ...) take a
``ChainState`` and a ``RandomStream`` and return a new state.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import regularizers as regs
from .core import ChainState, SamplerKind, normal_block
from .potentials import (
    dissipativity_constants,
    max_stepsize,
    potential_subgradient,
    smoothed_potential_grad,
)
from .prox import moreau_grad, prox_of_moreau

logger = logging.getLogger(__name__)

# draw index where initial-distribution noise starts; step noise uses 0, 1, ...
INIT_COUNTER = 1 << 62


class SamplerDivergence(FloatingPointError):
    """A chain produced non-finite values."""

    def __init__(self, message, chains=()):
        super().__init__(message)
        self.chains = list(chains)


class StepSizeWarning(UserWarning):
    pass


def _noise(gamma, z):
    return math.sqrt(2.0 * gamma) * z


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise SamplerDivergence(f"non-finite {what}")


def ula_update(x, drift, gamma, z):
    return x - gamma * drift + _noise(gamma, z)


def moreau_ula_update(V, lam, gamma, x, z):
    return ula_update(x, smoothed_potential_grad(V, lam, x), gamma, z)


def psgla_update(V, gamma, x, z):
    return regs.full_prox(V.reg, gamma, x - gamma * V.f.grad(x) + _noise(gamma, z))


def dcla_update(V, lam, gamma, x, z):
    """One DC-LA step as a forward step on ``f - r2^lam`` then ``prox_{gamma r1^lam}``."""
    r1 = V.reg.component(regs.R1)
    r2 = V.reg.component(regs.R2)
    y = x - gamma * (V.f.grad(x) - moreau_grad(r2, lam, x)) + _noise(gamma, z)
    return prox_of_moreau(r1, lam, gamma, y)


def dcla_update_unrolled(V, lam, gamma, x, z):
    """The same step written as one expression in ``prox_{lam r2}`` and ``prox_{(lam+gamma) r1}``."""
    gf = V.f.grad(x)
    p2 = regs.component_prox(V.reg, regs.R2, lam, x)
    noise = math.sqrt(2.0 * gamma) * z
    s = gamma + lam
    inner = (s / lam) * x - gamma * gf - (gamma / lam) * p2 + noise
    return (
        x
        - (gamma * lam / s) * gf
        - (gamma / s) * p2
        + (lam / s) * noise
        + (gamma / s) * regs.component_prox(V.reg, regs.R1, s, inner)
    )


def dclas_update(V, lam, gamma, x, z):
    r1 = V.reg.component(regs.R1)
    y = x - gamma * (V.f.grad(x) - regs.grad_r2(V.reg, x)) + _noise(gamma, z)
    return prox_of_moreau(r1, lam, gamma, y)


class StepKernel:
    """A transition kernel bound to a potential and its step parameters.

    ``drift`` may replace the potential for plain ULA (``V`` then unused).
    """

    def __init__(self, kind, V=None, gamma=0.005, lam=0.01, drift=None, d=None):
        self.kind = SamplerKind.parse(kind)
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        if self.kind not in (SamplerKind.ULA, SamplerKind.PSGLA) and not lam > 0:
            raise ValueError("lambda must be positive")
        if V is None and (drift is None or self.kind is not SamplerKind.ULA):
            raise ValueError("a potential is required")
        self.V = V
        self.gamma = float(gamma)
        self.lam = float(lam)
        self.drift = drift
        self._d = d
        if self.kind is SamplerKind.PSGLA:
            regs.full_prox(V.reg, 1.0, np.zeros(V.d))
        elif self.kind is SamplerKind.DCLAS:
            regs.grad_r2(V.reg, np.zeros(V.d))

    @classmethod
    def from_config(cls, V, config):
        return cls(config.kind, V, config.gamma, config.lam)

    @property
    def d(self):
        if self.V is None:
            if self._d is None:
                raise ValueError("drift-only kernels need an explicit dimension")
            return self._d
        return self.V.d

    def update(self, x, z):
        """Advance a batch of points ``x`` with standard normal noise ``z``."""
        k, V, g, lam = self.kind, self.V, self.gamma, self.lam
        if k is SamplerKind.ULA:
            drift = self.drift(x) if self.drift is not None else potential_subgradient(V, x)
            return ula_update(x, drift, g, z)
        if k is SamplerKind.MOREAU_ULA:
            return moreau_ula_update(V, lam, g, x, z)
        if k is SamplerKind.PSGLA:
            return psgla_update(V, g, x, z)
        if k is SamplerKind.DCLA:
            return dcla_update(V, lam, g, x, z)
        return dclas_update(V, lam, g, x, z)

    def step(self, state, rng):
        z = rng.normal(state.x.size)
        x = self.update(state.x, z)
        _check_finite(x, f"{self.kind.value} state after step {state.step_count + 1}")
        return ChainState(x, state.step_count + 1)

    def stepsize_bound(self, q=1):
        """Theoretical step-size bound for DC-LA / DC-LA-S, or ``None`` if not computable."""
        if self.kind not in (SamplerKind.DCLA, SamplerKind.DCLAS) or self.V is None:
            return None
        try:
            mu = dissipativity_constants(self.V).mu
        except ValueError:
            return None
        L_f = self.V.f.L_f
        if self.kind is SamplerKind.DCLA:
            return max_stepsize(q, mu, self.lam, L_f, "DCLA")
        L_r2 = regs.lipschitz_info(self.V.reg, self.V.d).L_r2
        if L_r2 is None:
            return None
        return max_stepsize(q, mu, self.lam, L_f, "DCLAS", L_r2)


def _apply(state, rng, kernel):
    return kernel.step(state, rng)


def ula_step(drift, gamma, state, rng):
    """``x' = x - gamma * drift(x) + sqrt(2 gamma) Z``."""
    d = drift(state.x)
    _check_finite(d, "drift")
    z = rng.normal(state.x.size)
    x = ula_update(state.x, d, gamma, z)
    _check_finite(x, "ULA state")
    return ChainState(x, state.step_count + 1)


def moreau_ula_step(V, lam, gamma, state, rng):
    return _apply(state, rng, StepKernel(SamplerKind.MOREAU_ULA, V, gamma, lam))


def psgla_step(V, gamma, state, rng):
    return _apply(state, rng, StepKernel(SamplerKind.PSGLA, V, gamma))


def dcla_step(V, lam, gamma, state, rng):
    return _apply(state, rng, StepKernel(SamplerKind.DCLA, V, gamma, lam))


def dcla_step_unrolled(V, lam, gamma, state, rng):
    z = rng.normal(state.x.size)
    x = dcla_update_unrolled(V, lam, gamma, state.x, z)
    _check_finite(x, "DC-LA state")
    return ChainState(x, state.step_count + 1)


def dclas_step(V, lam, gamma, state, rng):
    return _apply(state, rng, StepKernel(SamplerKind.DCLAS, V, gamma, lam))


def gaussian_init(seed, n_chains, mean, std=1.0):
    """Initial points ``mean + std * Z`` drawn from each chain's own stream."""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    z = normal_block(seed, np.arange(n_chains), INIT_COUNTER, mean.size)
    return mean + std * z


def _initial(init, n_chains, d):
    if init is None:
        return np.zeros((n_chains, d))
    x0 = np.asarray(init, dtype=float)
    if x0.shape == (d,):
        return np.tile(x0, (n_chains, 1))
    if x0.shape == (n_chains, d):
        return x0.copy()
    raise ValueError(f"init must have shape ({d},) or ({n_chains}, {d}), got {x0.shape}")


def default_workers():
    return max(1, int(os.environ.get("DCLA_THREADS", "1")))


def _warn_stepsize(kernel):
    bound = kernel.stepsize_bound()
    if bound is not None and kernel.gamma > bound:
        warnings.warn(
            f"gamma={kernel.gamma:g} exceeds the theoretical bound {bound:.4g} "
            f"for {kernel.kind.value}",
            StepSizeWarning,
            stacklevel=3,
        )


def run_chains(kernel, config, init=None, on_nonfinite="raise", workers=None, block_size=2048):
    """Run ``config.n_chains`` independent chains and return their final states.

    Chain ``i`` draws its noise from ``RandomStream(config.seed, i)``, so the
    result does not depend on ``workers`` or ``block_size``.

    Parameters
    ----------
    on_nonfinite : {"raise", "keep"}
        With ``"keep"`` diverged chains are returned as rows of NaN.

    Returns
    -------
    ndarray, shape (n_chains, d)
    """
    if on_nonfinite not in ("raise", "keep"):
        raise ValueError("on_nonfinite must be 'raise' or 'keep'")
    d = kernel.d
    n = config.n_chains
    x = _initial(init, n, d)
    _warn_stepsize(kernel)
    if config.n_steps == 0:
        return x

    def run_block(lo, hi):
        xb = x[lo:hi]
        ids = np.arange(lo, hi)
        with np.errstate(all="ignore"):
            for k in range(config.n_steps):
                z = normal_block(config.seed, ids, k * d, d)
                xb = kernel.update(xb, z)
                bad = ~np.all(np.isfinite(xb), axis=-1)
                if bad.any():
                    if on_nonfinite == "raise":
                        chains = (ids[bad]).tolist()
                        raise SamplerDivergence(
                            f"{kernel.kind.value}: chains {chains[:10]} became non-finite "
                            f"at step {k + 1}",
                            chains,
                        )
                    xb[bad] = np.nan
        x[lo:hi] = xb

    blocks = [(lo, min(lo + block_size, n)) for lo in range(0, n, block_size)]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(blocks) == 1:
        for lo, hi in blocks:
            run_block(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(run_block, lo, hi) for lo, hi in blocks]:
                fut.result()
    return x


def run_single_chain(kernel, config, init=None, burn_in=500, chain_index=0):
    """Run one long chain and return the states after ``burn_in`` steps.

    Returns
    -------
    ndarray, shape (n_steps - burn_in, d)
    """
    if not 0 <= burn_in < config.n_steps:
        raise ValueError("burn_in must lie in [0, n_steps)")
    d = kernel.d
    x = _initial(init, 1, d)
    _warn_stepsize(kernel)
    out = np.empty((config.n_steps - burn_in, d))
    ids = np.array([chain_index])
    for k in range(config.n_steps):
        x = kernel.update(x, normal_block(config.seed, ids, k * d, d))
        if not np.all(np.isfinite(x)):
            raise SamplerDivergence(f"single chain became non-finite at step {k + 1}", [chain_index])
        if k >= burn_in:
            out[k - burn_in] = x[0]
    return out
