"""Brute-force reference solutions for proximal problems.

These are slow grid searches used to check the closed forms; samplers never
call them.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import minimum_filter

from . import prox as px
from . import regularizers as regs


def grid_argmin(objective, bounds, step, final_step=None, keep=4, zoom=5):
    """Global minimizer of ``objective`` over a box by grid search plus local zooming.

    ``objective`` maps an ``(n, k)`` array of points to ``n`` values.  A full
    grid with spacing ``step`` is evaluated; the ``keep`` best local minima of
    that grid are then refined on successively finer grids (spacing divided by ``zoom``) down
    to ``final_step``.
    """
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    k = bounds.shape[0]
    # lattice anchored at the origin so the coordinate axes (where |.|_1 kinks) are nodes
    axes = [step * np.arange(np.floor(lo / step), np.ceil(hi / step) + 1) for lo, hi in bounds]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    vals = objective(mesh)
    # refine from the best coarse local minima, one per basin
    grid_vals = vals.reshape([a.size for a in axes])
    is_min = (grid_vals <= minimum_filter(grid_vals, size=3, mode="nearest")).ravel()
    cand = np.flatnonzero(is_min)
    order = cand[np.argsort(vals[cand], kind="stable")[:keep]]
    best_x, best_v = mesh[order[0]], vals[order[0]]
    final_step = step if final_step is None else final_step
    for start in mesh[order]:
        x, h = start, step
        while h > final_step * (1 + 1e-9):
            h_new = max(h / zoom, final_step)
            offs = np.arange(-3 * h, 3 * h + 0.5 * h_new, h_new)
            local = np.stack(np.meshgrid(*([offs] * k), indexing="ij"), axis=-1).reshape(-1, k)
            # re-center until the window's best point is its center
            for _ in range(200):
                cand = x + local
                v = objective(cand)
                j = int(np.argmin(v))
                if v[j] >= objective(x[None, :])[0]:
                    break
                x = cand[j]
            h = h_new
        v = objective(x[None, :])[0]
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


def prox_objective(value, x, t):
    """``y -> value(y) + |y - x|^2 / (2 t)`` for a batch of ``y``."""
    x = np.asarray(x, dtype=float)

    def obj(y):
        return value(y) + np.sum((y - x) ** 2, axis=-1) / (2.0 * t)

    return obj


def _bounds(x, t, lipschitz):
    r = lipschitz * t + 0.5
    return [(xi - r, xi + r) for xi in np.atleast_1d(x)]


def brute_prox(value, x, t, lipschitz, step=0.04, final_step=1e-6):
    """Grid-search proximal point for a function that is ``lipschitz``-Lipschitz."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y, _ = grid_argmin(prox_objective(value, x, t), _bounds(x, t, lipschitz), step, final_step)
    return y


def prox_check(n=200, seed=0):
    """Compare every closed-form prox with its grid oracle on random inputs.

    Returns a mapping ``operator name -> max |closed form - oracle|``.
    """
    rng = np.random.default_rng(seed)
    out = {}

    def record(name, a, b):
        out[name] = max(out.get(name, 0.0), float(np.max(np.abs(np.asarray(a) - np.asarray(b)))))

    l1, l2 = px.L1Norm(), px.L2Norm()
    capped_r2 = regs.capped_l1(2.0).component(regs.R2)
    capped_phi = regs._capped_r2(2.0)
    for _ in range(n):
        x = rng.uniform(-3, 3, size=2)
        t = rng.uniform(0.1, 2.0)
        record("prox_l1", px.prox_l1(x, t), brute_prox(l1.value, x, t, 1.5))
        record("prox_l2", px.prox_l2(x, t), brute_prox(l2.value, x, t, 1.0))
        for eps in (0.5, 1.0):
            val = lambda y, e=eps: l1.value(y) - e * l2.value(y)
            record(f"prox_l1_minus_eps_l2(eps={eps})", px.prox_l1_minus_eps_l2(x, t, eps),
                   brute_prox(val, x, t, 2.5))
        x1 = x[:1]
        record("prox_1d_convex(capped_l1 r2)", px.prox_1d_convex(capped_phi, t, x1[0]),
               brute_prox(capped_r2.value, x1, t, 2.0))
        lam, gam = rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)
        for name, g, G in (("l1", l1, 1.5), ("l2", l2, 1.0)):
            env = lambda y, g=g: px.moreau_value(g, lam, y)
            record(f"prox_of_moreau({name})", px.prox_of_moreau(g, lam, gam, x),
                   brute_prox(env, x, gam, G))
    return out
