"""Proximal operators, Moreau envelopes and related calculus.

All vector operators act on the last axis, so a ``(n, d)`` array is treated
as ``n`` independent points.  ``prox(x, t)`` always means
``argmin_y g(y) + |y - x|^2 / (2 t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ProxError(RuntimeError):
    """Raised when a proximal point cannot be located."""


def _norm(x):
    return np.linalg.norm(x, axis=-1, keepdims=True)


def _check_t(t):
    if not np.all(np.asarray(t) > 0):
        raise ValueError("prox parameter t must be positive")


def prox_l1(x, t):
    """Soft thresholding, ``sign(x) * max(|x| - t, 0)``."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def prox_l2(x, t):
    """Block soft thresholding, ``max(1 - t / |x|, 0) * x`` (zero at ``x = 0``)."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    nrm = _norm(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(nrm > t, 1.0 - t / nrm, 0.0)
    return factor * x


def prox_l1_minus_eps_l2(x, t, eps=1.0):
    """Proximal map of ``t * (|x|_1 - eps * |x|_2)`` for ``0 < eps <= 1``.

    Uses the three-branch closed form.  Where the proximal set has several
    elements the following selection is returned: ``0`` on the first branch
    and the lowest index among tied largest magnitudes on the third.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inf = ax.max(axis=-1, keepdims=True)

    soft = prox_l1(x, t)
    snorm = _norm(soft)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(snorm > 0, 1.0 + eps * t / snorm, 0.0) * soft

    istar = np.argmax(ax, axis=-1)[..., None]
    xstar = np.take_along_axis(x, istar, axis=-1)
    single = np.zeros_like(x)
    np.put_along_axis(single, istar, np.sign(xstar) * (inf + (eps - 1.0) * t), axis=-1)

    out = np.where(inf > t, big, single)
    return np.where(inf <= (1.0 - eps) * t, 0.0, out)


def prox_neg_abs(v, gam):
    """Proximal map of ``-gam * |.|`` in 1D.

    The map is set valued at ``v = 0`` (``{gam, -gam}``); ``+gam`` is returned.
    """
    v = np.asarray(v, dtype=float)
    out = np.where(v >= 0, v + gam, v - gam)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ScalarConvexFn:
    """A convex function of one real variable given by value and a subgradient.

    Both callables must accept numpy arrays elementwise.  ``subgradient`` must
    be a nondecreasing selection of the subdifferential.
    """

    value: Callable
    subgradient: Callable


def prox_1d_convex(phi, t, x, tol=0.0, max_iter=200):
    """Proximal point of a scalar convex function by bisection.

    Solves ``0 in dphi(y) + (y - x) / t`` on the increasing map
    ``y -> phi.subgradient(y) + (y - x) / t``.  ``x`` may be an array; every
    entry is solved independently.  Bisection stops once the bracket is no
    wider than ``tol`` or can no longer be split in floating point.

    Raises
    ------
    ProxError
        If no sign change is bracketed before the half-width exceeds
        ``|x| + 1e6``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)

    def h(y):
        return phi.subgradient(y) + (y - x) / t

    width = np.ones_like(x)
    limit = np.abs(x) + 1e6
    while True:
        lo, hi = x - width, x + width
        bad = (h(lo) > 0) | (h(hi) < 0)
        if not bad.any():
            break
        if np.any(width[bad] > limit[bad]):
            raise ProxError("could not bracket the proximal point")
        width = np.where(bad, 2.0 * width, width)

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo <= tol) | (mid <= lo) | (mid >= hi)):
            break
        up = h(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    y = 0.5 * (lo + hi)
    return float(y[0]) if scalar else y


class ConvexFunction:
    """A convex function with a value, a subgradient selection and a prox.

    ``value`` reduces over the last axis.  ``prox(x, t)`` returns the proximal
    point of ``t * self`` at ``x``.
    """

    def value(self, x):
        raise NotImplementedError

    def subgradient(self, x):
        raise NotImplementedError

    def prox(self, x, t):
        raise NotImplementedError

    def __mul__(self, c):
        return Scaled(self, c)

    __rmul__ = __mul__


class ZeroFunction(ConvexFunction):
    def value(self, x):
        return np.zeros(np.shape(x)[:-1])

    def subgradient(self, x):
        return np.zeros(np.shape(x))

    def prox(self, x, t):
        return np.array(x, dtype=float)


class L1Norm(ConvexFunction):
    def value(self, x):
        return np.sum(np.abs(x), axis=-1)

    def subgradient(self, x):
        return np.sign(np.asarray(x, dtype=float))

    def prox(self, x, t):
        return prox_l1(x, t)


class L2Norm(ConvexFunction):
    def value(self, x):
        return np.linalg.norm(x, axis=-1)

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        nrm = _norm(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(nrm > 0, x / nrm, 0.0)

    def prox(self, x, t):
        return prox_l2(x, t)


class HalfSquaredNorm(ConvexFunction):
    """``|x|^2 / 2``."""

    def value(self, x):
        return 0.5 * np.sum(np.square(x), axis=-1)

    def subgradient(self, x):
        return np.array(x, dtype=float)

    def prox(self, x, t):
        return np.asarray(x, dtype=float) / (1.0 + t)


class Separable(ConvexFunction):
    """``sum_i phi(x_i)`` with the prox computed coordinatewise by bisection."""

    def __init__(self, phi):
        self.phi = phi

    def value(self, x):
        return np.sum(self.phi.value(np.asarray(x, dtype=float)), axis=-1)

    def subgradient(self, x):
        return self.phi.subgradient(np.asarray(x, dtype=float))

    def prox(self, x, t):
        x = np.asarray(x, dtype=float)
        return prox_1d_convex(self.phi, t, x.reshape(-1)).reshape(x.shape)


class Scaled(ConvexFunction):
    """``c * g`` for ``c >= 0``."""

    def __init__(self, base, c):
        if c < 0:
            raise ValueError("scale must be non-negative")
        self.base = base
        self.c = float(c)

    def value(self, x):
        return self.c * self.base.value(x)

    def subgradient(self, x):
        return self.c * self.base.subgradient(x)

    def prox(self, x, t):
        if self.c == 0:
            return np.array(x, dtype=float)
        return self.base.prox(x, self.c * t)


def moreau_value(g, lam, x):
    """Moreau envelope ``g^lam(x) = g(p) + |x - p|^2 / (2 lam)``, ``p = prox_{lam g}(x)``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    p = g.prox(x, lam)
    return g.value(p) + np.sum(np.square(x - p), axis=-1) / (2.0 * lam)


def moreau_grad(g, lam, x):
    """Gradient of the Moreau envelope, ``(x - prox_{lam g}(x)) / lam``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    return (x - g.prox(x, lam)) / lam


def prox_of_moreau(g, lam, gam, x):
    """Proximal map of ``gam * g^lam``.

    Equal to ``(gam * prox_{(gam+lam) g}(x) + lam * x) / (gam + lam)``; it is
    evaluated as ``x - gam / (gam + lam) * (x - prox_{(gam+lam) g}(x))`` so that
    ``g = 0`` returns ``x`` bit for bit.
    """
    if lam <= 0 or gam <= 0:
        raise ValueError("lam and gam must be positive")
    x = np.asarray(x, dtype=float)
    return x - (gam / (gam + lam)) * (x - g.prox(x, gam + lam))


def approx_prox_fixed_point(subgrad, eta, x, iters=1):
    """Approximate ``prox_{eta g}(x)`` by iterating ``v <- x - eta * subgrad(v)`` from ``v = x``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x = np.asarray(x, dtype=float)
    v = x
    for _ in range(iters):
        v = x - eta * np.asarray(subgrad(v), dtype=float)
    return v
