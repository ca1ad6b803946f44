"""Target potentials ``V = f + r1 - r2`` and their theoretical constants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import regularizers as regs
from .prox import moreau_grad, moreau_value


class QuadraticF:
    """``f(x) = 0.5 (x - mean)^T P (x - mean)`` with ``P`` symmetric positive definite."""

    def __init__(self, mean, precision):
        self.mean = np.array(mean, dtype=float).reshape(-1)
        self.precision = np.array(precision, dtype=float)
        d = self.mean.size
        if self.precision.shape != (d, d):
            raise ValueError(f"precision must be {d}x{d}, got {self.precision.shape}")
        if not np.allclose(self.precision, self.precision.T, rtol=0, atol=1e-12):
            raise ValueError("precision matrix is not symmetric")
        eig = np.linalg.eigvalsh(self.precision)
        if eig[0] <= 0:
            raise ValueError("precision matrix is not positive definite")
        self.eigenvalues = eig
        self.L_f = float(eig[-1])
        self.mu_f = float(eig[0])
        self.R_f = 0.0

    @property
    def d(self):
        return self.mean.size

    def _diff(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}, got {x.shape[-1]}")
        return x - self.mean

    def value(self, x):
        diff = self._diff(x)
        return 0.5 * np.sum(diff * (diff @ self.precision), axis=-1)

    def grad(self, x):
        return self._diff(x) @ self.precision

    def to_dict(self):
        return {"mean": self.mean.tolist(), "precision": self.precision.tolist()}


@dataclass
class SmoothF:
    """A smooth ``f`` given by callbacks.

    ``L_f`` is the declared gradient Lipschitz constant.  ``mu_f`` and ``R_f``
    declare ``f`` as ``(mu_f, R_f)``-distant dissipative when known.
    """

    value_fn: Callable
    grad_fn: Callable
    d: int
    L_f: float
    mu_f: Optional[float] = None
    R_f: float = 0.0

    def value(self, x):
        return np.asarray(self.value_fn(np.asarray(x, dtype=float)), dtype=float)

    def grad(self, x):
        return np.asarray(self.grad_fn(np.asarray(x, dtype=float)), dtype=float)


@dataclass
class DCPotential:
    f: object
    reg: regs.DCRegularizer = field(default_factory=regs.zero)

    @property
    def d(self):
        return self.f.d


@dataclass
class DissipativityConstants:
    mu: float
    R: float


def f_eval_grad(f, x):
    """Return ``(f(x), grad f(x))``."""
    return f.value(x), f.grad(x)


def potential_eval(V, x):
    """``V(x) = f(x) + r1(x) - r2(x)``."""
    x = np.asarray(x, dtype=float)
    return V.f.value(x) + regs.dc_eval(V.reg, x)[2]


def smoothed_potential_eval(V, lam, x):
    """``V_lam(x) = f(x) + r1^lam(x) - r2^lam(x)`` (Moreau envelopes of the scaled components)."""
    x = np.asarray(x, dtype=float)
    return (
        V.f.value(x)
        + moreau_value(V.reg.component(regs.R1), lam, x)
        - moreau_value(V.reg.component(regs.R2), lam, x)
    )


def smoothed_potential_grad(V, lam, x):
    x = np.asarray(x, dtype=float)
    return (
        V.f.grad(x)
        + moreau_grad(V.reg.component(regs.R1), lam, x)
        - moreau_grad(V.reg.component(regs.R2), lam, x)
    )


def potential_subgradient(V, x):
    """``grad f + g1 - g2`` with the regularizer's fixed subgradient selections."""
    x = np.asarray(x, dtype=float)
    g1, g2 = regs.dc_subgradient(V.reg, x)
    return V.f.grad(x) + g1 - g2


def dissipativity_constants(V, d=None):
    """Distant-dissipativity modulus and radius of ``V``.

    If ``f`` is ``(mu_f, R_f)``-distant dissipative, ``V`` is
    ``(mu_f / 2, max(R_f, 4 G2 / mu_f))``-distant dissipative for Lipschitz
    ``r2``, and ``(mu_f / 2, max(R_f, (2 M / mu_f)^(1 / (1 - kappa))))`` when
    ``grad r2`` is ``(kappa, M)``-Hölder.  With ``r2 = 0`` the constants of
    ``f`` are returned unchanged.
    """
    d = V.d if d is None else d
    mu_f = getattr(V.f, "mu_f", None)
    if mu_f is None or not mu_f > 0:
        raise ValueError("f must be declared distant dissipative with mu_f > 0")
    R_f = float(getattr(V.f, "R_f", 0.0))
    info = regs.lipschitz_info(V.reg, d)
    if info.G2 is not None:
        if info.G2 == 0:
            return DissipativityConstants(mu_f, R_f)
        return DissipativityConstants(mu_f / 2.0, max(R_f, 4.0 * info.G2 / mu_f))
    kappa, M = info.holder
    return DissipativityConstants(mu_f / 2.0, max(R_f, (2.0 * M / mu_f) ** (1.0 / (1.0 - kappa))))


def max_stepsize(q, mu, lam, L_f, variant="DCLA", L_r2=None):
    """Largest step size covered by the Wasserstein-``q`` convergence guarantees.

    ``variant`` is ``"DCLA"`` (both components smoothed) or ``"DCLAS"`` (smooth
    ``r2`` with gradient Lipschitz constant ``L_r2``).
    """
    if q < 1 or int(q) != q:
        raise ValueError("q must be a positive integer")
    if min(mu, lam, L_f) <= 0:
        raise ValueError("mu, lam and L_f must be positive")
    if variant == "DCLA":
        c = 2.0 + lam * L_f
    elif variant == "DCLAS":
        if L_r2 is None or L_r2 < 0:
            raise ValueError("DCLAS needs L_r2 >= 0")
        c = 1.0 + lam * L_f + lam * L_r2
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if q == 1:
        return mu * lam**2 / (2.0 * c**2)
    return min(mu * lam**2 / (c**2 * 2.0 ** (2 * q + 3) * (2 * q - 1)), lam / (4.0 * c))
