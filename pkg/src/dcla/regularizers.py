"""Difference-of-convex regularizers ``r = scale * (r1 - r2)``.

Each catalog entry pairs two convex components (``ConvexFunction``
instances, unscaled) with the Lipschitz/Hölder metadata the dissipativity and
step-size calculators need.  The sparsity weight ``scale`` multiplies both
components, so the decomposition stays valid and component proxes just absorb
it into the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .prox import (
    ConvexFunction,
    L1Norm,
    L2Norm,
    ScalarConvexFn,
    Separable,
    ZeroFunction,
    prox_1d_convex,
    prox_l1,
    prox_l1_minus_eps_l2,
)

KINDS = ("L1MinusL2", "L1MinusSigmaQ", "CappedL1", "PiL", "L1MinusL2PowP", "Zero", "Custom")

R1 = "R1"
R2 = "R2"


class UnsupportedOperation(ValueError):
    """The requested operation has no implementation for this regularizer."""


class TopQNorm(ConvexFunction):
    """Sum of the ``q`` largest magnitudes.

    Ties in magnitude are broken towards the lowest index.
    """

    def __init__(self, q):
        self.q = int(q)

    def _check(self, x):
        d = np.shape(x)[-1]
        if self.q > d:
            raise ValueError(f"q={self.q} exceeds the dimension d={d}")

    def _top(self, x):
        return np.argsort(-np.abs(x), axis=-1, kind="stable")[..., : self.q]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        self._check(x)
        return np.take_along_axis(np.abs(x), self._top(x), axis=-1).sum(axis=-1)

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        self._check(x)
        g = np.zeros_like(x)
        idx = self._top(x)
        np.put_along_axis(g, idx, np.sign(np.take_along_axis(x, idx, axis=-1)), axis=-1)
        return g

    def prox(self, x, t):
        x = np.asarray(x, dtype=float)
        self._check(x)
        if self.q == x.shape[-1]:
            return prox_l1(x, t)
        raise UnsupportedOperation("prox of the top-q norm is only available for q = d")


class PowerNorm(ConvexFunction):
    """``|x|_2^p`` for ``1 < p < 2``; differentiable with Hölder gradient."""

    def __init__(self, p):
        self.p = float(p)
        self._radial = ScalarConvexFn(
            value=lambda s: np.abs(s) ** self.p,
            subgradient=lambda s: self.p * np.sign(s) * np.abs(s) ** (self.p - 1.0),
        )

    def value(self, x):
        return np.linalg.norm(x, axis=-1) ** self.p

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(nrm > 0, self.p * nrm ** (self.p - 2.0) * x, 0.0)

    gradient = subgradient

    def prox(self, x, t):
        # radial problem: min_s t s^p + (s - |x|)^2 / 2 over s >= 0
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x, axis=-1, keepdims=True)
        s = prox_1d_convex(self._radial, t, nrm.reshape(-1)).reshape(nrm.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(nrm > 0, s / nrm, 0.0) * x


def _capped_r2(theta):
    # theta|u| - min(1, theta|u|) = max(theta|u| - 1, 0)
    return ScalarConvexFn(
        value=lambda u: np.maximum(theta * np.abs(u) - 1.0, 0.0),
        subgradient=lambda u: np.where(theta * np.abs(u) > 1.0, theta * np.sign(u), 0.0),
    )


def _pil_r1(theta, a):
    c = theta / (a - 1.0)
    return ScalarConvexFn(
        value=lambda u: c * np.maximum(1.0 / theta, np.abs(u)),
        subgradient=lambda u: np.where(np.abs(u) > 1.0 / theta, c * np.sign(u), 0.0),
    )


def _pil_r2(theta, a):
    c = theta / (a - 1.0)

    def value(u):
        au = np.abs(u)
        return c * np.maximum(1.0 / theta, au) - np.minimum(
            1.0, np.maximum(0.0, (theta * au - 1.0) / (a - 1.0))
        )

    return ScalarConvexFn(
        value=value,
        subgradient=lambda u: np.where(np.abs(u) > a / theta, c * np.sign(u), 0.0),
    )


@dataclass
class RegularizerInfo:
    """Constants of a regularizer, already multiplied by its scale.

    ``G2`` is set when the second component is Lipschitz; otherwise
    ``holder = (kappa, M)`` describes its Hölder-continuous gradient.
    ``L_r2`` is set when the second component is Lipschitz smooth.
    """

    G1: float
    G2: Optional[float] = None
    holder: Optional[tuple] = None
    L_r2: Optional[float] = None


@dataclass
class DCRegularizer:
    """``scale * (r1 - r2)`` from the catalog.

    ``params`` holds kind-specific parameters: ``q`` (L1MinusSigmaQ),
    ``theta`` (CappedL1, PiL), ``a`` (PiL), ``p`` and optional Hölder constant
    ``C`` (L1MinusL2PowP).  A ``Custom`` regularizer takes its components and
    constants from ``custom``.
    """

    kind: str
    scale: float = 1.0
    params: dict = field(default_factory=dict)
    custom: Optional["CustomParts"] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.kind != "Zero" and not self.scale > 0:
            raise ValueError("scale must be positive")
        p = self.params
        if self.kind == "L1MinusSigmaQ":
            if int(p.get("q", 0)) < 1:
                raise ValueError("L1MinusSigmaQ needs an integer q >= 1")
        elif self.kind == "CappedL1":
            if not p.get("theta", 0) > 0:
                raise ValueError("CappedL1 needs theta > 0")
        elif self.kind == "PiL":
            if not p.get("theta", 0) > 0 or not p.get("a", 0) > 1:
                raise ValueError("PiL needs theta > 0 and a > 1")
        elif self.kind == "L1MinusL2PowP":
            if not 1 < p.get("p", 0) < 2:
                raise ValueError("L1MinusL2PowP needs 1 < p < 2")
        elif self.kind == "Custom" and self.custom is None:
            raise ValueError("Custom regularizer needs its parts")
        self._r1, self._r2 = self._components()

    def _components(self):
        p = self.params
        if self.kind == "L1MinusL2":
            return L1Norm(), L2Norm()
        if self.kind == "L1MinusSigmaQ":
            return L1Norm(), TopQNorm(p["q"])
        if self.kind == "CappedL1":
            return L1Norm() * p["theta"], Separable(_capped_r2(p["theta"]))
        if self.kind == "PiL":
            return Separable(_pil_r1(p["theta"], p["a"])), Separable(_pil_r2(p["theta"], p["a"]))
        if self.kind == "L1MinusL2PowP":
            return L1Norm(), PowerNorm(p["p"])
        if self.kind == "Zero":
            return ZeroFunction(), ZeroFunction()
        return self.custom.r1, self.custom.r2

    @property
    def effective_scale(self):
        return 0.0 if self.kind == "Zero" else float(self.scale)

    def component(self, which):
        """The scaled component ``scale * r1`` or ``scale * r2``."""
        base = {R1: self._r1, R2: self._r2}[which]
        if self.kind == "Zero":
            return base
        return base * self.scale

    def to_dict(self):
        if self.kind == "Custom":
            raise UnsupportedOperation("Custom regularizers are not serializable")
        return {"kind": self.kind, "scale": self.scale, "params": dict(self.params)}


@dataclass
class CustomParts:
    """User-supplied pieces of a ``Custom`` regularizer (unscaled)."""

    r1: ConvexFunction
    r2: ConvexFunction
    info: RegularizerInfo
    full_prox: Optional[Callable] = None
    grad_r2: Optional[Callable] = None


def l1_minus_l2(scale=1.0):
    return DCRegularizer("L1MinusL2", scale)


def l1_minus_sigma_q(q, scale=1.0):
    return DCRegularizer("L1MinusSigmaQ", scale, {"q": int(q)})


def capped_l1(theta, scale=1.0):
    return DCRegularizer("CappedL1", scale, {"theta": float(theta)})


def pil(theta, a, scale=1.0):
    return DCRegularizer("PiL", scale, {"theta": float(theta), "a": float(a)})


def l1_minus_l2_pow(p, scale=1.0, C=None):
    params = {"p": float(p)}
    if C is not None:
        params["C"] = float(C)
    return DCRegularizer("L1MinusL2PowP", scale, params)


def zero():
    return DCRegularizer("Zero", 1.0)


def custom(r1, r2, info, scale=1.0, full_prox=None, grad_r2=None):
    return DCRegularizer("Custom", scale, custom=CustomParts(r1, r2, info, full_prox, grad_r2))


def from_dict(spec):
    return DCRegularizer(spec["kind"], spec.get("scale", 1.0), dict(spec.get("params", {})))


def dc_eval(reg, x):
    """Return ``(r1, r2, r)`` at ``x``, all scaled; ``r = r1 - r2``."""
    x = np.asarray(x, dtype=float)
    v1 = reg.component(R1).value(x)
    v2 = reg.component(R2).value(x)
    return v1, v2, v1 - v2


def dc_subgradient(reg, x):
    """Subgradient selections ``(g1, g2)`` of the scaled components at ``x``."""
    x = np.asarray(x, dtype=float)
    return reg.component(R1).subgradient(x), reg.component(R2).subgradient(x)


def component_prox(reg, which, t, x):
    """Proximal point of ``t * scale * r_which`` at ``x``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return reg.component(which).prox(np.asarray(x, dtype=float), t)


def full_prox(reg, t, x):
    """Proximal point of ``t * r`` for the whole DC function (one fixed selection)."""
    x = np.asarray(x, dtype=float)
    if reg.kind == "Zero":
        return x.copy()
    if reg.kind == "L1MinusL2":
        return prox_l1_minus_eps_l2(x, t * reg.scale, 1.0)
    if reg.kind == "Custom" and reg.custom.full_prox is not None:
        return np.asarray(reg.custom.full_prox(x, t * reg.scale), dtype=float)
    raise UnsupportedOperation(f"no prox of the full regularizer for kind {reg.kind}")


def grad_r2(reg, x):
    """Gradient of the scaled second component, for kinds where it is differentiable."""
    x = np.asarray(x, dtype=float)
    if reg.kind == "Zero":
        return np.zeros_like(x)
    if reg.kind == "L1MinusL2PowP":
        return reg.scale * reg._r2.gradient(x)
    if reg.kind == "Custom" and reg.custom.grad_r2 is not None:
        return reg.scale * np.asarray(reg.custom.grad_r2(x), dtype=float)
    raise UnsupportedOperation(f"r2 of kind {reg.kind} has no gradient callback")


def default_holder_constant(p):
    return 2.0**p * p


def lipschitz_info(reg, d):
    """Lipschitz (or Hölder) constants of the scaled components in dimension ``d``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    tau = reg.effective_scale
    rd = math.sqrt(d)
    p = reg.params
    if reg.kind == "Zero":
        return RegularizerInfo(G1=0.0, G2=0.0, L_r2=0.0)
    if reg.kind == "L1MinusL2":
        return RegularizerInfo(G1=tau * rd, G2=tau)
    if reg.kind == "L1MinusSigmaQ":
        return RegularizerInfo(G1=tau * rd, G2=tau * rd)
    if reg.kind == "CappedL1":
        return RegularizerInfo(G1=tau * p["theta"] * rd, G2=2.0 * tau * p["theta"] * rd)
    if reg.kind == "PiL":
        c = p["theta"] / (p["a"] - 1.0)
        return RegularizerInfo(G1=tau * c * rd, G2=2.0 * tau * c * rd)
    if reg.kind == "L1MinusL2PowP":
        C = p.get("C", default_holder_constant(p["p"]))
        return RegularizerInfo(G1=tau * rd, holder=(p["p"] - 1.0, tau * C))
    info = reg.custom.info
    return RegularizerInfo(
        G1=tau * info.G1,
        G2=None if info.G2 is None else tau * info.G2,
        holder=None if info.holder is None else (info.holder[0], tau * info.holder[1]),
        L_r2=None if info.L_r2 is None else tau * info.L_r2,
    )
