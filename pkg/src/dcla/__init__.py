"""Langevin sampling for potentials f + r1 - r2 with difference-of-convex regularizers."""

from .core import ChainState, RandomStream, SamplerConfig, SamplerKind, draw_normal
from .potentials import DCPotential, QuadraticF, SmoothF
from .regularizers import DCRegularizer
from .samplers import StepKernel, run_chains, run_single_chain

__all__ = [
    "ChainState",
    "DCPotential",
    "DCRegularizer",
    "QuadraticF",
    "RandomStream",
    "SamplerConfig",
    "SamplerKind",
    "SmoothF",
    "StepKernel",
    "draw_normal",
    "run_chains",
    "run_single_chain",
]

__version__ = "0.1.0"
