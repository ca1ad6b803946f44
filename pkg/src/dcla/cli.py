"""Command-line entry point: ``dcla run | ablate | prox-check | stepsize``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import config as cfgmod
from .harness import run_ablation, run_experiment
from .oracles import prox_check
from .potentials import max_stepsize


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text}") from exc


def _load(args):
    cfg = cfgmod.parse_config(args.config)
    if args.seed is not None:
        cfg.sampler.seed = args.seed
    return cfg


def cmd_run(args):
    cfg = _load(args)
    report = run_experiment(cfg, args.out)
    for name, entry in report["samplers"].items():
        kl = entry.get("kl", {}).get(str(cfg.histogram.bins))
        extra = f"  KL@{cfg.histogram.bins}={kl:.5f}" if kl is not None else ""
        print(f"{name:10s} {entry['wall_time_s']:.2f}s{extra}")
    return 0


def cmd_ablate(args):
    cfg = _load(args)
    rows = run_ablation(cfg, args.lambdas, args.gammas, args.out)
    for r in rows:
        print(f"lambda={r['lambda']:<8g} gamma={r['gamma']:<8g} KL={r['binned_kl']:.5f} "
              f"nonfinite={r['n_nonfinite_chains']}")
    return 0


def cmd_prox_check(args):
    devs = prox_check(args.n, args.seed)
    worst = 0.0
    for name, dev in devs.items():
        print(f"{name:36s} max deviation {dev:.3e}")
        worst = max(worst, dev)
    return 0 if worst <= args.tol else 1


def cmd_stepsize(args):
    out = {"DCLA": max_stepsize(args.q, args.mu, args.lam, args.lf, "DCLA")}
    if args.lr2 is not None:
        out["DCLAS"] = max_stepsize(args.q, args.mu, args.lam, args.lf, "DCLAS", args.lr2)
    print(json.dumps(out, indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="dcla", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured samplers and write metrics")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(func=cmd_run)

    ab = sub.add_parser("ablate", help="DC-LA binned KL over a (lambda, gamma) grid")
    ab.add_argument("--config", required=True)
    ab.add_argument("--lambda", dest="lambdas", type=_floats, default=None)
    ab.add_argument("--gamma", dest="gammas", type=_floats, default=None)
    ab.add_argument("--out", default=None)
    ab.add_argument("--seed", type=int, default=None)
    ab.set_defaults(func=cmd_ablate)

    pc = sub.add_parser("prox-check", help="compare closed-form proxes with grid search")
    pc.add_argument("--n", type=int, default=200)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--tol", type=float, default=1e-4)
    pc.set_defaults(func=cmd_prox_check)

    st = sub.add_parser("stepsize", help="print the theoretical step-size bounds")
    st.add_argument("--q", type=int, default=1)
    st.add_argument("--mu", type=float, required=True)
    st.add_argument("--lam", type=float, required=True)
    st.add_argument("--lf", type=float, required=True)
    st.add_argument("--lr2", type=float, default=None)
    st.set_defaults(func=cmd_stepsize)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # every failure becomes a diagnostic and a nonzero exit
        print(f"dcla {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
