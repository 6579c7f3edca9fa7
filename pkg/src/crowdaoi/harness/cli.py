"""Command line entry point: ``simulate``, ``bounds`` and ``selfcheck``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..bounds import bounds_report
from ..core import ConfigurationError
from ..metrics import InfeasibleError
from .config import FORMATS, load_config
from .experiment import emit_results, render_results, run_experiment
from .presets import PRESETS
from .selfcheck import run_selfcheck


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crowdaoi", description="Age-of-information PoA simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment and write results")
    sim.add_argument("--config")
    sim.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    sim.add_argument("--policy")
    sim.add_argument("--beta", type=_floats)
    sim.add_argument("--gamma", type=_floats)
    sim.add_argument("--seed", type=_u64)
    sim.add_argument("--replications", type=int)
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--warmup", type=int)
    sim.add_argument("--out")
    sim.add_argument("--format", choices=FORMATS)

    bnd = sub.add_parser("bounds", help="print closed-form bounds without simulating")
    bnd.add_argument("--config")
    bnd.add_argument("--preset")

    sub.add_parser("selfcheck", help="run the runtime invariant checks")
    return parser


def _load(args):
    if not args.config and not args.preset:
        raise ConfigurationError("give --config and/or --preset")
    return load_config(args.config, args.preset)


def _simulate(args) -> int:
    cfg = _load(args)
    policy = tuple(p.strip() for p in args.policy.split(",")) if args.policy else None
    horizon = args.horizon
    warmup = args.warmup
    if horizon is not None and warmup is None and cfg.warmup is not None and cfg.warmup >= horizon:
        warmup = horizon // 10
    cfg = cfg.with_overrides(
        policy=policy,
        beta=args.beta,
        gamma=args.gamma,
        base_seed=args.seed,
        replications=args.replications,
        horizon=horizon,
        warmup=warmup,
        output=args.out,
        format=args.format,
    )
    rows = run_experiment(cfg)
    if cfg.output:
        emit_results(rows, cfg.format, cfg.output)
    else:
        sys.stdout.write(render_results(rows, cfg.format))
    return 0


def _bounds(args) -> int:
    cfg = _load(args)
    out = []
    for beta in cfg.beta:
        for gamma in cfg.gamma:
            rep = bounds_report(cfg.process, beta, gamma, cfg.prices.p_max)
            out.append({"beta": beta, "gamma": gamma, **rep.as_dict()})
    print(json.dumps(out, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "bounds":
            return _bounds(args)
        return 0 if run_selfcheck() else 1
    except (ConfigurationError, InfeasibleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
