"""Command-line front end.

Exit codes: 0 success, 1 failed acceptance check, 2 invalid input, 3 numerical non-convergence.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, get_args

from pydantic import ValidationError

from .acceptance import CHECKS, run_checks
from .dist import is_smp
from .errors import NumericalError, ParameterError
from .leakage import rad_leakage_bits, smp_leakage_bits
from .logging_utils import configure_logging, verbosity_level
from .optimizer import ddad_policy, dinkelbach_certify, greedy_smp_pmf, optimal_alpha_for_fcfs
from .oracle import brute_force_maxl, verify_ml_input
from .policies import BasePolicy
from .settings import load_settings, use_settings
from .simulator import SimConfig, empirical_source_age, simulate
from .sources import BernoulliSource, MarkovSource, SourceModel
from .tradeoff import Family, SweepSpec, evaluate, grid_values, sweep, write_points

logger = logging.getLogger(__name__)

FAMILIES = list(get_args(Family))
BETA_FAMILIES = {"lcfs-greedy", "lcfs-greedy-shifted", "fcfs-greedy", "fcfs-greedy-thinned"}


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2))


def _source(args: argparse.Namespace) -> SourceModel:
    if args.p01 is not None or args.p10 is not None:
        if args.p01 is None or args.p10 is None:
            raise ParameterError("p01/p10", "A Markov source needs both --p01 and --p10")
        return MarkovSource(p01=args.p01, p10=args.p10)
    return BernoulliSource(lam=args.lam)


def _param(args: argparse.Namespace) -> float:
    """The family's scalar parameter: beta, the target rate for ddad, tau otherwise."""
    if args.policy in BETA_FAMILIES:
        name, value = "beta", args.beta
    elif args.policy == "ddad":
        name, value = "rate", args.rate
    else:
        name, value = "tau", args.tau
    if value is None:
        raise ParameterError(name, f"--{name} is required for policy {args.policy}")
    return float(value)


def _spec(args: argparse.Namespace, grid: List[float]) -> SweepSpec:
    return SweepSpec(
        family=args.policy,
        grid=grid,
        source=_source(args),
        alpha=args.alpha,
        s_min=args.s_min,
        finite_n=args.n,
    )


def _policy(args: argparse.Namespace) -> BasePolicy:
    return evaluate(_spec(args, [_param(args)]), _param(args))[3]


def parse_grid(text: str) -> List[float]:
    """'start:stop:step' or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError("grid", f"Range '{text}' must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        return grid_values(start, stop, step)
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_age(args: argparse.Namespace) -> int:
    param = _param(args)
    point = sweep(_spec(args, [param]))
    if not point:
        raise ParameterError("policy", f"{args.policy} at {param} has no stable operating point")
    _emit({"policy": args.policy, "param": param, "delta": point[0].delta, "eta": point[0].eta})
    return 0


def cmd_leakage(args: argparse.Namespace) -> int:
    policy = _policy(args)
    pmf = policy.pmf
    if policy.coupled:
        smp, s1 = is_smp(pmf)
        if not smp:
            raise ParameterError("policy", "Finite-horizon leakage of coupled servers needs an SMP pmf")
        result = smp_leakage_bits(args.n, s1, pmf.prob(s1))
    else:
        result = rad_leakage_bits(args.n, pmf)
    _emit({"policy": args.policy, "n": args.n, "bits": result.bits, "rate": result.rate})
    return 0


def cmd_rate(args: argparse.Namespace) -> int:
    _, rate, leak, _ = evaluate(_spec(args, [_param(args)]), _param(args))
    _emit({"policy": args.policy, "rate_bits": rate, "leak_time": leak})
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    if args.rate is not None:
        dither = ddad_policy(args.rate)
        certificate = dinkelbach_certify(dither)
        _emit({"ddad": dither.model_dump(), "certificate": certificate.model_dump()})
        return 0
    if args.beta is None:
        raise ParameterError("beta", "optimize needs --rate (decoupled) or --beta (coupled)")
    pmf = greedy_smp_pmf(args.beta)
    alpha, age = optimal_alpha_for_fcfs(args.lam, pmf)
    _emit({"greedy_pmf": [list(e) for e in pmf.entries], "fcfs_alpha": alpha, "fcfs_delta": age.delta})
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.spec:
        with open(args.spec, "r") as f:
            spec = SweepSpec.model_validate(json.load(f))
    else:
        if args.grid is None:
            raise ParameterError("grid", "sweep needs --grid or --spec")
        spec = _spec(args, parse_grid(args.grid)).model_copy(
            update={"simulate": args.simulate, "sim_horizon": args.slots, "seed": args.seed}
        )
    points = sweep(spec, workers=args.workers)

    if args.out:
        write_points(points, args.out)
        logger.info("Wrote %d points to %s", len(points), args.out)
    else:
        write_points(points, sys.stdout)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.scenario:
        with open(args.scenario, "r") as f:
            cfg = SimConfig.model_validate(json.load(f))
    else:
        policy = _policy(args) if args.policy else None
        cfg = SimConfig(
            policy=policy,  # type: ignore[arg-type]
            source=_source(args),
            horizon=args.slots,
            warmup=args.warmup,
            seed=args.seed,
            fake_updates=args.fake_updates,
        )
    stats = simulate(cfg) if cfg.policy is not None else empirical_source_age(cfg)
    _emit(stats.model_dump())
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    policy = _policy(args)
    result = brute_force_maxl(policy, args.n)
    payload: Dict[str, Any] = {"policy": args.policy, "n": args.n, "bits": result.bits}
    if args.n <= 12:
        payload["ml_input_verified"] = verify_ml_input(policy, args.n)
    _emit(payload)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    records = run_checks(args.only)
    for record in records:
        status = "PASS" if record.passed else "FAIL"
        print(f"{status} {record.name} ({record.seconds:.1f}s): {record.detail}")
    return 0 if all(r.passed for r in records) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ageleak", description="Age of information vs. maximal leakage")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--config", help="JSON file with numerical settings")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--policy", choices=FAMILIES)
    common.add_argument("--beta", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--rate", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--s-min", dest="s_min", type=int, default=2)
    common.add_argument("--lambda", dest="lam", type=float, default=0.5)
    common.add_argument("--p01", type=float)
    common.add_argument("--p10", type=float)
    common.add_argument("--n", type=int, default=10_000)
    common.add_argument("--slots", type=int, default=1_000_000)
    common.add_argument("--warmup", type=int)
    common.add_argument("--seed", type=int, default=0)

    commands = {
        "age": (cmd_age, "average age of a policy"),
        "leakage": (cmd_leakage, "finite-horizon maximal leakage in bits"),
        "rate": (cmd_rate, "asymptotic leakage rate and leakage time"),
        "optimize": (cmd_optimize, "optimal policy for a leakage constraint"),
        "sweep": (cmd_sweep, "trade-off curve as CSV"),
        "simulate": (cmd_simulate, "slot simulation"),
        "oracle": (cmd_oracle, "brute-force maximal leakage"),
        "check": (cmd_check, "run the acceptance checks"),
    }
    for name, (handler, help_text) in commands.items():
        command = sub.add_parser(name, parents=[common], help=help_text)
        command.set_defaults(handler=handler)
        if name == "sweep":
            command.add_argument("--grid", help="start:stop:step or a comma-separated list")
            command.add_argument("--spec", help="JSON sweep specification")
            command.add_argument("--simulate", action="store_true")
            command.add_argument("--workers", type=int)
            command.add_argument("--out")
        elif name == "simulate":
            command.add_argument("--scenario", help="JSON simulation config")
            command.add_argument("--fake-updates", dest="fake_updates", action="store_true")
        elif name == "check":
            command.add_argument("--only", nargs="+", choices=list(CHECKS))
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(verbosity_level(args.verbose))
    try:
        if args.config:
            use_settings(load_settings(args.config))
        if args.command not in ("check", "optimize", "simulate", "sweep") and args.policy is None:
            raise ParameterError("policy", f"{args.command} needs --policy")
        return args.handler(args)
    except (ParameterError, ValidationError) as exc:
        logger.error("%s", exc)
        return 2
    except NumericalError as exc:
        logger.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
