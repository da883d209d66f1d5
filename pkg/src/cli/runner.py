"""
Argument parsing, logging setup and exit-code mapping for the varpen CLI.
"""
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from errors import ConfigError, UnsupportedModeError, VarpenError
from optimize import MinimizeOptions
from settings import get_settings
from . import commands

logger = logging.getLogger("varpen.cli")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="varpen", description="Penalty methods for optimal control of gradient flows")
    parser.add_argument("--out", default=settings.out_dir, help="output directory for CSV artifacts")
    parser.add_argument("--seed", type=int, default=None, help="random seed (multistart, gradcheck)")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers for independent evaluations")
    parser.add_argument("--log-level", default=settings.log_level, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    reproduce = sub.add_parser("reproduce", help="reproduce the two eps -> 0 figures as CSV data")
    reproduce.add_argument("figure", choices=["fig1", "fig2"])
    reproduce.add_argument("--points", type=int, default=201, help="curve grid points")
    reproduce.add_argument("--N", dest="n", type=int, default=None, help="time intervals (fig2)")

    for name, text in (("sweep", "minimize E_eps along the configured eps list"),
                       ("gradcheck", "finite-difference check of the E_eps gradient"),
                       ("curve", "tabulate eps,u_param,E over a one-parameter family")):
        command = sub.add_parser(name, help=text)
        command.add_argument("config", help="INI run configuration")

    demo = sub.add_parser("generic-demo", help="integrate the thermalized oscillator")
    demo.add_argument("--nu", type=float, default=1.0)
    demo.add_argument("--lambda", dest="lam", type=float, default=1.0)
    demo.add_argument("--kappa", type=float, default=1.0)
    demo.add_argument("--T", dest="horizon", type=float, default=1.0)
    demo.add_argument("--N", dest="n", type=int, default=800)
    return parser


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler()]
    )


def _dispatch(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    if args.command == "reproduce":
        opts = MinimizeOptions(**{k: v for k, v in (("seed", args.seed), ("jobs", args.jobs)) if v is not None})
        return commands.cmd_reproduce(args.figure, out_dir, points=args.points, n=args.n, opts=opts)
    if args.command == "sweep":
        return commands.cmd_sweep(args.config, out_dir, seed=args.seed, jobs=args.jobs)
    if args.command == "gradcheck":
        return commands.cmd_gradcheck(args.config, out_dir, seed=args.seed)
    if args.command == "curve":
        return commands.cmd_curve(args.config, out_dir, jobs=args.jobs)
    return commands.cmd_generic_demo(out_dir, nu=args.nu, lam=args.lam, kappa=args.kappa,
                                     horizon=args.horizon, n=args.n)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.log_level)
    if args.jobs is not None and args.jobs < 1:
        logger.error(f"--jobs must be at least 1, got {args.jobs}")
        return commands.EXIT_USAGE
    try:
        return _dispatch(args)
    except (ConfigError, UnsupportedModeError) as exc:
        logger.error(f"usage error: {exc}")
        print(f"error: {exc}")
        return commands.EXIT_USAGE
    except VarpenError as exc:
        logger.error(f"{args.command} failed: {exc}")
        print(f"error: {exc}")
        return commands.EXIT_FAILED
