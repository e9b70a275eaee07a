import argparse
import logging
import sys
from typing import Optional, Sequence

from config import ConfigError, load_config
from handlers import EXIT_CONFIG, EXIT_INTEGRATOR, EXIT_SOLVER, CommandHandler
from services.errors import HipHopError, IntegratorError

logger = logging.getLogger("hiphop")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file (default: $HIPHOP_CONFIG)")
    parser.add_argument("--N", type=int, help="bodies per polygon")
    parser.add_argument("--m", type=float, help="mass of each primary")
    parser.add_argument("--r0", type=float, help="initial radius of the primaries")
    parser.add_argument("--rel-tol", type=float, dest="rel_tol")
    parser.add_argument("--abs-tol", type=float, dest="abs_tol")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def _add_point(parser: argparse.ArgumentParser, with_period: bool = True) -> None:
    parser.add_argument("--a", type=float, required=True, help="angular momentum of the primaries")
    parser.add_argument("--b", type=float, required=True, help="initial vertical velocity of the primaries")
    parser.add_argument("--u", type=float, required=True, help="initial velocity of the massless body")
    if with_period:
        parser.add_argument("--T", type=float, required=True, help="half period")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiphop",
        description="Periodic solutions of the restricted hip-hop (2N+1)-body problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print the sum constants and reference values")
    _add_common(p)

    p = sub.add_parser("simulate", help="integrate the reduced system and write a trajectory CSV")
    _add_common(p)
    _add_point(p, with_period=False)
    p.add_argument("--t-end", type=float, required=True, dest="t_end")
    p.add_argument("--dt", type=float, dest="output_dt", help="output cadence")

    p = sub.add_parser("solve", help="solve the shooting system at fixed b")
    _add_common(p)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--k", type=int, help="period multiple (default: smallest k with T2* < k T1*)")
    p.add_argument("--no-polish", action="store_false", dest="polish", default=None)

    p = sub.add_parser("family", help="continue a family of solutions in b")
    _add_common(p)
    p.add_argument("--b-max", type=float, required=True, dest="b_max")
    p.add_argument("--k", type=int)
    p.add_argument("--both-directions", action="store_true", dest="both_directions", default=None)

    p = sub.add_parser("period-curve", help="tabulate T(u) for the circular primaries")
    _add_common(p)
    p.add_argument("--u-grid", type=float, nargs="+", required=True, dest="u_grid")

    p = sub.add_parser("verify", help="check a candidate (a, b, u, T)")
    _add_common(p)
    _add_point(p)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("bodies", help="positions of all bodies at selected times")
    _add_common(p)
    _add_point(p)
    p.add_argument("--times", type=float, nargs="+")

    p = sub.add_parser("classify", help="count the curves traced by the primaries")
    _add_common(p)
    _add_point(p)
    p.add_argument("--tol", type=float)
    p.add_argument("--refine", action="store_true", help="first move onto the nearby exactly closing orbit")

    return parser


_CONFIG_FLAGS = ("N", "m", "r0", "rel_tol", "abs_tol", "out", "output_dt", "polish", "both_directions")


def run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    overrides = {name: getattr(args, name, None) for name in _CONFIG_FLAGS}
    config = load_config(args.config, overrides)
    handler = CommandHandler(config, argv)

    if args.command == "constants":
        return handler.constants()
    if args.command == "simulate":
        return handler.simulate(args.a, args.b, args.u, args.t_end)
    if args.command == "solve":
        return handler.solve(args.b, args.k)
    if args.command == "family":
        return handler.family(args.b_max, args.k)
    if args.command == "period-curve":
        return handler.period_curve(args.u_grid)
    if args.command == "verify":
        return handler.verify(args.a, args.b, args.u, args.T, args.tol)
    if args.command == "bodies":
        return handler.bodies(args.a, args.b, args.u, args.T, args.times)
    if args.command == "classify":
        return handler.classify(args.a, args.b, args.u, args.T, args.tol, args.refine)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)

    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        return run(args, argv)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except ValueError as e:
        logger.error("Invalid input: %s", e)
        return EXIT_CONFIG
    except IntegratorError as e:
        logger.error("Integration failed: %s", e)
        return EXIT_INTEGRATOR
    except HipHopError as e:
        logger.error("Solver failed: %s", e)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
