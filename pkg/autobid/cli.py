import argparse

from autobid import __version__ as pkg
from autobid.commands import analyze, compile_instance, search, simulate, verify
from autobid.exceptions import AutobidError
from autobid.utils import autobid_logging

logger = autobid_logging.get_logger(__name__)


def main(argv=None):

    parser = argparse.ArgumentParser(prog="autobid")
    parser.add_argument("-v", "--version", action="store_true", help="print version and exit")
    subparsers = parser.add_subparsers()
    setup_compile_subparser(subparsers)
    setup_verify_subparser(subparsers)
    setup_search_subparser(subparsers)
    setup_simulate_subparser(subparsers)
    setup_analyze_subparser(subparsers)
    args = parser.parse_args(argv)
    if args.version:
        print(pkg.__version__)
        parser.exit(0)
    if not hasattr(args, "func"):
        parser.print_help()
        parser.exit(1)
    try:
        code = args.func(args)
    except AutobidError as e:
        logger.error("Command failed", extra={"error": str(e), "kind": type(e).__name__})
        parser.exit(e.exit_code)
    parser.exit(code)


def add_common_arguments(subparser):
    subparser.add_argument("--config", help="YAML file with parameter values; flags override it")
    subparser.add_argument("--out", help="where to write the output file")
    subparser.add_argument("--precision", type=int, help="decimal places used in reports and traces")
    subparser.add_argument("--debug", action="store_true", help="set logger to debug for more verbosity")


def add_reduction_arguments(subparser):
    subparser.add_argument("--epsilon", help="reduction accuracy, a rational in (0, 1)")
    subparser.add_argument("--delta", help="gap parameter, a rational in (0, 1)")
    subparser.add_argument("--gamma", help="signal quality; sets reserves from gamma-approximate signals")
    subparser.add_argument("--objective", choices=["revenue", "welfare"], help="objective the reduction targets")
    subparser.add_argument("--reserves", choices=["native", "expand"], help="keep reserves or simulate them")


def add_learning_arguments(subparser):
    subparser.add_argument("--alpha", help="fraction of rounds a reaction may take")
    subparser.add_argument("--beta", help="additive RoS slack; defaults to cap * max total value / T")
    subparser.add_argument("--mu", help="margin below the dominated multipliers used for m_safe")
    subparser.add_argument("--lambda", dest="lam", help="T_good parameter")


def setup_compile_subparser(subparsers):
    compile_subparser = subparsers.add_parser("compile")
    compile_subparser.add_argument("--source", required=True, help="label cover or cover CSP file to compile")
    compile_subparser.add_argument("--signals", help="JSON list of [bidder, item, signal] overrides")
    compile_subparser.add_argument("--mu", help="cover recipes only: mu override")
    compile_subparser.add_argument("--alpha", help="cover recipes only: alpha override")
    add_reduction_arguments(compile_subparser)
    add_common_arguments(compile_subparser)
    compile_subparser.set_defaults(func=compile_instance.main, subcommand="compile")


def setup_verify_subparser(subparsers):
    verify_subparser = subparsers.add_parser("verify")
    verify_subparser.add_argument("--instance", required=True, help="instance or compiled instance file")
    verify_group = verify_subparser.add_mutually_exclusive_group(required=True)
    verify_group.add_argument("--profile", help="profile file, optionally with an outcome to check as given")
    verify_group.add_argument("--trace", help="trace CSV to check for admissibility")
    verify_subparser.add_argument("--beta", help="approximation slack")
    add_common_arguments(verify_subparser)
    verify_subparser.set_defaults(func=verify.main, subcommand="verify")


def setup_search_subparser(subparsers):
    search_subparser = subparsers.add_parser("search")
    search_subparser.add_argument("--instance", required=True, help="instance or compiled instance file")
    search_subparser.add_argument(
        "--grid",
        help="'geom:<count>', 'step:<p/q>', a comma list of points, or 'labelings' for compiled instances",
    )
    search_subparser.add_argument("--beta", help="approximation slack")
    search_subparser.add_argument("--workers", type=int, help="threads used to verify profiles")
    add_common_arguments(search_subparser)
    search_subparser.set_defaults(func=search.main, subcommand="search")


def setup_simulate_subparser(subparsers):
    simulate_subparser = subparsers.add_parser("simulate")
    simulate_subparser.add_argument("--instance", required=True, help="instance or compiled instance file")
    simulate_subparser.add_argument("--rounds", type=int, help="number of auction rounds T")
    simulate_subparser.add_argument("--rule", choices=["step", "poly", "exp"], help="pacing update rule")
    simulate_subparser.add_argument("--rule-param", help="degree of the poly rule or rate of the exp rule")
    simulate_subparser.add_argument("--policy", choices=["equal-split", "ros-binding"], help="allocation policy")
    simulate_subparser.add_argument("--initial", choices=["ones", "random"], help="initial multiplier profile")
    simulate_subparser.add_argument("--seed", type=int, help="seed for the random initial profile")
    simulate_subparser.add_argument("--mu", help="margin below the dominated multipliers used for m_safe")
    simulate_subparser.add_argument("--lambda", dest="lam", help="T_good parameter")
    add_common_arguments(simulate_subparser)
    simulate_subparser.set_defaults(func=simulate.main, subcommand="simulate")


def setup_analyze_subparser(subparsers):
    analyze_subparser = subparsers.add_parser("analyze")
    analyze_subparser.add_argument("--instance", required=True, help="instance or compiled instance file")
    analyze_subparser.add_argument("--trace", required=True, help="trace CSV written by simulate")
    add_learning_arguments(analyze_subparser)
    add_common_arguments(analyze_subparser)
    analyze_subparser.set_defaults(func=analyze.main, subcommand="analyze")
