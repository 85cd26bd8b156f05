"""
Command Line
Defines every subcommand and the global error handler
"""

import argparse
import sys
from decimal import Decimal, InvalidOperation
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import EXIT_OK, EXIT_PRECONDITION, ToolkitError
from app.core.logging import setup_logging
from app.models.schemas import ExperimentConfig
from app.services.experiments import GOLDEN_SETS, experiment_runner
from app.services.report import write_report
from app.services.workers import resolve_threads

# Flags that shape the run rather than the experiment
GLOBAL_DESTS = ("format", "output", "threads", "mem_budget", "log_level", "command")

# Integer literals past 10^40 are rejected before int() expands them
MAX_LITERAL_DIGITS = 40


def integer(text: str) -> int:
    """Integers with optional underscores; 1e5-style literals when they are whole"""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not value.is_finite() or value.adjusted() > MAX_LITERAL_DIGITS or value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def real(text: str) -> float:
    try:
        return float(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def integer_list(text: str) -> List[int]:
    return [integer(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecg",
        description=f"{settings.APP_NAME} v{settings.APP_VERSION}: group structures of elliptic curves over F_p",
    )
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (default: csv)")
    parser.add_argument("--output", default=None, help="write the report here instead of stdout")
    parser.add_argument("--threads", type=integer, default=None, help="worker processes (default: logical cores)")
    parser.add_argument("--mem-budget", type=integer, default=None, help="occurrence bitset budget in bytes")
    parser.add_argument("--log-level", default=None, help="loguru level for stderr diagnostics")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, description=help_text)

    # Occurrence
    p = command("occurs", "decide whether Z/m x Z/mk occurs and list witness primes")
    p.add_argument("--m", type=integer, required=True)
    p.add_argument("--k", type=integer, required=True)
    p.add_argument("--witnesses", action="store_true", help="scan the whole window instead of stopping at the first prime")

    for name, help_text in (("count", "exact #S(M,K)"), ("count-r", "exact #R(M,K), the non-occurring upper box")):
        p = command(name, help_text)
        p.add_argument("--max-m", dest="M", type=integer, required=True)
        p.add_argument("--max-k", dest="K", type=integer, required=True)
        p.add_argument("--strategy", choices=("auto", "direct", "prime_driven"), default="auto")

    p = command("density-scan", "#S(M,K)/(MK) along a grid of K")
    p.add_argument("--max-m", dest="M", type=integer, required=True)
    p.add_argument("--k-grid", type=integer_list, required=True, help="comma separated, strictly ascending")
    p.add_argument("--strategy", choices=("auto", "direct", "prime_driven"), default="auto")

    p = command("shapes-for-prime", "every G_{m,k} with m <= M realizable over F_p")
    p.add_argument("--p", type=integer, required=True)
    p.add_argument("--max-m", dest="M", type=integer, required=True)

    p = command("window-count", "number of witness primes of G_{m,k}")
    p.add_argument("--m", type=integer, required=True)
    p.add_argument("--k", type=integer, required=True)

    p = command("heuristic", "independence-heuristic density over the box")
    p.add_argument("--max-m", dest="M", type=integer, required=True)
    p.add_argument("--max-k", dest="K", type=integer, required=True)

    p = command("ratios", "normalized #S(M,K) for the counting theorems")
    p.add_argument("--max-m", dest="M", type=integer, required=True)
    p.add_argument("--max-k", dest="K", type=integer, required=True)
    p.add_argument("--strategy", choices=("auto", "direct", "prime_driven"), default="auto")

    # Curves
    p = command("curves", "point counts and group shapes of curves over F_p")
    p.add_argument("--p", type=integer, required=True)
    p.add_argument("--a", type=integer, default=None)
    p.add_argument("--b", type=integer, default=None)

    p = command("verify-ruck", "census shapes against the admissible groups for every prime in range")
    p.add_argument("--p-min", type=integer, default=5)
    p.add_argument("--p-max", type=integer, default=100)

    for name, help_text in (("m-of-g", "M(G) summed over the Hasse window"), ("cl-ratio", "both sides of the Cohen-Lenstra proportionality")):
        p = command(name, help_text)
        p.add_argument("--m", type=integer, required=True)
        p.add_argument("--k", type=integer, required=True)
        p.add_argument("--mode", choices=("raw", "iso"), default="raw")

    p = command("aut", "#Aut(Z/m x Z/mk)")
    p.add_argument("--m", type=integer, required=True)
    p.add_argument("--k", type=integer, required=True)
    p.add_argument("--method", choices=("closed", "brute"), default="closed")

    # Sieve
    p = command("rho", "roots of kc^2 + jc + 1 modulo d")
    p.add_argument("--k", type=integer, required=True)
    p.add_argument("--j", type=integer, required=True)
    p.add_argument("--d", type=integer, required=True)

    for name, help_text in (("sieve", "exact survivors beside the main term"), ("legendre", "exact survivors beside inclusion-exclusion")):
        p = command(name, help_text)
        p.add_argument("--k", type=integer, required=True)
        p.add_argument("--j", type=integer, required=True)
        p.add_argument("--max-m", dest="M", type=integer, required=True)
        p.add_argument("--y", type=integer, required=True)

    p = command("euler-product", "truncated Euler product of (-d/.)")
    p.add_argument("--d", type=integer, required=True)
    p.add_argument("--y", type=real, required=True)
    p.add_argument("--y-lo", type=real, default=0)

    p = command("fund-disc", "conductor decomposition -d = -a^2 d1")
    p.add_argument("--d", type=integer, required=True)

    p = command("t-sum", "sum of k/phi(k) over j^2 - 4k = -d")
    p.add_argument("--d", type=integer, required=True)
    p.add_argument("--max-k", dest="K", type=integer, required=True)

    p = command("discrepancy", "|psi(y+h;q,a) - psi(y;q,a) - h/phi(q)|")
    p.add_argument("--y", type=real, required=True)
    p.add_argument("--h", type=real, required=True)
    p.add_argument("--q", type=integer, default=1)
    p.add_argument("--a", type=integer, default=0)

    p = command("pi-discrepancy", "pi(x;q,a) - li(x)/phi(q)")
    p.add_argument("--x", type=real, required=True)
    p.add_argument("--q", type=integer, default=1)
    p.add_argument("--a", type=integer, default=0)

    p = command("l1", "partial sum of the L(1, (-d/.)) series")
    p.add_argument("--d", type=integer, required=True)
    p.add_argument("--terms", type=integer, default=10 ** 6)

    # Golden files
    p = command("golden", "re-run the golden experiments and diff them against blessed files")
    p.add_argument("--directory", default=None, help=f"golden directory (default: {settings.GOLDEN_DIR})")
    p.add_argument("--set", choices=sorted(GOLDEN_SETS), default="default")
    p.add_argument("--bless", action="store_true", help="write fresh golden files instead of checking")

    return parser


def parse_config(argv: Optional[List[str]] = None) -> ExperimentConfig:
    """Parse argv into an ExperimentConfig; usage errors exit with status 2"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "curves" and (args.a is None) != (args.b is None):
        parser.error("curves: --a and --b go together")

    params = {key: value for key, value in vars(args).items() if key not in GLOBAL_DESTS}
    setup_logging(args.log_level)
    return ExperimentConfig(
        command=args.command,
        params=params,
        format=args.format,
        output=args.output,
        threads=resolve_threads(args.threads),
        mem_budget=args.mem_budget,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return the process exit status"""
    config = parse_config(argv)
    try:
        report = experiment_runner.run(config)
    except ToolkitError as e:
        logger.debug("{} failed: {!r}", config.command, e)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: invalid arguments: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_PRECONDITION

    text = write_report(report, config.format, config.output)
    if not config.output:
        sys.stdout.write(text)
    return EXIT_OK
