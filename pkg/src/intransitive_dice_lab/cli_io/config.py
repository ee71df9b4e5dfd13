import argparse
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, NoReturn, Optional

from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import InvalidIntervalSpec, UsageError
from intransitive_dice_lab.gstats.sampling import MOMENT_STATISTICS

WORKERS_ENV: str = "DICE_LAB_WORKERS"

SUBCOMMANDS: List[str] = [
    "sample",
    "tournament3",
    "tournament4",
    "moments",
    "nested",
    "edgeworth",
    "charfn",
    "cltcompare",
    "acceptance",
]
EDGEWORTH_CHECKS: List[str] = [
    "density",
    "correction",
    "simple-integrals",
    "expectations",
    "conditional",
]
CHARFN_CHECKS: List[str] = [
    "all",
    "large-gamma",
    "lipschitz",
    "interpolation",
    "qr",
    "exp-nq",
    "decay-box",
    "lattice",
    "density-bounds",
    "orthant",
    "refinement",
]
LOG_LEVELS: Dict[str, int] = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


@dataclass
class ExperimentConfig:
    """
    Fully resolved settings of one run. Echoed into every report.
    """

    subcommand: str
    n: int = 101
    trials: int = 10_000
    seed: int = 0
    interval: str = "symmetric"
    workers: int = 1
    format: str = "json"
    out: Optional[str] = None
    assert_thresholds: bool = False
    log_file: Optional[str] = None
    log_level: str = "INFO"
    db_uri: Optional[str] = None
    kind: str = "balanced"
    order: int = 2
    outer: int = 2000
    inner: int = 500
    k: int = 1
    grid: int = 10
    gamma_max: float = 0.5
    stat: str = "all"
    check: Optional[str] = None
    quantity: str = "Y"
    pairs: int = 1
    window: Optional[float] = None
    n_sweep: List[int] = field(default_factory=list)
    plot_data: Optional[str] = None
    scale: float = 1.0
    criteria: List[int] = field(default_factory=list)

    def interval_spec(self, n: Optional[int] = None) -> IntervalSpec:
        return parse_interval(self.interval, self.n if None is n else n)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def parse_interval(text: str, n: int) -> IntervalSpec:
    """
    :param text: "unit", "wide", "symmetric" or "custom:z1,z2".
    :raise InvalidIntervalSpec: If the text names no valid interval.
    """
    if "unit" == text:
        return IntervalSpec.unit(n)
    if "wide" == text:
        return IntervalSpec.wide(n)
    if "symmetric" == text:
        return IntervalSpec.symmetric(n)
    if text.startswith("custom:"):
        bounds: List[str] = text[len("custom:") :].split(",")
        if 2 != len(bounds):
            raise InvalidIntervalSpec(f"Expected custom:z1,z2, got {text!r}")
        try:
            z1: float = float(bounds[0])
            z2: float = float(bounds[1])
        except ValueError as e:
            raise InvalidIntervalSpec(f"Invalid custom interval {text!r}: {e}") from None
        return IntervalSpec.custom(z1, z2, n)
    raise InvalidIntervalSpec(f"Unknown interval {text!r}")


def default_workers(environ: Optional[Mapping[str, str]] = None) -> int:
    """
    :return: The worker count from the environment, or 1 if unset.
    :raise UsageError: If the variable is set but not a positive integer.
    """
    values: Mapping[str, str] = os.environ if None is environ else environ
    raw: Optional[str] = values.get(WORKERS_ENV)
    if None is raw or "" == raw.strip():
        return 1
    try:
        workers: int = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise UsageError(f"{WORKERS_ENV} must be positive, got {workers}")
    return workers


class ArgumentParser(argparse.ArgumentParser):
    """
    Raises UsageError instead of exiting so the caller controls the exit code.
    """

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if "" != item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common_parser() -> ArgumentParser:
    common: ArgumentParser = ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=101, help="Number of faces per die.")
    common.add_argument("--trials", type=int, default=10_000, help="Monte Carlo trials.")
    common.add_argument("--seed", type=int, default=0, help="Base seed of the random streams.")
    common.add_argument(
        "--interval",
        default="symmetric",
        help="Face interval: unit, wide, symmetric or custom:z1,z2.",
    )
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"Worker processes. Defaults to ${WORKERS_ENV} or 1.",
    )
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", default=None, help="Report path. Defaults to stdout.")
    common.add_argument(
        "--assert",
        dest="assert_thresholds",
        action="store_true",
        help="Exit with code 2 when an acceptance threshold is violated.",
    )
    common.add_argument("--log-file", default=None, help="Log file path. Defaults to stderr only.")
    common.add_argument("--log-level", choices=list(LOG_LEVELS), default="INFO")
    common.add_argument(
        "--db-uri", default=None, help="MongoDB URI; reports go to its `reports` collection."
    )
    common.add_argument("--plot-data", default=None, help="Write a plot-data CSV to this path.")
    return common


def build_parser() -> ArgumentParser:
    common: ArgumentParser = _common_parser()
    parser: ArgumentParser = ArgumentParser(
        prog="intransitive-dice-lab", description="Intransitive dice Monte Carlo laboratory"
    )
    subcommand_parser: argparse._SubParsersAction = parser.add_subparsers(dest="subcommand")
    subcommand_parser.required = True

    sample: argparse.ArgumentParser = subcommand_parser.add_parser(
        "sample", parents=[common], help="Sampler diagnostics."
    )
    sample.add_argument("--kind", choices=["balanced", "iid"], default="balanced")

    subcommand_parser.add_parser("tournament3", parents=[common], help="3-dice tournaments.")
    tournament4: argparse.ArgumentParser = subcommand_parser.add_parser(
        "tournament4", parents=[common], help="4-dice tournaments."
    )
    tournament4.add_argument(
        "--n-sweep", type=_int_list, default=[], help="Comma-separated face counts to sweep."
    )

    moments: argparse.ArgumentParser = subcommand_parser.add_parser(
        "moments", parents=[common], help="Moment statistics of balanced pairs."
    )
    moments.add_argument("--stat", default="all", help="Statistic name or all.")

    nested: argparse.ArgumentParser = subcommand_parser.add_parser(
        "nested", parents=[common], help="Nested conditional-probability estimators."
    )
    nested.add_argument("--quantity", choices=["X", "Y"], default="Y")
    nested.add_argument("--outer", type=int, default=2000)
    nested.add_argument("--inner", type=int, default=500)

    edgeworth: argparse.ArgumentParser = subcommand_parser.add_parser(
        "edgeworth", parents=[common], help="Edgeworth expansion and integral checks."
    )
    edgeworth.add_argument("--check", choices=EDGEWORTH_CHECKS, default="density")
    edgeworth.add_argument("--order", type=int, default=2)
    edgeworth.add_argument("--k", type=int, default=1)

    charfn: argparse.ArgumentParser = subcommand_parser.add_parser(
        "charfn", parents=[common], help="Characteristic-function bounds."
    )
    charfn.add_argument("--check", choices=CHARFN_CHECKS, default="all")
    charfn.add_argument("--grid", type=int, default=10, help="Decay-box grid points per axis.")
    charfn.add_argument("--gamma-max", type=float, default=0.5)

    cltcompare: argparse.ArgumentParser = subcommand_parser.add_parser(
        "cltcompare", parents=[common], help="Conditional CLT comparison."
    )
    cltcompare.add_argument("--pairs", type=int, default=1)
    cltcompare.add_argument(
        "--window", type=float, default=None, help="Condition on a window around the target sum."
    )

    acceptance: argparse.ArgumentParser = subcommand_parser.add_parser(
        "acceptance", parents=[common], help="Run the acceptance criteria."
    )
    acceptance.add_argument(
        "--scale", type=float, default=1.0, help="Multiplier applied to every trial count."
    )
    acceptance.add_argument(
        "--criteria", type=_int_list, default=[], help="Comma-separated criteria to run."
    )
    return parser


def parse_args(argv: List[str], environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """
    Parses command-line arguments, without the program name.

    :raise UsageError: On unknown flags or invalid values.
    """
    parser: ArgumentParser = build_parser()
    args: argparse.Namespace = parser.parse_args(argv)

    if args.n < 2:
        parser.error("--n must be at least 2.")
    if args.trials < 1:
        parser.error("--trials must be positive.")
    if args.seed < 0 or args.seed >= 2**64:
        parser.error("--seed must be a 64-bit non-negative integer.")
    try:
        parse_interval(args.interval, args.n)
    except InvalidIntervalSpec as e:
        parser.error(f"--interval: {e}")

    workers: int = args.workers if None is not args.workers else default_workers(environ)
    if workers < 1:
        parser.error("--workers must be positive.")

    config: ExperimentConfig = ExperimentConfig(
        subcommand=args.subcommand,
        n=args.n,
        trials=args.trials,
        seed=args.seed,
        interval=args.interval,
        workers=workers,
        format=args.format,
        out=args.out,
        assert_thresholds=args.assert_thresholds,
        log_file=args.log_file,
        log_level=args.log_level,
        db_uri=args.db_uri,
        plot_data=args.plot_data,
    )
    for knob in (
        "kind",
        "order",
        "outer",
        "inner",
        "k",
        "grid",
        "gamma_max",
        "stat",
        "check",
        "quantity",
        "pairs",
        "window",
        "n_sweep",
        "scale",
        "criteria",
    ):
        if hasattr(args, knob):
            setattr(config, knob, getattr(args, knob))

    if config.outer < 2 or config.inner < 2:
        parser.error("--outer and --inner must be at least 2.")
    if config.order not in (0, 2, 4):
        parser.error("--order must be 0, 2 or 4.")
    if config.k < 1 or config.k > 4:
        parser.error("--k must be in 1..4.")
    if config.pairs < 1 or config.grid < 2:
        parser.error("--pairs must be positive and --grid at least 2.")
    if config.scale <= 0.0:
        parser.error("--scale must be positive.")
    if any(n < 2 for n in config.n_sweep):
        parser.error("--n-sweep face counts must be at least 2.")
    if any(number < 1 or number > 13 for number in config.criteria):
        parser.error("--criteria must name criteria in 1..13.")
    if "all" != config.stat and config.stat not in MOMENT_STATISTICS:
        parser.error(f"--stat must be all or one of {', '.join(MOMENT_STATISTICS)}.")
    return config
