import logging
import logging.handlers
import pathlib
import sys
import time
from typing import List, Optional

from intransitive_dice_lab.cli_io.acceptance import run_acceptance
from intransitive_dice_lab.cli_io.config import LOG_LEVELS, ExperimentConfig, parse_args
from intransitive_dice_lab.cli_io.experiments import EXPERIMENTS, ExperimentResult
from intransitive_dice_lab.cli_io.report import (
    ReportEnvelope,
    emit_plot_data,
    store_report,
    write_report,
)
from intransitive_dice_lab.errors import UsageError

EXIT_SUCCESS: int = 0
EXIT_USAGE: int = 1
EXIT_THRESHOLD: int = 2
EXIT_FAILURE: int = -1

"""
Global logger
"""
logger: logging.Logger = logging.getLogger("intransitive_dice_lab")


def logger_init(log_file_path_str: Optional[str], log_level: int) -> None:
    """
    Initializes the global logger with the given log level.

    :param log_file_path_str: Path to store the log files. If None is given,
        logs will only be written into stderr, which keeps stdout free for
        reports.
    :param log_level: Target log level.
    """
    global logger
    logger_handler: Optional[logging.Handler] = None
    logging_formatter = logging.Formatter("%(asctime)s [%(levelname)s] %(message)s")
    if log_file_path_str is not None:
        log_file_path: pathlib.Path = pathlib.Path(log_file_path_str).resolve()
        if log_file_path.is_dir():
            log_file_path /= "intransitive_dice_lab.log"
        if log_file_path.exists():
            log_file_path.unlink()
        log_file_path.parent.mkdir(parents=True, exist_ok=True)
        logger_handler = logging.handlers.RotatingFileHandler(
            filename=log_file_path, maxBytes=1024 * 1024 * 8, backupCount=7
        )
        logger_handler.setFormatter(logging_formatter)
        logger_handler.setLevel(log_level)

    logger = logging.getLogger("intransitive_dice_lab")
    logger.setLevel(log_level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    if None is not logger_handler:
        logger.addHandler(logger_handler)
    stream_handler: logging.Handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(logging_formatter)
    stream_handler.setLevel(log_level)
    logger.addHandler(stream_handler)


def run(config: ExperimentConfig) -> ReportEnvelope:
    """
    Runs the configured subcommand and writes its report.

    :return: The report envelope that was written.
    """
    logger.info(f"Starting {config.subcommand} with {config.to_dict()}.")
    start_time: float = time.perf_counter()
    result: ExperimentResult
    if "acceptance" == config.subcommand:
        result = run_acceptance(config, logger)
    else:
        result = EXPERIMENTS[config.subcommand](config, logger)
    envelope: ReportEnvelope = ReportEnvelope(
        config=config.to_dict(),
        results=result.results,
        passed=result.passed,
        wall_time=time.perf_counter() - start_time,
    )
    write_report(envelope, config.format, config.out)
    if None is not config.plot_data:
        if 0 == len(result.plot_rows):
            logger.warning(f"{config.subcommand} produces no plot data; --plot-data ignored.")
        else:
            emit_plot_data(result.plot_rows, config.plot_data, result.plot_columns)
    if None is not config.db_uri:
        store_report(envelope, config.db_uri)
    logger.info(f"Finished {config.subcommand} in {envelope.wall_time:.3f} s.")
    return envelope


def main(argv: List[str]) -> int:
    try:
        config: ExperimentConfig = parse_args(argv[1:])
    except UsageError as e:
        logger_init(None, logging.INFO)
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE

    logger_init(config.log_file, LOG_LEVELS[config.log_level])

    envelope: ReportEnvelope
    try:
        envelope = run(config)
    except Exception as e:
        logger.error(f"Failed to run {config.subcommand}: {e}")
        return EXIT_FAILURE

    if False is envelope.passed:
        if config.assert_thresholds:
            logger.error(f"{config.subcommand} violated an acceptance threshold.")
            return EXIT_THRESHOLD
        logger.warning(f"{config.subcommand} violated an acceptance threshold.")
    return EXIT_SUCCESS


def console_entry() -> None:
    sys.exit(main(sys.argv))
