import csv
import dataclasses
import io
import json
import logging
import sys
from contextlib import closing
from datetime import datetime, timezone
from enum import Enum
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pymongo

from intransitive_dice_lab.errors import DimensionMismatch, EmptySeries

logger: logging.Logger = logging.getLogger(__name__)

SCHEMA_VERSION: int = 1
REPORTS_COLLECTION: str = "reports"
PACKAGE_NAME: str = "intransitive_dice_lab"
FLOAT_FORMAT: str = ".17g"
INT64_MAX: int = 2**63 - 1


def artifact_version() -> str:
    """
    :return: The installed package version; setuptools_scm derives it from git.
    """
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "0+unknown"


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def to_jsonable(value: Any) -> Any:
    """
    Converts results into plain JSON types: numpy scalars and arrays,
    complex numbers, enums and objects with a `to_dict` method.
    """
    if None is value or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(dataclasses.asdict(value))
    raise TypeError(f"Cannot serialize {type(value).__name__} into a report.")


def _format_scalar(value: Any) -> str:
    if None is value:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    return str(value)


def flatten(value: Any, prefix: str = "") -> List[Tuple[str, str]]:
    """
    :return: (dotted key, formatted value) rows of a JSON-like value, with
        list items keyed by their index and reals printed at 17 significant
        digits.
    """
    if isinstance(value, dict):
        rows: List[Tuple[str, str]] = []
        for key in sorted(value):
            rows.extend(flatten(value[key], f"{prefix}.{key}" if prefix else str(key)))
        return rows
    if isinstance(value, list):
        rows = []
        for index, item in enumerate(value):
            rows.extend(flatten(item, f"{prefix}.{index}" if prefix else str(index)))
        return rows
    return [(prefix, _format_scalar(value))]


@dataclasses.dataclass
class ReportEnvelope:
    """
    A finished experiment: the resolved configuration, the results and the
    provenance needed to reproduce them.

    `passed` is None when the run checks no threshold. Wall time and
    timestamp are excluded from `payload`, which is deterministic per
    (seed, workers).
    """

    config: Dict[str, Any]
    results: Dict[str, Any]
    passed: Optional[bool] = None
    wall_time: float = 0.0
    timestamp: str = dataclasses.field(default_factory=utc_timestamp)
    version: str = dataclasses.field(default_factory=artifact_version)
    schema: int = SCHEMA_VERSION

    def payload(self) -> Dict[str, Any]:
        return {
            "schema": self.schema,
            "version": self.version,
            "config": to_jsonable(self.config),
            "results": to_jsonable(self.results),
            "passed": self.passed,
        }

    def to_dict(self) -> Dict[str, Any]:
        document: Dict[str, Any] = self.payload()
        document["wall_time"] = float(self.wall_time)
        document["timestamp"] = self.timestamp
        return document

    def payload_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, indent=2)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buffer: io.StringIO = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(flatten(self.to_dict()))
        return buffer.getvalue()

    def render(self, fmt: str) -> str:
        if "json" == fmt:
            return self.to_json() + "\n"
        if "csv" == fmt:
            return self.to_csv()
        raise ValueError(f"Unknown report format {fmt!r}")


def write_report(envelope: ReportEnvelope, fmt: str, path: Optional[str]) -> None:
    """
    Writes the report to `path`, or to stdout if None.
    """
    text: str = envelope.render(fmt)
    if None is path:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    output: Path = Path(path)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text)
    logger.info(f"Report written to {output}.")


def emit_plot_data(
    series: Sequence[Sequence[float]],
    path: str,
    columns: Sequence[str] = ("x", "y"),
) -> Path:
    """
    Writes rows of numbers as a CSV with a header line. No plotting is done.

    :param series: Rows, each with one value per column.
    :raise EmptySeries: If there are no rows.
    :raise DimensionMismatch: If a row does not match the header.
    """
    if 0 == len(series):
        raise EmptySeries(f"No plot data to write to {path}.")
    output: Path = Path(path)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(columns))
        for row in series:
            if len(row) != len(columns):
                raise DimensionMismatch(
                    f"Plot row has {len(row)} values, header has {len(columns)}."
                )
            writer.writerow([_format_scalar(float(value)) for value in row])
    logger.info(f"Plot data with {len(series)} rows written to {output}.")
    return output


def _bson_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _bson_safe(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_bson_safe(item) for item in value]
    if isinstance(value, int) and not isinstance(value, bool) and abs(value) > INT64_MAX:
        return str(value)
    return value


def store_report(envelope: ReportEnvelope, db_uri: str) -> None:
    """
    Inserts the report into the `reports` collection of the URI's default
    database.
    """
    document: Dict[str, Any] = _bson_safe(envelope.to_dict())
    with closing(pymongo.MongoClient(db_uri)) as db_client:
        reports_db: pymongo.database.Database = db_client.get_default_database()
        reports_collection: pymongo.collection.Collection = reports_db[REPORTS_COLLECTION]
        reports_collection.insert_one(document)
    logger.info("Report stored in the reports database.")
