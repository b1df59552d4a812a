"""CSV outputs: per-job metric rows, per-(method, rate) aggregates, t-tests and loss traces."""

import csv
from pathlib import Path
from typing import Iterable, Mapping

from common.utils import get_flow_aware_logger
from ksrecon.errors import FileFormatError
from ksrecon.metrics.report import AggregateRow, MetricsRow, TTestRow

logger = get_flow_aware_logger("ksrecon.persistence.report")

RESULT_FIELDS = ["method", "rate", "seed", "nmse", "sharpness_rca", "runtime_s"]
AGGREGATE_FIELDS = ["method", "rate", "n", "nmse_mean", "nmse_std", "sharpness_mean", "sharpness_std"]
TTEST_FIELDS = ["pair", "t", "p", "n"]
TRACE_FIELDS = ["slice", "iter", "loss"]


def _write(path: Path, fields: list[str], rows: Iterable[Mapping], append: bool = False) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not (append and path.is_file() and path.stat().st_size > 0)
    with path.open("a" if not fresh else "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
        if fresh:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.info(f"Wrote {path}")
    return path


def write_results(path: str | Path, rows: Iterable[MetricsRow], append: bool = False) -> Path:
    return _write(Path(path), RESULT_FIELDS, (r.model_dump() for r in rows), append=append)


def read_results(path: str | Path) -> list[MetricsRow]:
    path = Path(path)
    if not path.is_file():
        raise FileFormatError(f"Results file not found: {path}")
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not set(RESULT_FIELDS) <= set(reader.fieldnames):
            raise FileFormatError(f"{path}: expected columns {RESULT_FIELDS}")
        try:
            return [MetricsRow.model_validate(row) for row in reader]
        except ValueError as e:
            raise FileFormatError(f"{path}: {e}") from e


def write_aggregate(path: str | Path, rows: Iterable[AggregateRow]) -> Path:
    return _write(Path(path), AGGREGATE_FIELDS, (r.model_dump() for r in rows))


def write_ttests(path: str | Path, rows: Iterable[TTestRow], append: bool = False) -> Path:
    return _write(Path(path), TTEST_FIELDS, (r.model_dump() for r in rows), append=append)


def write_loss_traces(path: str | Path, traces: Mapping[int, list[float]]) -> Path:
    rows = (
        {"slice": idx, "iter": it, "loss": loss}
        for idx in sorted(traces)
        for it, loss in enumerate(traces[idx], start=1)
    )
    return _write(Path(path), TRACE_FIELDS, rows)
