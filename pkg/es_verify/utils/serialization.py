# utils/serialization.py

import csv
import dataclasses
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np

from es_verify.domain.errors import UsageError
from es_verify.domain.models import RunTrace, StepRecord

PathLike = Union[str, Path]


def to_plain(value: Any) -> Any:
    """
    Convert dataclasses, enums and numpy values into JSON-ready structures.

    Non-finite floats become the strings "inf", "-inf" and "nan" so the
    output stays strict JSON.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        if hasattr(value, "to_dict"):
            return to_plain(value.to_dict())
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def dumps(value: Any) -> str:
    return json.dumps(to_plain(value), sort_keys=True)


def _open_out(path: Optional[PathLike]) -> TextIO:
    if path is None:
        raise ValueError("path required")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return open(out, "w", newline="", encoding="utf-8")


def write_json(value: Any, path: PathLike) -> None:
    with _open_out(path) as handle:
        handle.write(json.dumps(to_plain(value), sort_keys=True, indent=2))
        handle.write("\n")


def write_jsonl(values: Iterable[Any], path: PathLike) -> None:
    with _open_out(path) as handle:
        for value in values:
            handle.write(dumps(value))
            handle.write("\n")


def trace_jsonl_lines(trace: RunTrace) -> List[str]:
    # keys keep the StepRecord field order, so no sort_keys here
    return [json.dumps(to_plain(record.to_dict())) for record in trace.records]


def write_trace_jsonl(trace: RunTrace, path: PathLike) -> None:
    with _open_out(path) as handle:
        for line in trace_jsonl_lines(trace):
            handle.write(line)
            handle.write("\n")


def trace_csv_header(dimension: int) -> List[str]:
    return ["t"] + [f"m{i + 1}" for i in range(dimension)] + ["sigma", "f", "accepted"]


def trace_csv_row(record: StepRecord) -> List[Any]:
    return ([record.t] + [repr(float(v)) for v in record.m_before]
            + [repr(record.sigma_before), repr(float(record.f_parent)), int(record.accepted)])


def write_trace_csv(trace: RunTrace, path: PathLike) -> None:
    write_rows_csv(
        trace_csv_header(trace.initial_state.dimension),
        (trace_csv_row(record) for record in trace.records),
        path,
    )


def write_rows_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: PathLike) -> None:
    with _open_out(path) as handle:
        _write_csv(handle, header, rows)


def rows_to_csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    _write_csv(buffer, header, rows)
    return buffer.getvalue()


def _write_csv(handle: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow(list(row))


def parse_vector(text: str) -> np.ndarray:
    """Parse a comma-separated list of decimals, scientific notation allowed."""
    try:
        values = [float(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError as e:
        raise UsageError(f"cannot parse vector {text!r}: {e}") from e
    if not values:
        raise UsageError(f"empty vector {text!r}")
    return np.asarray(values, dtype=float)


def parse_assignments(items: Optional[Sequence[str]]) -> dict:
    """Parse ``key=value`` strings; values are decoded as JSON when possible."""
    result = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        if not key:
            raise UsageError(f"empty key in {item!r}")
        try:
            result[key] = json.loads(raw)
        except json.JSONDecodeError:
            result[key] = raw
    return result
