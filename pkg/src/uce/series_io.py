"""Series files: JSON Lines records and a single-column CSV import path.

JSONL, one object per series:

    {"id": str, "label": "real"|"generated", "values": [f64...], "meta": {...}}
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SeriesRecord:
    series_id: str
    label: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in ("real", "generated"):
            raise ValidationError(f"label must be 'real' or 'generated', got {self.label!r}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 1:
            raise ValidationError("values must be a nonempty 1-d sequence")
        object.__setattr__(self, "values", values)


def write_series_jsonl(records: list[SeriesRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.series_id,
                        "label": rec.label,
                        "values": [float(v) for v in rec.values],
                        "meta": rec.meta,
                    },
                    separators=(",", ":"),
                    sort_keys=True,
                )
                + "\n"
            )


def read_series_jsonl(path: str | os.PathLike) -> list[SeriesRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: line {line_no} is not valid JSON ({exc})") from exc
            for key in ("id", "label", "values"):
                if key not in obj:
                    raise ValidationError(f"{path}: line {line_no} is missing {key!r}")
            records.append(
                SeriesRecord(
                    series_id=str(obj["id"]),
                    label=obj["label"],
                    values=np.asarray(obj["values"], dtype=float),
                    meta=obj.get("meta", {}),
                )
            )
    if not records:
        raise ValidationError(f"{path}: no series records found")
    return records


def read_series_csv(path: str | os.PathLike, label: str = "real") -> list[SeriesRecord]:
    """Single-column CSV of values; an optional header row is skipped."""
    values = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            cell = row[0].strip()
            if not cell:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                if row_no == 1:  # header
                    continue
                raise ValidationError(f"{path}: row {row_no} is not numeric: {cell!r}")
    if not values:
        raise ValidationError(f"{path}: no numeric values found")
    series_id = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return [SeriesRecord(series_id=series_id, label=label, values=np.asarray(values))]


def read_series_file(path: str | os.PathLike, label: str = "real") -> list[SeriesRecord]:
    if os.fspath(path).lower().endswith(".csv"):
        return read_series_csv(path, label=label)
    return read_series_jsonl(path)
