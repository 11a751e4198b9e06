"""SI-SDR improvement (or output SI-SDR) tables bucketed by DOA difference and by input SIR.

Buckets are left-closed / right-open; the last DOA bucket includes 180.
Empty cells render as an em-dash in text and as an empty field in CSV.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ConfigurationError
from .records import EvalRecord

EMPTY_CELL = "—"

DOA_BUCKETS: Tuple[Tuple[str, float, float], ...] = (
    ("<10", 0.0, 10.0),
    ("10-25", 10.0, 25.0),
    ("25-50", 25.0, 50.0),
    (">=50", 50.0, np.inf),
)
SIR_BUCKETS: Tuple[Tuple[str, float, float], ...] = (
    ("<-5", -np.inf, -5.0),
    ("-5-0", -5.0, 0.0),
    ("0-5", 0.0, 5.0),
    ("5-10", 5.0, 10.0),
    (">=10", 10.0, np.inf),
)
AXES = {"delta_doa": DOA_BUCKETS, "sir": SIR_BUCKETS}
# value name -> (table title, summary wording, getter)
VALUES: Dict[str, Tuple[str, str, Callable[[EvalRecord], float]]] = {
    "improvement": ("SI-SDR improvement", "improvement", lambda r: r.improvement),
    "si_sdr_out": ("output SI-SDR", "output SI-SDR", lambda r: r.si_sdr_out),
}


def bucket_of(value: float, buckets: Sequence[Tuple[str, float, float]]) -> str:
    for label, lo, hi in buckets:
        if lo <= value < hi:
            return label
    raise ValueError(f"{value} falls outside every bucket")


@dataclass(frozen=True)
class Cell:
    count: int
    mean: Optional[float]
    median: Optional[float]

    @staticmethod
    def of(values: Sequence[float]) -> "Cell":
        if not values:
            return Cell(0, None, None)
        return Cell(len(values), float(np.mean(values)), float(np.median(values)))

    def render(self) -> str:
        return EMPTY_CELL if self.mean is None else f"{self.mean:.2f}"


Group = Tuple[str, str]


@dataclass
class BucketReport:
    groups: List[Group]
    cells: Dict[str, Dict[Group, Dict[str, Cell]]]
    overall: Dict[Group, Cell]
    total: Cell
    value: str = "improvement"

    def to_json(self) -> Dict[str, Any]:
        def cell_json(cell: Cell) -> Dict[str, Any]:
            return {"count": cell.count, "mean": cell.mean, "median": cell.median}

        return {
            "axes": {
                axis: [
                    {"bf_kind": bf, "doa_mode": mode, "buckets": {b: cell_json(c) for b, c in row.items()}}
                    for (bf, mode), row in table.items()
                ]
                for axis, table in self.cells.items()
            },
            "overall": [
                {"bf_kind": bf, "doa_mode": mode, **cell_json(cell)} for (bf, mode), cell in self.overall.items()
            ],
            "total": cell_json(self.total),
            "value": self.value,
        }

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["axis", "bucket", "bf_kind", "doa_mode", "count", f"mean_{self.value}", f"median_{self.value}"])
        for axis, table in self.cells.items():
            for (bf, mode), row in table.items():
                for bucket, cell in row.items():
                    writer.writerow(_csv_row(axis, bucket, bf, mode, cell))
        for (bf, mode), cell in self.overall.items():
            writer.writerow(_csv_row("overall", "all", bf, mode, cell))
        writer.writerow(_csv_row("overall", "all", "all", "all", self.total))
        return buffer.getvalue()

    def to_text(self) -> str:
        lines = []
        name = VALUES[self.value][0]
        titles = {"delta_doa": f"{name} (dB) by DOA difference (deg)", "sir": f"{name} (dB) by SIR (dB)"}
        for axis, table in self.cells.items():
            labels = [label for label, _, _ in AXES[axis]]
            header = ["system"] + labels + ["all"]
            rows = [
                [f"{bf}/{mode}"] + [row[label].render() for label in labels] + [self.overall[(bf, mode)].render()]
                for (bf, mode), row in table.items()
            ]
            widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
            lines.append(titles[axis])
            lines.append("  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths))))
            for r in rows:
                lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(r, widths))))
            lines.append("")
        lines.append(f"overall mean {VALUES[self.value][1]}: {self.total.render()} dB over {self.total.count} outputs")
        return "\n".join(lines) + "\n"


def _csv_row(axis: str, bucket: str, bf: str, mode: str, cell: Cell) -> List[Any]:
    fmt = lambda v: "" if v is None else f"{v:.4f}"  # noqa: E731
    return [axis, bucket, bf, mode, cell.count, fmt(cell.mean), fmt(cell.median)]


def bucket_report(records: Sequence[EvalRecord], value: str = "improvement") -> BucketReport:
    """Mean/median of ``value`` per bucket for every (beamformer, DOA mode) pair.

    ``value`` is "improvement" (SI-SDR out minus in) or "si_sdr_out".
    """
    if value not in VALUES:
        raise ConfigurationError(f"unknown report value '{value}', expected one of {tuple(VALUES)}")
    get = VALUES[value][2]
    groups = sorted({(r.bf_kind, r.doa_mode) for r in records})
    keys = {"delta_doa": lambda r: r.delta_doa, "sir": lambda r: r.sir_db}

    cells: Dict[str, Dict[Group, Dict[str, Cell]]] = {}
    for axis, buckets in AXES.items():
        table: Dict[Group, Dict[str, Cell]] = {}
        for group in groups:
            members = [r for r in records if (r.bf_kind, r.doa_mode) == group]
            table[group] = {
                label: Cell.of([get(r) for r in members if bucket_of(keys[axis](r), buckets) == label])
                for label, _, _ in buckets
            }
        cells[axis] = table

    overall = {group: Cell.of([get(r) for r in records if (r.bf_kind, r.doa_mode) == group]) for group in groups}
    return BucketReport(groups, cells, overall, Cell.of([get(r) for r in records]), value)
