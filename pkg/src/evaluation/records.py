from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List

import numpy as np

from src.core.errors import ConfigurationError
from src.core.storage import atomic_write
from .metrics import SI_SDR_CAP


@dataclass(frozen=True)
class EvalRecord:
    scene_id: str
    source_index: int
    si_sdr_in: float
    si_sdr_out: float
    doa_true: float
    doa_est: float
    delta_doa: float
    sir_db: float
    snr_db: float
    bf_kind: str
    mask_kind: str
    doa_mode: str = "truth"
    stats: str = "batch"

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta_doa <= 180.0:
            raise ConfigurationError(f"delta_doa must be in [0, 180], got {self.delta_doa}")
        for name in ("si_sdr_in", "si_sdr_out"):
            value = getattr(self, name)
            if not np.isfinite(value) or abs(value) > SI_SDR_CAP:
                raise ConfigurationError(f"{name} must be finite and within +/-{SI_SDR_CAP} dB, got {value}")

    @property
    def improvement(self) -> float:
        return self.si_sdr_out - self.si_sdr_in

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_json(data: Dict[str, Any]) -> "EvalRecord":
        known = {f.name for f in fields(EvalRecord)}
        missing = known - set(data) - {"doa_mode", "stats"}
        if missing:
            raise ConfigurationError(f"record is missing fields: {sorted(missing)}")
        return EvalRecord(**{k: v for k, v in data.items() if k in known})


def write_records(path: str | Path, records: Iterable[EvalRecord]) -> None:
    with atomic_write(path, "w") as f:
        for record in records:
            f.write(json.dumps(record.to_json(), sort_keys=True) + "\n")


def read_records(path: str | Path) -> List[EvalRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(EvalRecord.from_json(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from exc
    return records
