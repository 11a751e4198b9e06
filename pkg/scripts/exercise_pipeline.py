from __future__ import annotations

import os
import sys
import tempfile
from pathlib import Path

# Ensure project root is on sys.path so 'src' package is importable
PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from src.cli.commands.pipeline import cmd_pipeline
from src.cli.schemas import DatasetConfig


def main() -> None:
    config = DatasetConfig(n_scenes=2, duration=1.0, anechoic=True, room_dim_range=(5.0, 7.0))
    with tempfile.TemporaryDirectory() as tmp:
        report = cmd_pipeline(config, Path(tmp), bf_kinds=["gev", "r1"], doa_modes=["truth"])
        assert report.total.count == 4
        assert (Path(tmp) / "report" / "report.csv").exists()
        print(report.to_text(), end="")
    print("PIPELINE OK")


if __name__ == "__main__":
    main()
