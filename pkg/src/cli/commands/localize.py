from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict

from ..storage import load_manifest, load_scene
from src.core.storage import save_json
from src.localization.gcc import localize, oracle_select


def cmd_localize(manifest_path: Path, scene_id: str, k: int = 2, multi_pair: bool = False) -> Dict[str, Any]:
    """GCC-PHAT peaks of one scene; ``selected`` is the closest peak per true DOA when truth exists."""
    manifest = load_manifest(manifest_path)
    root = manifest_path if manifest_path.is_dir() else manifest_path.parent
    geom = manifest.geometry.build()
    scene = load_scene(manifest.scene(scene_id), root, manifest.stft.sample_rate, geom.reference_index)

    spectrum, peaks = localize(
        scene.mixture, geom, k=k, multi_pair=multi_pair,
        window_len=manifest.stft.window_len, frame_shift=manifest.stft.frame_shift,
    )
    result: Dict[str, Any] = {"scene_id": scene_id, **peaks.to_json(), "spectrum": spectrum.to_json()}
    if scene.true_doas is not None and len(peaks):
        result["true_doas"] = scene.true_doas
        result["selected"] = [oracle_select(peaks, doa) for doa in scene.true_doas]
    else:
        result["selected"] = list(peaks.doas)
    return result


def _run(args: argparse.Namespace) -> int:
    result = cmd_localize(Path(args.manifest), args.scene, args.k, args.multi_pair)
    if args.out:
        save_json(args.out, result)
    else:
        if not args.with_spectrum:
            result.pop("spectrum")
        json.dump(result, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("localize", help="GCC-PHAT DOA peaks of one scene as JSON")
    parser.add_argument("--manifest", required=True, help="manifest file or dataset directory")
    parser.add_argument("--scene", required=True, help="scene id")
    parser.add_argument("--k", type=int, default=2, help="number of peaks")
    parser.add_argument("--multi-pair", action="store_true", help="average the spectra of every mic pair")
    parser.add_argument("--with-spectrum", action="store_true", help="include the angular spectrum on stdout")
    parser.add_argument("--out", help="write JSON here instead of stdout")
    parser.set_defaults(func=_run)
