from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.cli.commands.dataset import cmd_make_dataset, dataset_with_overrides
from src.cli.commands.evaluate import cmd_eval
from src.cli.commands.localize import cmd_localize
from src.cli.commands.pipeline import cmd_pipeline
from src.cli.commands.separate import cmd_separate, pipeline_with_overrides
from src.cli.config import get_settings
from src.cli.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from src.cli.schemas import DatasetConfig, Manifest, PipelineConfig, SceneEntry
from src.cli.storage import MANIFEST_NAME, check_files, load_dataset_config, load_manifest, save_manifest
from src.core.errors import ConfigurationError, EmptyInputError, ManifestError
from src.core.wavio import write_wav
from src.evaluation.records import read_records


def tiny_config(n_scenes: int = 2, **kw) -> DatasetConfig:
    return DatasetConfig(n_scenes=n_scenes, duration=1.0, anechoic=True, room_dim_range=(5.0, 7.0), **kw)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory) -> Path:
    """Two rendered anechoic scenes shared by the separation tests"""
    out = tmp_path_factory.mktemp("dataset")
    cmd_make_dataset(tiny_config(), out)
    return out


@pytest.fixture
def real_scene(tmp_path: Path, plane_wave) -> Path:
    """Manifest with one mixture and no ground truth"""
    write_wav(tmp_path / "mixture.wav", plane_wave([50.0, 130.0], seconds=1.0))
    manifest = Manifest(scenes=[SceneEntry(scene_id="live0", seed=0, mixture="mixture.wav")])
    save_manifest(tmp_path / MANIFEST_NAME, manifest)
    return tmp_path


# Dataset Tests
def test_make_dataset_is_reproducible(tmp_path: Path, dataset: Path):
    """Same config and seed give byte-identical manifests and audio, whatever the worker count"""
    again = tmp_path / "again"
    cmd_make_dataset(tiny_config(), again, jobs=2)
    assert (again / MANIFEST_NAME).read_bytes() == (dataset / MANIFEST_NAME).read_bytes()
    for name in ("mixture.wav", "image0.wav", "noise.wav"):
        assert (again / "scenes/scene0001" / name).read_bytes() == (dataset / "scenes/scene0001" / name).read_bytes()


def test_manifest_layout(dataset: Path):
    manifest = load_manifest(dataset)
    assert [s.scene_id for s in manifest.scenes] == ["scene0000", "scene0001"]
    entry = manifest.scenes[0]
    assert entry.simulated
    assert entry.images == ["scenes/scene0000/image0.wav", "scenes/scene0000/image1.wav"]
    truth = json.loads((dataset / entry.truth).read_text())
    assert len(truth["true_doas"]) == 2
    check_files(manifest, dataset)


def test_empty_dataset_gives_a_valid_manifest(tmp_path: Path):
    manifest = cmd_make_dataset(tiny_config(n_scenes=0), tmp_path)
    assert manifest.scenes == []
    assert load_manifest(tmp_path / MANIFEST_NAME).scenes == []


def test_missing_scene_files_are_reported(tmp_path: Path, dataset: Path):
    manifest = load_manifest(dataset)
    with pytest.raises(ManifestError, match="missing"):
        check_files(manifest, tmp_path)


# Separation Tests
def test_beamformer_choice_leaves_the_input_scores_alone(tmp_path: Path, dataset: Path):
    manifest = load_manifest(dataset)
    runs = {}
    for bf in ("gev", "r1"):
        pipeline = pipeline_with_overrides(manifest.pipeline, {"bf": bf})
        runs[bf] = cmd_separate(manifest, dataset, pipeline, tmp_path / "out")
    assert [r.si_sdr_in for r in runs["gev"]] == [r.si_sdr_in for r in runs["r1"]]
    assert len(runs["r1"]) == 4
    assert all(r.improvement > 0 for r in runs["r1"])
    assert read_records(tmp_path / "out" / "records" / "r1_truth.jsonl") == runs["r1"]


def test_separated_audio_is_deterministic(tmp_path: Path, dataset: Path):
    manifest = load_manifest(dataset)
    for name in ("a", "b"):
        cmd_separate(manifest, dataset, manifest.pipeline, tmp_path / name, scenes=["scene0000"])
    first = (tmp_path / "a" / "scene0000" / "r1_truth" / "source0.wav").read_bytes()
    assert first == (tmp_path / "b" / "scene0000" / "r1_truth" / "source0.wav").read_bytes()


def test_pipeline_overrides_are_validated():
    with pytest.raises(ConfigurationError, match="invalid pipeline settings"):
        pipeline_with_overrides(PipelineConfig(), {"bf": "mvdr"})
    assert pipeline_with_overrides(PipelineConfig(), {"mu": None, "stats": "recursive"}).stats == "recursive"
    with pytest.raises(ValidationError):
        PipelineConfig(mask="file:")


def test_real_scene_needs_blind_settings(real_scene: Path, tmp_path: Path):
    assert main(["separate", "--manifest", str(real_scene), "--out", str(tmp_path / "sep")]) == EXIT_FAILURE

    code = main([
        "separate", "--manifest", str(real_scene), "--out", str(tmp_path / "sep"),
        "--doa", "gcc", "--mask", "heuristic",
    ])
    assert code == EXIT_OK
    doas = json.loads((tmp_path / "sep" / "live0" / "r1_gcc" / "doas.json").read_text())["doas"]
    assert len(doas) == 2
    assert (tmp_path / "sep" / "live0" / "r1_gcc" / "source1.wav").is_file()


# Command Line Tests
def test_usage_errors_exit_with_two():
    assert main(["separate", "--bogus"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_missing_manifest_exits_with_one(tmp_path: Path):
    assert main(["separate", "--manifest", str(tmp_path / "nope.json")]) == EXIT_FAILURE


def test_invalid_scene_count_exits_with_one(tmp_path: Path):
    assert main(["make-dataset", "--n-scenes", "-1", "--out", str(tmp_path / "ds")]) == EXIT_FAILURE
    assert main(["pipeline", "--n-scenes", "-1", "--out", str(tmp_path / "run")]) == EXIT_FAILURE
    assert not (tmp_path / "ds").exists()
    with pytest.raises(ConfigurationError, match="invalid dataset settings"):
        dataset_with_overrides(DatasetConfig(), {"n_scenes": -1})
    assert dataset_with_overrides(DatasetConfig(), {"n_scenes": 3, "master_seed": None}).n_scenes == 3


def test_eval_command_writes_every_report(tmp_path: Path, dataset: Path, capsys):
    manifest = load_manifest(dataset)
    cmd_separate(manifest, dataset, manifest.pipeline, tmp_path / "sep")
    assert main(["eval", "--records", str(tmp_path / "sep" / "records"), "--out", str(tmp_path / "report")]) == EXIT_OK
    for name in ("report.csv", "report.txt", "report.json"):
        assert (tmp_path / "report" / name).is_file()
    assert "overall mean improvement" in capsys.readouterr().out


def test_eval_without_records_fails(tmp_path: Path):
    with pytest.raises(EmptyInputError):
        cmd_eval([], tmp_path)


def test_localize_reports_peaks_and_selection(dataset: Path):
    result = cmd_localize(dataset, "scene0000", k=2)
    assert len(result["spectrum"]["scores"]) == 181
    assert len(result["selected"]) == 2
    assert all(0.0 <= doa <= 180.0 for doa in result["selected"])


def test_localize_command_prints_json(dataset: Path, capsys):
    assert main(["localize", "--manifest", str(dataset), "--scene", "scene0000"]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert "spectrum" not in printed
    assert printed["scene_id"] == "scene0000"


def test_pipeline_runs_every_system(tmp_path: Path):
    report = cmd_pipeline(tiny_config(n_scenes=1), tmp_path, bf_kinds=["gev", "r1"], doa_modes=["truth", "gcc"])
    assert report.groups == [("gev", "gcc"), ("gev", "truth"), ("r1", "gcc"), ("r1", "truth")]
    assert report.total.count == 8
    assert (tmp_path / "report" / "report.json").is_file()


# Configuration Tests
def test_dataset_config_validation(tmp_path: Path):
    with pytest.raises(ValidationError, match="lower bound"):
        DatasetConfig(sir_range=(5.0, 0.0))
    with pytest.raises(ConfigurationError, match="does not exist"):
        load_dataset_config(tmp_path / "missing.json")
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"n_scenes": 3, "unknown": 1}))
    with pytest.raises(ConfigurationError, match="failed validation"):
        load_dataset_config(path)


def test_settings_read_the_environment(monkeypatch):
    monkeypatch.setenv("LOCSEP_OUTPUT_DIR", "/tmp/locsep-runs")
    get_settings.cache_clear()
    try:
        assert get_settings().output_dir == "/tmp/locsep-runs"
        assert get_settings().mask_path() is None
    finally:
        get_settings.cache_clear()


def test_geometry_config_builds_the_array():
    config = DatasetConfig().geometry
    geom = config.build()
    assert geom.n_mics == 4
    assert np.isclose(geom.distance(0, 3), 0.226)
