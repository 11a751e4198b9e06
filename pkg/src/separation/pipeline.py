"""Location-guided separation chain: DOA, DS beamformer, mask, covariances, adaptive beamformer, istft."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from src.core.errors import ConfigurationError
from src.core.geometry import ArrayGeometry, SourceDirection
from src.core.signal import Spectrogram, TimeSignal, istft, stft
from src.localization.gcc import PeakSet, localize, oracle_select
from .beamformers import BF_KINDS, BeamformerWeights, apply_beamformer, compute_weights
from .front import FeatureBlock, csipd_features, ds_beamform
from .masks import ORACLE_KINDS, Mask, heuristic_mask, load_external_mask, oracle_mask, resolve_mask_path
from .stats import DEFAULT_ALPHA, batch_cov, recursive_cov

logger = logging.getLogger(__name__)

DOA_MODES = ("truth", "gcc")
STATS_MODES = ("batch", "recursive")
FILE_MASK_PREFIX = "file:"


@dataclass(frozen=True)
class SeparationConfig:
    mask: str = "oracle"
    oracle_kind: str = "ratio"
    heuristic_exponent: float = 2.0
    bf: str = "r1"
    mu: float = 1.0
    alpha: float = DEFAULT_ALPHA
    stats: str = "batch"
    doa_mode: str = "truth"
    window_len: int = 1600
    frame_shift: int = 800
    loading: Optional[float] = None
    normalize_ds: bool = True
    multi_pair: bool = False

    def __post_init__(self) -> None:
        if self.mask not in ("oracle", "heuristic") and not self.mask.startswith(FILE_MASK_PREFIX):
            raise ConfigurationError(f"unknown mask provider '{self.mask}'")
        if self.oracle_kind not in ORACLE_KINDS:
            raise ConfigurationError(f"unknown oracle mask kind '{self.oracle_kind}'")
        if self.bf not in BF_KINDS:
            raise ConfigurationError(f"unknown beamformer '{self.bf}'")
        if self.stats not in STATS_MODES:
            raise ConfigurationError(f"unknown statistics mode '{self.stats}'")
        if self.doa_mode not in DOA_MODES:
            raise ConfigurationError(f"unknown DOA mode '{self.doa_mode}'")
        if self.mu < 0:
            raise ConfigurationError(f"mu must be >= 0, got {self.mu}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(eq=False)
class SeparationResult:
    outputs: List[TimeSignal]
    doas: List[float]
    masks: List[Mask]
    weights: List[BeamformerWeights]
    features: List[FeatureBlock]
    peaks: Optional[PeakSet] = None
    ds_outputs: List[Spectrogram] = field(default_factory=list)


def resolve_doas(
    mixture: TimeSignal,
    geom: ArrayGeometry,
    config: SeparationConfig,
    n_sources: int,
    true_doas: Optional[Sequence[float]] = None,
) -> tuple[List[float], Optional[PeakSet]]:
    """DOA per source: ground truth, or GCC-PHAT peaks matched to the closest true DOA when known."""
    if config.doa_mode == "truth":
        if true_doas is None:
            raise ConfigurationError("DOA mode 'truth' needs ground-truth DOAs")
        return [float(d) for d in true_doas], None

    _, peaks = localize(
        mixture, geom, k=n_sources, multi_pair=config.multi_pair,
        window_len=config.window_len, frame_shift=config.frame_shift,
    )
    if len(peaks) == 0:
        raise ConfigurationError("no DOA peaks found in the mixture")
    if true_doas is not None:
        return [oracle_select(peaks, doa) for doa in true_doas], peaks
    doas = list(peaks.doas)
    # a short peak list repeats its strongest peak so every source gets an output
    while len(doas) < n_sources:
        doas.append(peaks.doas[0])
    return doas, peaks


def nearest_source(doa: float, true_doas: Sequence[float]) -> int:
    """Index of the true DOA closest to ``doa``; ties go to the lower index."""
    return int(np.argmin([abs(float(doa) - float(t)) for t in true_doas]))


def _masks(
    config: SeparationConfig,
    spec: Spectrogram,
    doas: Sequence[float],
    ds_outputs: List[Spectrogram],
    truth,
    scene_id: str,
    mask_dir: Optional[Path],
) -> List[Mask]:
    if config.mask == "oracle":
        by_source = oracle_mask(truth, spec, config.oracle_kind)
        # each steered direction gets the mask of the speaker closest to it
        return [by_source[nearest_source(doa, truth.true_doas)] for doa in doas]
    if config.mask == "heuristic":
        return heuristic_mask(ds_outputs, config.heuristic_exponent)
    template = config.mask[len(FILE_MASK_PREFIX) :]
    return [
        load_external_mask(resolve_mask_path(template, scene_id, j, mask_dir), (spec.n_frames, spec.n_freqs), j)
        for j in range(len(ds_outputs))
    ]


def separate(
    mixture: TimeSignal,
    geom: ArrayGeometry,
    config: SeparationConfig,
    n_sources: int = 2,
    true_doas: Optional[Sequence[float]] = None,
    truth=None,
    scene_id: str = "scene",
    mask_dir: Optional[Path] = None,
) -> SeparationResult:
    if config.mask == "oracle" and truth is None:
        raise ConfigurationError("oracle masks need a simulated scene with ground truth")

    doas, peaks = resolve_doas(mixture, geom, config, n_sources, true_doas)
    spec = stft(mixture, config.window_len, config.frame_shift)
    reference = spec.channel(geom.reference_index)

    ds_outputs = [
        ds_beamform(spec, geom, SourceDirection(float(doa)), normalize=config.normalize_ds) for doa in doas
    ]
    features = [csipd_features(ds, reference) for ds in ds_outputs]
    masks = _masks(config, spec, doas, ds_outputs, truth, scene_id, mask_dir)

    outputs, weights = [], []
    for mask in masks:
        if config.stats == "batch":
            cov = batch_cov(mask, spec)
        else:
            cov = recursive_cov(mask, spec, config.alpha)
        w = compute_weights(config.bf, cov, config.mu, config.loading, geom.reference_index)
        weights.append(w)
        outputs.append(istft(apply_beamformer(w, spec)))

    logger.debug(f"{scene_id}: separated {len(outputs)} sources with {config.bf} ({config.stats} statistics)")
    return SeparationResult(outputs, doas, masks, weights, features, peaks, ds_outputs)
