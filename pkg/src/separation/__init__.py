from .beamformers import (
    BeamformerWeights,
    apply_beamformer,
    compute_weights,
    gev_weights,
    r1_mwf_weights,
    sdw_mwf_weights,
)
from .front import FeatureBlock, csipd_features, delay_and_sum, ds_beamform
from .masks import Mask, heuristic_mask, load_external_mask, oracle_mask, save_mask
from .pipeline import SeparationConfig, SeparationResult, separate
from .stats import (
    CovariancePair,
    batch_cov,
    dump_covariances,
    recursive_cov,
    update_noise_cov,
    update_source_cov,
)
