from .gcc import (
    AngularSpectrum,
    LagScores,
    PeakSet,
    angular_spectrum,
    gcc_phat,
    localize,
    oracle_select,
    top_k_peaks,
)

__all__ = [
    "AngularSpectrum",
    "LagScores",
    "PeakSet",
    "angular_spectrum",
    "gcc_phat",
    "localize",
    "oracle_select",
    "top_k_peaks",
]
