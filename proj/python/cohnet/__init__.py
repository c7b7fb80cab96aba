"""Python bindings for the functional-connectivity pipeline core."""

from ._cohnet import (
    auc,
    band_log_power,
    coherence_matrix,
    default_band_edges,
    eigen_spectrum,
    generate_trial,
    highpass,
    notch,
    variability_features,
    wilcoxon_p,
)

__all__ = [
    "auc",
    "band_log_power",
    "coherence_matrix",
    "default_band_edges",
    "eigen_spectrum",
    "generate_trial",
    "highpass",
    "notch",
    "variability_features",
    "wilcoxon_p",
]
