"""EEG emotion recognition from discrete-wavelet entropy and energy features.

Pipeline: DEAP-layout or synthetic recordings -> mean removal and [0, 1]
scaling -> sliding windows -> db4 DWT band mapping -> per-band entropy and
energy -> PCA -> SVM (SMO), KNN or MLP, scored by participant-grouped
cross-validation.
"""

from .dataset import (
    Dataset,
    DatasetError,
    Label,
    RatingRecord,
    Recording,
    SyntheticSpec,
    binarize,
    convert_deap,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from .evaluation import ExperimentReport, MetricSet, compute_metrics, make_folds, run_experiment
from .features import FeatureMatrix, dataset_features, energy, entropy
from .pca import PcaBasis
from .preprocess import WindowSpec, normalize_unit_interval, preprocess, remove_mean, window
from .wavelet import band_level_map, db4_filters, decompose, dwt_level, idwt_level, wavedec, waverec

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DatasetError", "Label", "RatingRecord", "Recording", "SyntheticSpec",
    "binarize", "convert_deap", "generate_synthetic", "load_dataset", "save_dataset",
    "ExperimentReport", "MetricSet", "compute_metrics", "make_folds", "run_experiment",
    "FeatureMatrix", "dataset_features", "energy", "entropy",
    "PcaBasis",
    "WindowSpec", "normalize_unit_interval", "preprocess", "remove_mean", "window",
    "band_level_map", "db4_filters", "decompose", "dwt_level", "idwt_level", "wavedec", "waverec",
]
