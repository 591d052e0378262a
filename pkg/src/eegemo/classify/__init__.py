"""Native SVM (SMO), K-nearest-neighbour and feed-forward network classifiers."""

from .ann import AnnConfig, AnnModel, DivergenceError, ann_predict, ann_predict_proba, ann_train
from .bundle import load_bundle, save_bundle
from .kernels import rbf_gram, rbf_kernel
from .knn import KnnModel, knn_fit, knn_neighbors, knn_predict
from .svm import (
    ConvergenceError,
    DegenerateProblemError,
    SvmError,
    SvmModel,
    decision_function,
    svm_predict,
    svm_train,
)

__all__ = [
    "AnnConfig", "AnnModel", "DivergenceError", "ann_predict", "ann_predict_proba", "ann_train",
    "load_bundle", "save_bundle",
    "rbf_gram", "rbf_kernel",
    "KnnModel", "knn_fit", "knn_neighbors", "knn_predict",
    "ConvergenceError", "DegenerateProblemError", "SvmError", "SvmModel", "decision_function", "svm_predict", "svm_train",
]
