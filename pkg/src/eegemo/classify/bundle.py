"""Model bundles: a directory of a ``metadata.json`` plus plain-text matrices.

    metadata.json      kind, hyperparameters, feature columns, file index
    pca.txt            optional PCA basis (see PcaBasis.save)
    <name>.txt         one text matrix per array (17 significant digits)
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from ..pca import PcaBasis
from .ann import AnnConfig, AnnModel
from .knn import KnnModel
from .svm import SvmModel

BUNDLE_VERSION = 1


def _save(path: Path, arr) -> None:
    # stored 2-D; the original shape lives in metadata.json
    arr = np.asarray(arr, dtype=np.float64)
    np.savetxt(path, arr.reshape(1, -1) if arr.ndim < 2 else arr.reshape(arr.shape[0], -1), fmt="%.17g")


def _load(path: Path, shape) -> np.ndarray:
    return np.loadtxt(path, ndmin=2).reshape(shape)


def save_bundle(directory, model, columns: Sequence | None = None, pca_basis: PcaBasis | None = None, extra: dict | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    arrays: dict[str, np.ndarray] = {}
    if isinstance(model, SvmModel):
        kind = "svm"
        hyper = {"sigma": model.sigma, "C": model.C, "bias": model.bias}
        arrays = {"support_vectors": model.support_vectors, "dual_coef": model.dual_coef, "alphas": model.alphas}
    elif isinstance(model, KnnModel):
        kind = "knn"
        hyper = {"k": model.k}
        arrays = {"train_x": model.X, "train_y": model.y}
    elif isinstance(model, AnnModel):
        kind = "ann"
        hyper = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(model.config).items()}
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            arrays[f"weight_{i}"] = w
            arrays[f"bias_{i}"] = b
        arrays["loss_history"] = model.loss_history
    else:
        raise TypeError(f"cannot bundle {type(model).__name__}")

    files = {}
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=np.float64)
        _save(d / f"{name}.txt", arr)
        files[name] = {"file": f"{name}.txt", "shape": list(arr.shape)}
    meta = {
        "version": BUNDLE_VERSION,
        "kind": kind,
        "hyperparameters": hyper,
        "feature_columns": [":".join(c) if isinstance(c, tuple) else c for c in (columns or [])],
        "arrays": files,
        "pca": None,
    }
    if pca_basis is not None:
        pca_basis.save(d / "pca.txt")
        meta["pca"] = "pca.txt"
    if extra:
        meta["extra"] = extra
    (d / "metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return d


def load_bundle(directory):
    """Returns ``(model, pca_basis_or_None, metadata)``."""
    d = Path(directory)
    meta = json.loads((d / "metadata.json").read_text())
    arrs = {name: _load(d / info["file"], info["shape"]) for name, info in meta["arrays"].items()}
    hyper = meta["hyperparameters"]
    kind = meta["kind"]
    if kind == "svm":
        model = SvmModel(
            support_vectors=arrs["support_vectors"],
            dual_coef=arrs["dual_coef"],
            bias=float(hyper["bias"]),
            sigma=float(hyper["sigma"]),
            C=float(hyper["C"]),
            alphas=arrs["alphas"],
        )
    elif kind == "knn":
        model = KnnModel(arrs["train_x"], arrs["train_y"].astype(np.int64), int(hyper["k"]))
    elif kind == "ann":
        n_layers = sum(1 for k in arrs if k.startswith("weight_"))
        cfg = AnnConfig(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in hyper.items()})
        model = AnnModel(
            tuple(arrs[f"weight_{i}"] for i in range(n_layers)),
            tuple(arrs[f"bias_{i}"] for i in range(n_layers)),
            arrs["loss_history"],
            cfg,
        )
    else:
        raise ValueError(f"unknown bundle kind {kind!r}")
    basis = PcaBasis.load(d / meta["pca"]) if meta.get("pca") else None
    return model, basis, meta
