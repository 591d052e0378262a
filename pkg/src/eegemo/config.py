"""Run configuration schema shared by the evaluation harness and the CLI.

Unknown keys are rejected everywhere.  Defaults: sigma=2, C=1, K=5,
hidden=[32, 16], 4 s windows with 50% overlap, eight participant folds.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .dataset import CHANNEL_PAIRS, DIMENSIONS, STUDY_CHANNELS, SyntheticSpec, channel_selection
from .wavelet import FEATURE_BANDS


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SvmParams(_Strict):
    kind: Literal["svm"] = "svm"
    name: Optional[str] = None
    sigma: float = Field(2.0, gt=0)
    C: float = Field(1.0, gt=0)
    tol: float = Field(1e-3, gt=0)

    def label(self) -> str:
        return self.name or "SVM"


class KnnParams(_Strict):
    kind: Literal["knn"] = "knn"
    name: Optional[str] = None
    k: int = Field(5, ge=1)
    allow_even: bool = False

    @model_validator(mode="after")
    def _odd(self):
        if self.k % 2 == 0 and not self.allow_even:
            raise ValueError(f"K={self.k} is even; set allow_even to permit vote ties")
        return self

    def label(self) -> str:
        return self.name or "KNN"


class AnnParams(_Strict):
    kind: Literal["ann"] = "ann"
    name: Optional[str] = None
    hidden: tuple[int, int] = (32, 16)
    learning_rate: float = Field(0.01, gt=0)
    batch_size: int = Field(32, ge=1)
    epochs: int = Field(200, ge=1)

    def label(self) -> str:
        return self.name or "ANN"


ClassifierParams = Annotated[Union[SvmParams, KnnParams, AnnParams], Field(discriminator="kind")]


def _default_classifiers():
    return [SvmParams(), KnnParams(), AnnParams()]


class SyntheticParams(_Strict):
    n_participants: int = Field(32, gt=0)
    n_trials: int = Field(40, gt=0)
    duration_seconds: float = Field(60.0, gt=0)
    sampling_rate_hz: float = Field(128.0, gt=0)
    effect_band: str = "beta"
    amplitude_ratio: float = Field(1.5, gt=0)
    effect_amplitude: float = Field(1.0, ge=0)
    noise_amplitude: float = Field(1.0, ge=0)
    background_amplitude: float = Field(0.5, ge=0)
    slow_amplitude: float = Field(10.0, ge=0)
    participant_variability: float = Field(0.1, ge=0)

    def to_spec(self) -> SyntheticSpec:
        return SyntheticSpec(**self.model_dump())


class ExperimentConfig(_Strict):
    window_lengths: tuple[float, ...] = (4.0,)
    overlap: float = Field(0.5, ge=0, lt=1)
    axis: Literal["band", "pair"] = "band"
    values: Optional[tuple[str, ...]] = None
    channels: tuple[str, ...] = STUDY_CHANNELS
    classifiers: list[ClassifierParams] = Field(default_factory=_default_classifiers)
    dimensions: tuple[str, ...] = DIMENSIONS
    folds: int = Field(8, ge=2)
    seed: int = 0
    reference: Literal["channel", "common"] = "channel"
    pca_center: bool = True
    workers: int = Field(1, ge=1)

    @field_validator("window_lengths")
    @classmethod
    def _windows(cls, v):
        if not v or any(w <= 0 for w in v):
            raise ValueError("window lengths must be positive and non-empty")
        return v

    @field_validator("channels")
    @classmethod
    def _channels(cls, v):
        return channel_selection(v)

    @field_validator("dimensions")
    @classmethod
    def _dims(cls, v):
        bad = [d for d in v if d not in DIMENSIONS]
        if bad or not v:
            raise ValueError(f"dimensions must be drawn from {DIMENSIONS}")
        return v

    @model_validator(mode="after")
    def _axis_values(self):
        if self.values is None:
            return self
        if self.axis == "band":
            bad = [b for b in self.values if b not in FEATURE_BANDS]
        else:
            bad = [p for p in self.values if p not in CHANNEL_PAIRS]
        if bad:
            raise ValueError(f"unknown {self.axis} values {bad}")
        return self

    @model_validator(mode="after")
    def _unique_names(self):
        labels = [c.label() for c in self.classifiers]
        if not labels:
            raise ValueError("at least one classifier is required")
        if len(set(labels)) != len(labels):
            raise ValueError(f"classifier names must be unique, got {labels}; set 'name'")
        return self

    def axis_values(self) -> tuple[str, ...]:
        if self.values is not None:
            return tuple(self.values)
        return FEATURE_BANDS if self.axis == "band" else tuple(CHANNEL_PAIRS)

    def modes(self) -> list[str]:
        return [f"{self.axis}:{v}" for v in self.axis_values()]


class RunConfig(_Strict):
    dataset: Optional[str] = None
    synthetic: Optional[SyntheticParams] = None
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    output: str = "eegemo-out"

    @model_validator(mode="after")
    def _source(self):
        if self.dataset is not None and self.synthetic is not None:
            raise ValueError("give either 'dataset' or 'synthetic', not both")
        return self

    @property
    def seed(self) -> int:
        return self.experiment.seed


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data) -> str:
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()[:16]


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a YAML/JSON config file and apply flag overrides (dotted keys)."""
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: top level must be a mapping")
    for key, value in (overrides or {}).items():
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return RunConfig.model_validate(data)
