"""One configuration object for the whole pipeline.

``PipelineConfig`` bundles the per-stage settings (spectrogram, cepstral
features, voicing, segmentation, network architecture, training, SVM)
plus the cross-validation fold count and the master seed.  JSON files
may specify any subset of sections and keys; everything omitted keeps
its default, so a config file containing only
``{"train": {"epochs": 5}}`` is valid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .dsp.cepstral import MfccConfig
from .dsp.spectral import SpectrogramConfig
from .dsp.voicing import VoicingConfig
from .models.cnn import CnnArchitecture, TrainConfig
from .models.svm import SvmConfig
from .segment import SegmentationConfig


@dataclass(frozen=True)
class PipelineConfig:
    spectrogram: SpectrogramConfig = field(default_factory=SpectrogramConfig)
    mfcc: MfccConfig = field(default_factory=MfccConfig)
    voicing: VoicingConfig = field(default_factory=VoicingConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    architecture: CnnArchitecture = field(default_factory=CnnArchitecture)
    train: TrainConfig = field(default_factory=TrainConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    cv_folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.cv_folds < 2:
            raise ValueError(f"cv_folds must be at least 2, got {self.cv_folds}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "architecture":
                out[f.name] = value.to_dict()
            elif hasattr(value, "__dataclass_fields__"):
                out[f.name] = asdict(value)
            else:
                out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        """Build from a possibly partial dict, merging over defaults."""
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, value in data.items():
            if name in ("cv_folds", "seed"):
                kwargs[name] = value
                continue
            if not isinstance(value, dict):
                raise ValueError(f"section {name!r} must be a mapping")
            if name == "architecture":
                base = CnnArchitecture().to_dict()
                extra = set(value) - set(base)
                if extra:
                    raise ValueError(
                        f"unknown keys in section {name!r}: {sorted(extra)}")
                kwargs[name] = CnnArchitecture.from_dict({**base, **value})
                continue
            sub_cls = type(getattr(cls(), name))
            base = asdict(getattr(cls(), name))
            extra = set(value) - set(base)
            if extra:
                raise ValueError(
                    f"unknown keys in section {name!r}: {sorted(extra)}")
            kwargs[name] = sub_cls(**{**base, **value})
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config file {path} is not valid JSON: "
                                 f"{exc}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)
