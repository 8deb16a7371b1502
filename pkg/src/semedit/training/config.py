"""Training configuration, serialized as JSON (field names mirror the file)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..data.types import SceneSpec
from ..losses import LossWeights


@dataclass
class TrainConfig:
    # model
    num_classes: int = 8
    image_size: int = 64
    merge: str = "sum_pool_scale"
    head_kernel: int = 4
    use_spectral_norm: bool = True
    discriminator: str = "two_stream"  # or "patchgan" (ablation baseline)

    # optimization: generator and discriminator run on different rates
    lr_gen: float = 1e-4
    lr_disc: float = 4e-4
    adam_beta1: float = 0.0
    adam_beta2: float = 0.999
    epochs: int = 200
    decay_start: int = 100
    batch_size: int = 8
    steps_per_epoch: int = 10  # synthetic data is infinite; an epoch is a step budget
    grad_clip: float = 0.0  # 0 disables
    seed: int = 0

    # losses
    lambda_percept: float = 10.0
    lambda_feat: float = 10.0
    fm_scale_reduction: str = "mean"
    extractor_seed: int = 0

    # data
    semantics_scope: str = "full"
    mode_mix: dict = field(default_factory=lambda: {"freeform": 1.0})
    background_classes: list = None
    object_classes: list = None

    # artifacts
    checkpoint_every_epochs: int = 0  # 0 = final checkpoint only

    def __post_init__(self):
        if self.decay_start > self.epochs:
            raise ValueError("decay_start must not exceed epochs")
        if self.lr_gen <= 0 or self.lr_disc <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size < 1 or self.steps_per_epoch < 1:
            raise ValueError("batch_size and steps_per_epoch must be >= 1")
        if self.image_size % 4:
            raise ValueError("image_size must be divisible by 4")
        total = sum(self.mode_mix.values())
        if total <= 0 or any(v < 0 for v in self.mode_mix.values()):
            raise ValueError("mode_mix must be a nonnegative distribution")
        LossWeights(self.lambda_percept, self.lambda_feat)  # validates sign

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_percept, self.lambda_feat)

    def scene_spec(self) -> SceneSpec:
        kw = {"height": self.image_size, "width": self.image_size,
              "num_classes": self.num_classes}
        if self.background_classes is not None:
            kw["background_classes"] = tuple(self.background_classes)
        if self.object_classes is not None:
            kw["object_classes"] = tuple(self.object_classes)
        return SceneSpec(**kw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_json(Path(path).read_text())

    def save(self, path):
        Path(path).write_text(self.to_json())
