"""Patch discriminators: a two-stream design plus a single-stream baseline.

Each scale runs two parallel conv stacks — one over [image | mask], one over
the semantic map.  The semantic features are channel-summed into a single
plane that rescales the image features (``rgb * (1 + pooled)``), and a final
conv produces the patch score map.  Because the semantic stream never sees
the image, its features can be computed once per optimization phase and
reused across the real and fake passes; `sem_feature_cache` provides that,
with a checksum so a stale cache fails loudly instead of silently.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils import spectral_norm as apply_spectral_norm

from ..errors import CacheError

LEAKY_SLOPE = 0.02
MERGE_MODES = ("sum_pool_scale", "concat", "product")

# (out_channels, kernel, stride, normed); padding is 2 on every k4 conv
STREAM_SCHEDULE = (
    (64, 4, 2, False),
    (128, 4, 2, True),
    (256, 4, 2, True),
    (512, 4, 1, True),
)
HEAD_STRIDE = 1


@dataclass
class DiscConfig:
    num_classes: int = 8
    num_scales: int = 2
    merge: str = "sum_pool_scale"
    head_kernel: int = 4  # the score conv; 3 matches the pooled-scale formula exactly
    use_spectral_norm: bool = True

    def __post_init__(self):
        if self.merge not in MERGE_MODES:
            raise ValueError(f"merge must be one of {MERGE_MODES}, got {self.merge!r}")
        if self.head_kernel not in (3, 4):
            raise ValueError("head_kernel must be 3 or 4")


def sum_global_pool(features: torch.Tensor) -> torch.Tensor:
    """Collapse channels by summation: (N,C,H,W) -> (N,1,H,W)."""
    return features.sum(dim=1, keepdim=True)


def _conv(in_ch, out_ch, kernel, stride, sn: bool):
    conv = nn.Conv2d(in_ch, out_ch, kernel, stride=stride, padding=2)
    return apply_spectral_norm(conv) if sn else conv


class PatchStream(nn.Module):
    """Four-layer strided conv stack; returns all intermediate features."""

    def __init__(self, in_channels: int, use_spectral_norm: bool = True):
        super().__init__()
        layers = []
        cur = in_channels
        for out_ch, kernel, stride, normed in STREAM_SCHEDULE:
            block = [_conv(cur, out_ch, kernel, stride, use_spectral_norm and normed)]
            if normed:
                block.append(nn.InstanceNorm2d(out_ch, affine=False))
            block.append(nn.LeakyReLU(LEAKY_SLOPE))
            layers.append(nn.Sequential(*block))
            cur = out_ch
        self.blocks = nn.ModuleList(layers)
        self.out_channels = cur

    def forward(self, x: torch.Tensor) -> list:
        feats = []
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        return feats


class TwoStreamScale(nn.Module):
    """One resolution's discriminator: image/mask stream + semantics stream."""

    def __init__(self, cfg: DiscConfig):
        super().__init__()
        self.cfg = cfg
        self.rgb_stream = PatchStream(3 + 1, cfg.use_spectral_norm)
        self.sem_stream = PatchStream(cfg.num_classes, cfg.use_spectral_norm)
        head_in = self.rgb_stream.out_channels
        if cfg.merge == "concat":
            head_in += self.sem_stream.out_channels
        pad = 2 if cfg.head_kernel == 4 else 1
        self.head = nn.Conv2d(head_in, 1, cfg.head_kernel, stride=HEAD_STRIDE, padding=pad)

    def merge(self, rgb_last: torch.Tensor, sem_last: torch.Tensor) -> torch.Tensor:
        if self.cfg.merge == "sum_pool_scale":
            return rgb_last * (1.0 + sum_global_pool(sem_last))
        if self.cfg.merge == "product":
            return rgb_last * sum_global_pool(sem_last)
        return torch.cat([rgb_last, sem_last], dim=1)

    def forward(self, rgb_in: torch.Tensor, sem_last: torch.Tensor):
        rgb_feats = self.rgb_stream(rgb_in)
        score = self.head(self.merge(rgb_feats[-1], sem_last))
        return score, rgb_feats


@dataclass
class SemCache:
    """Final semantics-stream feature per scale, keyed to the exact input."""

    features: list
    checksum: str
    with_graph: bool


@dataclass
class DiscOutput:
    scores: list  # per scale, (N,1,h,w)
    rgb_features: list = field(default_factory=list)  # per scale: list of 4 tensors


def _checksum(t: torch.Tensor) -> str:
    arr = t.detach().cpu().contiguous().numpy()
    return hashlib.sha256(arr.tobytes() + str(arr.shape).encode()).hexdigest()


def _downsample(x: torch.Tensor) -> torch.Tensor:
    return F.avg_pool2d(x, kernel_size=2, stride=2)


class TwoStreamDiscriminator(nn.Module):
    """Multi-scale two-stream patch discriminator with semantics caching.

    `counters` tracks per-stream forward evaluations so tests (and profiling)
    can confirm the semantics stream really runs once per phase while the
    image stream runs for both the real and the generated batch.
    """

    def __init__(self, cfg: DiscConfig = None, **kw):
        super().__init__()
        self.cfg = cfg or DiscConfig(**kw)
        self.scales = nn.ModuleList(TwoStreamScale(self.cfg) for _ in range(self.cfg.num_scales))
        self.counters = {"sem_evals": 0, "rgb_evals": 0}

    def reset_counters(self):
        self.counters = {"sem_evals": 0, "rgb_evals": 0}

    def compute_sem_cache(self, semantics: torch.Tensor, with_graph: bool) -> SemCache:
        checksum = _checksum(semantics)
        feats = []
        sem = semantics
        ctx = torch.enable_grad() if with_graph else torch.no_grad()
        with ctx:
            for scale in self.scales:
                feats.append(scale.sem_stream(sem)[-1])
                self.counters["sem_evals"] += 1
                sem = _downsample(sem)
        return SemCache(features=feats, checksum=checksum, with_graph=with_graph)

    def forward(self, image: torch.Tensor, mask: torch.Tensor, semantics: torch.Tensor,
                sem_cache: SemCache = None) -> DiscOutput:
        if sem_cache is None:
            sem_cache = self.compute_sem_cache(semantics, with_graph=torch.is_grad_enabled())
        elif sem_cache.checksum != _checksum(semantics):
            raise CacheError("semantics changed since the cache was built")
        rgb_in = torch.cat([image, mask], dim=1)
        scores, rgb_features = [], []
        for i, scale in enumerate(self.scales):
            score, feats = scale(rgb_in, sem_cache.features[i])
            self.counters["rgb_evals"] += 1
            scores.append(score)
            rgb_features.append(feats)
            rgb_in = _downsample(rgb_in)
        return DiscOutput(scores=scores, rgb_features=rgb_features)


class PatchDiscriminator(nn.Module):
    """Single-stream baseline: one stack over [image | mask | semantics]."""

    def __init__(self, num_classes: int, num_scales: int = 2,
                 use_spectral_norm: bool = True, head_kernel: int = 4):
        super().__init__()
        self.num_scales = num_scales
        in_ch = 3 + 1 + num_classes
        self.streams = nn.ModuleList(
            PatchStream(in_ch, use_spectral_norm) for _ in range(num_scales)
        )
        pad = 2 if head_kernel == 4 else 1
        self.heads = nn.ModuleList(
            nn.Conv2d(512, 1, head_kernel, stride=HEAD_STRIDE, padding=pad)
            for _ in range(num_scales)
        )

    def forward(self, image, mask, semantics, sem_cache=None) -> DiscOutput:
        x = torch.cat([image, mask, semantics], dim=1)
        scores, features = [], []
        for stream, head in zip(self.streams, self.heads):
            feats = stream(x)
            scores.append(head(feats[-1]))
            features.append(feats)
            x = _downsample(x)
        return DiscOutput(scores=scores, rgb_features=features)
