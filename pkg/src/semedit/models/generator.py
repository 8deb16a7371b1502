"""Mask-conditioned generator.

Input is the channel-concatenation [masked image | mask | semantics]
(3 + 1 + C channels).  A strided encoder brings the canvas to 1/4 resolution,
dilated residual blocks grow the receptive field without further downsampling,
spatially-adaptive (semantic-map-conditioned) normalization blocks inject the
layout, and two nearest-neighbor upsamples restore full resolution.  Output is
tanh-bounded RGB; callers composite it with the real image so pixels outside
the mask pass through untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

LEAKY_SLOPE = 0.02
SPADE_HIDDEN = 128
NORM_EPS = 1e-5


@dataclass(frozen=True)
class Row:
    """One schedule entry; `out_channels` is None for resolution-only rows."""

    kind: str  # conv | resblock | spade_resblock | upsample
    out_channels: int | None = None
    kernel: int | None = None
    stride: int = 1
    dilation: int = 1
    activation: str | None = None  # relu | lrelu | tanh


GENERATOR_SCHEDULE: tuple[Row, ...] = (
    Row("conv", 64, kernel=7, stride=1, activation="relu"),
    Row("conv", 128, kernel=3, stride=2, activation="relu"),
    Row("conv", 256, kernel=3, stride=2, activation="relu"),
    Row("resblock", 256, kernel=3, dilation=1, activation="relu"),
    Row("resblock", 256, kernel=3, dilation=2, activation="relu"),
    Row("resblock", 256, kernel=3, dilation=2, activation="relu"),
    Row("resblock", 256, kernel=3, dilation=2, activation="relu"),
    Row("spade_resblock", 256, kernel=3, dilation=2, activation="lrelu"),
    Row("spade_resblock", 256, kernel=3, dilation=2, activation="lrelu"),
    Row("spade_resblock", 256, kernel=3, dilation=2, activation="lrelu"),
    Row("spade_resblock", 256, kernel=3, dilation=2, activation="lrelu"),
    Row("spade_resblock", 256, kernel=3, dilation=1, activation="lrelu"),
    Row("upsample"),
    Row("spade_resblock", 128, kernel=3, dilation=1, activation="lrelu"),
    Row("upsample"),
    Row("spade_resblock", 64, kernel=3, dilation=1, activation="lrelu"),
    Row("conv", 3, kernel=3, stride=1, activation="tanh"),
)


def _act(name: str):
    if name == "relu":
        return nn.ReLU()
    if name == "lrelu":
        return nn.LeakyReLU(LEAKY_SLOPE)
    raise ValueError(f"unknown activation {name!r}")


class SpadeNorm(nn.Module):
    """Normalize without affine params, then modulate from the semantic map.

    out = norm(x) * (1 + gamma(sem)) + beta(sem), with gamma/beta produced by
    a tiny shared-trunk convnet; the semantic map is nearest-resized to x.
    """

    def __init__(self, channels: int, sem_channels: int, hidden: int = SPADE_HIDDEN):
        super().__init__()
        self.norm = nn.InstanceNorm2d(channels, affine=False, eps=NORM_EPS)
        self.shared = nn.Sequential(
            nn.Conv2d(sem_channels, hidden, 3, padding=1), nn.ReLU()
        )
        self.gamma = nn.Conv2d(hidden, channels, 3, padding=1)
        self.beta = nn.Conv2d(hidden, channels, 3, padding=1)

    def forward(self, x: torch.Tensor, sem: torch.Tensor) -> torch.Tensor:
        normalized = self.norm(x)
        if sem.shape[2:] != x.shape[2:]:
            sem = F.interpolate(sem, size=x.shape[2:], mode="nearest")
        actv = self.shared(sem)
        return normalized * (1 + self.gamma(actv)) + self.beta(actv)


class ResBlock(nn.Module):
    """Pre-activation residual block; 1x1 conv on the skip when channels change."""

    def __init__(self, in_ch: int, out_ch: int, dilation: int = 1, activation: str = "relu"):
        super().__init__()
        self.norm1 = nn.InstanceNorm2d(in_ch, affine=False, eps=NORM_EPS)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=dilation, dilation=dilation)
        self.norm2 = nn.InstanceNorm2d(out_ch, affine=False, eps=NORM_EPS)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=dilation, dilation=dilation)
        self.act = _act(activation)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else None

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.conv1(self.act(self.norm1(x)))
        h = self.conv2(self.act(self.norm2(h)))
        s = x if self.skip is None else self.skip(x)
        return s + h


class SpadeResBlock(nn.Module):
    """Residual block whose norms are semantic-map-conditioned."""

    def __init__(self, in_ch: int, out_ch: int, sem_ch: int, dilation: int = 1,
                 activation: str = "lrelu"):
        super().__init__()
        self.norm1 = SpadeNorm(in_ch, sem_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=dilation, dilation=dilation)
        self.norm2 = SpadeNorm(out_ch, sem_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=dilation, dilation=dilation)
        self.act = _act(activation)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else None

    def forward(self, x: torch.Tensor, sem: torch.Tensor) -> torch.Tensor:
        h = self.conv1(self.act(self.norm1(x, sem)))
        h = self.conv2(self.act(self.norm2(h, sem)))
        s = x if self.skip is None else self.skip(x)
        return s + h


class Generator(nn.Module):
    def __init__(self, num_classes: int, schedule: tuple[Row, ...] = GENERATOR_SCHEDULE):
        super().__init__()
        self.num_classes = num_classes
        self.schedule = schedule
        in_ch = 3 + 1 + num_classes
        stages = []
        cur = in_ch
        for row in schedule:
            if row.kind == "conv":
                pad = row.kernel // 2
                block = [nn.Conv2d(cur, row.out_channels, row.kernel,
                                   stride=row.stride, padding=pad)]
                if row.activation == "tanh":
                    block.append(nn.Tanh())
                else:
                    block.append(nn.InstanceNorm2d(row.out_channels, affine=False,
                                                   eps=NORM_EPS))
                    block.append(_act(row.activation))
                stages.append(nn.Sequential(*block))
                cur = row.out_channels
            elif row.kind == "resblock":
                stages.append(ResBlock(cur, row.out_channels, row.dilation, row.activation))
                cur = row.out_channels
            elif row.kind == "spade_resblock":
                stages.append(SpadeResBlock(cur, row.out_channels, num_classes,
                                            row.dilation, row.activation))
                cur = row.out_channels
            elif row.kind == "upsample":
                stages.append(nn.UpsamplingNearest2d(scale_factor=2))
            else:
                raise ValueError(f"unknown row kind {row.kind!r}")
        self.stages = nn.ModuleList(stages)

    def forward(self, image_masked: torch.Tensor, mask: torch.Tensor,
                semantics: torch.Tensor) -> torch.Tensor:
        if semantics.shape[1] != self.num_classes:
            raise ValueError(
                f"semantics has {semantics.shape[1]} planes, model expects {self.num_classes}"
            )
        h, w = image_masked.shape[2:]
        if h % 4 or w % 4:
            # two stride-2 encoders + two x2 upsamples only invert cleanly on /4 sizes
            raise ValueError(f"spatial size must be divisible by 4, got {h}x{w}")
        x = torch.cat([image_masked, mask, semantics], dim=1)
        for stage in self.stages:
            if isinstance(stage, SpadeResBlock):
                x = stage(x, semantics)
            else:
                x = stage(x)
        return x


def composite(generated: torch.Tensor, real: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Blend: generated pixels inside the mask, real pixels (bit-exact) outside."""
    return torch.where(mask.bool(), generated, real)


def generate_edit(model: Generator, image_masked, mask, semantics, image_real=None):
    """Forward + composite in eval mode; returns the full-frame edited image."""
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            gen = model(image_masked, mask, semantics)
    finally:
        model.train(was_training)
    if image_real is None:
        image_real = image_masked
    return composite(gen, image_real, mask)
