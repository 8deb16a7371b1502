"""Adversarial, feature-matching, and perceptual losses.

Score sets are lists of per-scale patch score maps; feature sets are lists
(per scale) of lists (per layer) of activation tensors, as produced by the
discriminators in `models`.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn


@dataclass
class LossWeights:
    lambda_percept: float = 10.0
    lambda_feat: float = 10.0

    def __post_init__(self):
        if self.lambda_percept < 0 or self.lambda_feat < 0:
            raise ValueError("loss weights must be nonnegative")


def hinge_loss_d(real_scores: list, fake_scores: list) -> torch.Tensor:
    """Margin loss pushing real patch scores above 1 and fake below -1."""
    if len(real_scores) != len(fake_scores):
        raise ValueError(
            f"scale count mismatch: {len(real_scores)} real vs {len(fake_scores)} fake"
        )
    total = 0.0
    for real, fake in zip(real_scores, fake_scores):
        total = total + F.relu(1.0 - real).mean() + F.relu(1.0 + fake).mean()
    return total


def hinge_loss_g(fake_scores: list) -> torch.Tensor:
    """Generator wants fake patch scores high: minimize their negated sum."""
    total = 0.0
    for fake in fake_scores:
        total = total - fake.mean()
    return total


def feature_matching_loss(real_features: list, fake_features: list,
                          scale_reduction: str = "mean") -> torch.Tensor:
    """Mean absolute difference between matched feature maps.

    Real-side features are treated as constants — this loss trains the
    generator, not the discriminator, so no gradient flows to the real pass.
    Per scale the layer terms are summed; across scales the default is the
    mean (`scale_reduction="sum"` adds them instead).
    """
    if len(real_features) != len(fake_features):
        raise ValueError("scale count mismatch between feature sets")
    if scale_reduction not in ("mean", "sum"):
        raise ValueError(f"unknown scale_reduction {scale_reduction!r}")
    per_scale = []
    for real_layers, fake_layers in zip(real_features, fake_features):
        if len(real_layers) != len(fake_layers):
            raise ValueError(
                f"layer count mismatch: {len(real_layers)} vs {len(fake_layers)}"
            )
        acc = 0.0
        for r, f in zip(real_layers, fake_layers):
            acc = acc + (r.detach() - f).abs().mean()
        per_scale.append(acc)
    total = sum(per_scale)
    if scale_reduction == "mean":
        total = total / len(per_scale)
    return total


class FeatureExtractor(nn.Module):
    """Fixed random conv stack standing in for a pretrained perceptual net.

    Weights are drawn from a seeded generator and frozen; two constructions
    with the same seed are identical, so perceptual distances are stable
    across runs without downloading anything.
    """

    def __init__(self, seed: int = 0, num_layers: int = 4, base_channels: int = 32,
                 layer_weights: list = None):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        convs = []
        cur = 3
        ch = base_channels
        for _ in range(num_layers):
            conv = nn.Conv2d(cur, ch, 3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.1)
                conv.bias.copy_(torch.randn(conv.bias.shape, generator=gen) * 0.01)
            convs.append(conv)
            cur, ch = ch, ch * 2
        self.convs = nn.ModuleList(convs)
        self.layer_weights = (
            list(layer_weights) if layer_weights is not None else [1.0] * num_layers
        )
        if len(self.layer_weights) != num_layers:
            raise ValueError("need one weight per layer")
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> list:
        feats = []
        for conv in self.convs:
            x = F.relu(conv(x))
            feats.append(x)
        return feats


def perceptual_loss(image_out: torch.Tensor, image_real: torch.Tensor,
                    extractor: FeatureExtractor) -> torch.Tensor:
    """Weighted per-layer MAD between frozen-extractor features of the images."""
    if image_out.shape != image_real.shape:
        raise ValueError("image shapes differ")
    feats_out = extractor(image_out)
    feats_real = extractor(image_real)
    total = 0.0
    for w, fo, fr in zip(extractor.layer_weights, feats_out, feats_real):
        total = total + w * (fo - fr.detach()).abs().mean()
    if isinstance(total, float):  # all weights zero with no graph involvement
        total = torch.tensor(total)
    return total


def generator_total_loss(l_perc, l_fm, fake_scores: list, weights: LossWeights):
    return (
        weights.lambda_percept * l_perc
        + weights.lambda_feat * l_fm
        + hinge_loss_g(fake_scores)
    )
