"""Frechet distance between image-embedding distributions.

The distance is computed between two Gaussians fitted to embeddings:

    d^2 = |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2})

The matrix square-root trace is evaluated through the eigenvalues of the
product Sa @ Sb (clipped at zero: the product of two PSD matrices has real
nonnegative spectrum up to roundoff).  Embedders are pluggable through a
registry; the default is a fixed-seed random convolutional feature map,
which is cheap and stable enough to rank distributions on synthetic scenes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np
import torch
from torch import nn


@dataclass
class GaussianStats:
    mean: np.ndarray   # (D,)
    cov: np.ndarray    # (D, D)
    count: int

    def __post_init__(self):
        if self.mean.ndim != 1:
            raise ValueError("mean must be 1-D")
        if self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("cov shape does not match mean")
        if self.count < 2:
            raise ValueError("need at least 2 samples for a covariance")
        if not np.allclose(self.cov, self.cov.T, atol=1e-8):
            raise ValueError("cov must be symmetric")


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    if a.mean.size != b.mean.size:
        raise ValueError("stats dimensions differ")
    for s in (a, b):
        if not (np.isfinite(s.mean).all() and np.isfinite(s.cov).all()):
            raise ValueError("non-finite statistics")
    diff = a.mean - b.mean
    prod = a.cov @ b.cov
    # Eigenvalues of the PSD-product are real >= 0 in exact arithmetic;
    # roundoff can leave tiny negative/imaginary parts, which we clip.
    eigvals = np.linalg.eigvals(prod)
    sqrt_trace = np.sum(np.sqrt(np.clip(eigvals.real, 0.0, None)))
    d2 = diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * sqrt_trace
    return float(max(d2, 0.0))


class RandomConvEmbedder(nn.Module):
    """Frozen random conv stack: 3xHxW image -> feature vector.

    Weights are drawn from a fixed-seed generator so embeddings are
    reproducible across processes; global-average-pooled channels of the
    last stage form the embedding.
    """

    def __init__(self, seed: int = 0, channels: tuple = (16, 32, 64)):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        prev = 3
        for ch in channels:
            conv = nn.Conv2d(prev, ch, kernel_size=3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * 0.2)
                conv.bias.zero_()
            layers += [conv, nn.LeakyReLU(0.2)]
            prev = ch
        self.net = nn.Sequential(*layers)
        self.dim = channels[-1]
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    @torch.no_grad()
    def forward(self, images: torch.Tensor) -> torch.Tensor:
        feats = self.net(images)
        return feats.mean(dim=(2, 3))


EmbedderFactory = Callable[..., Callable[[torch.Tensor], torch.Tensor]]

_EMBEDDERS: Dict[str, EmbedderFactory] = {}


def register_embedder(name: str, factory: EmbedderFactory) -> None:
    _EMBEDDERS[name] = factory


def get_embedder(name: str = "random_conv", **kwargs):
    if name not in _EMBEDDERS:
        raise KeyError(f"unknown embedder {name!r}; have {sorted(_EMBEDDERS)}")
    return _EMBEDDERS[name](**kwargs)


register_embedder("random_conv", RandomConvEmbedder)


def embed_images(images: np.ndarray, embedder=None, batch_size: int = 32) -> GaussianStats:
    """Fit a Gaussian to embeddings of Nx3xHxW images in [-1, 1]."""
    if images.ndim != 4 or images.shape[0] < 2:
        raise ValueError("need at least 2 images shaped Nx3xHxW")
    if embedder is None:
        embedder = get_embedder()
    chunks = []
    for i in range(0, images.shape[0], batch_size):
        batch = torch.from_numpy(np.ascontiguousarray(images[i : i + batch_size])).float()
        chunks.append(embedder(batch).numpy())
    emb = np.concatenate(chunks, axis=0).astype(np.float64)
    mean = emb.mean(axis=0)
    cov = np.cov(emb, rowvar=False)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean=mean, cov=cov, count=emb.shape[0])


def fid_between(images_a: np.ndarray, images_b: np.ndarray, embedder=None) -> float:
    return frechet_distance(embed_images(images_a, embedder),
                            embed_images(images_b, embedder))
