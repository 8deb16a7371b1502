"""Tiny semantic segmenter used to score label consistency of edits.

Scenes in this project are color-coded, so a small encoder-decoder reaches
high pixel accuracy within a few hundred steps on one CPU core.  The encoder
doubles as an alternative FID embedder (semantics-aware features instead of
random projections).
"""
from __future__ import annotations

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..data import SceneSpec, synth_scene
from .fid import register_embedder


class SegmenterEncoder(nn.Module):
    def __init__(self, base: int = 24):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, base, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(base, base * 2, 3, stride=2, padding=1), nn.ReLU(),
        )
        self.dim = base * 2

    def forward(self, x):
        return self.net(x)


class TinySegmenter(nn.Module):
    """3xHxW image in [-1,1] -> per-pixel class logits.

    A full-resolution color branch joins the upsampled encoder features so
    class boundaries are not quantized to the encoder's stride-4 grid.
    """

    def __init__(self, num_classes: int, base: int = 24):
        super().__init__()
        self.num_classes = num_classes
        self.encoder = SegmenterEncoder(base)
        self.decoder = nn.Sequential(
            nn.Conv2d(base * 2, base, 3, padding=1), nn.ReLU(),
        )
        self.local = nn.Sequential(
            nn.Conv2d(3, base, 3, padding=1), nn.ReLU(),
        )
        self.head = nn.Conv2d(base * 2, num_classes, 3, padding=1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        h, w = images.shape[2:]
        coarse = self.decoder(self.encoder(images))
        coarse = F.interpolate(coarse, size=(h, w), mode="nearest")
        fine = self.local(images)
        return self.head(torch.cat([coarse, fine], dim=1))

    @torch.no_grad()
    def predict(self, images: np.ndarray) -> np.ndarray:
        """Nx3xHxW -> NxHxW int64 class map."""
        self.eval()
        x = torch.from_numpy(np.ascontiguousarray(images)).float()
        return self.forward(x).argmax(dim=1).numpy()


def _scene_batch(spec: SceneSpec, rng, batch_size: int):
    images, labels = [], []
    for _ in range(batch_size):
        scene = synth_scene(spec, rng)
        images.append(scene.image)
        labels.append(scene.labels.pixels)
    return (torch.from_numpy(np.stack(images)).float(),
            torch.from_numpy(np.stack(labels).astype(np.int64)))


def train_segmenter(spec: SceneSpec, steps: int = 300, batch_size: int = 8,
                    lr: float = 2e-3, seed: int = 0) -> TinySegmenter:
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    model = TinySegmenter(spec.num_classes)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    model.train()
    for _ in range(steps):
        images, labels = _scene_batch(spec, rng, batch_size)
        loss = F.cross_entropy(model(images), labels)
        opt.zero_grad()
        loss.backward()
        opt.step()
    model.eval()
    return model


def pixel_accuracy_on_scenes(model: TinySegmenter, spec: SceneSpec,
                             n_scenes: int = 16, seed: int = 12345) -> float:
    """Held-out accuracy; seed is disjoint from training seeds by convention."""
    rng = np.random.default_rng(seed)
    correct = total = 0
    for _ in range(n_scenes):
        scene = synth_scene(spec, rng)
        pred = model.predict(scene.image[None])[0]
        correct += int((pred == scene.labels.pixels).sum())
        total += pred.size
    return correct / total


class _SegmenterEmbedder:
    """Adapter: pooled encoder features as a FID embedding."""

    def __init__(self, model: TinySegmenter):
        self._enc = model.encoder
        self.dim = model.encoder.dim

    @torch.no_grad()
    def __call__(self, images: torch.Tensor) -> torch.Tensor:
        return self._enc(images).mean(dim=(2, 3))


def segmenter_embedder(model: TinySegmenter) -> _SegmenterEmbedder:
    return _SegmenterEmbedder(model)


register_embedder("segmenter", lambda model: segmenter_embedder(model))
