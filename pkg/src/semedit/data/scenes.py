"""Synthetic scene generation.

Scenes are built from horizontal textured background bands plus a handful of
flat-colored geometric objects (circles, rectangles, triangles).  Every object
gets a unique instance id so removal/addition samplers can target it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PlacementError
from .types import InstanceMap, LabelMap, SceneSpec

# Fixed per-class base colors (RGB in [0,1]); perturbed per-scene for variety.
_CLASS_COLORS = np.array(
    [
        [0.35, 0.32, 0.30],  # ground-ish
        [0.45, 0.45, 0.50],  # road-ish
        [0.55, 0.70, 0.90],  # sky-ish
        [0.30, 0.55, 0.30],  # vegetation-ish
        [0.85, 0.25, 0.20],
        [0.20, 0.35, 0.80],
        [0.90, 0.80, 0.20],
        [0.60, 0.25, 0.65],
        [0.90, 0.45, 0.10],
        [0.15, 0.70, 0.65],
    ],
    dtype=np.float32,
)


@dataclass
class Scene:
    image: np.ndarray  # 3xHxW float32 in [-1, 1]
    labels: LabelMap
    instances: InstanceMap


def class_color(cls: int) -> np.ndarray:
    return _CLASS_COLORS[cls % len(_CLASS_COLORS)]


def _band_edges(height: int, bands: int, rng: np.random.Generator) -> np.ndarray:
    # Random interior cut points; every band keeps at least 2 rows.
    cuts = [0, height]
    for _ in range(bands - 1):
        lo, hi = cuts[0] + 2, height - 2
        cuts.append(int(rng.integers(lo, hi)))
    return np.array(sorted(cuts))


def _texture(shape, base, rng: np.random.Generator) -> np.ndarray:
    """Base color + low-amplitude noise, clipped to [0, 1]."""
    jitter = rng.normal(0.0, 0.03, size=(1,) + tuple(shape)).astype(np.float32)
    out = base.reshape(3, 1, 1) + jitter
    return np.clip(out, 0.0, 1.0)


def _draw_shape(kind, cy, cx, size, h, w):
    """Boolean HxW occupancy for one object."""
    yy, xx = np.mgrid[0:h, 0:w]
    if kind == 0:  # circle
        return (yy - cy) ** 2 + (xx - cx) ** 2 <= (size / 2) ** 2
    if kind == 1:  # square
        half = size // 2
        return (np.abs(yy - cy) <= half) & (np.abs(xx - cx) <= half)
    # upward triangle: |dx| shrinks linearly with height above the base
    half = size // 2
    dy = yy - (cy - half)
    return (dy >= 0) & (dy <= size) & (np.abs(xx - cx) <= dy / 2)


def synth_scene(spec: SceneSpec, rng: np.random.Generator) -> Scene:
    """Render one scene; raises PlacementError when objects can't fit."""
    h, w = spec.height, spec.width
    image = np.zeros((3, h, w), dtype=np.float32)
    labels = np.zeros((h, w), dtype=np.int32)

    bg = list(spec.background_classes)
    rng.shuffle(bg)
    n_bands = len(bg)
    edges = _band_edges(h, n_bands, rng)
    for i, cls in enumerate(bg):
        y0, y1 = edges[i], edges[i + 1]
        base = class_color(cls) * (1.0 + rng.uniform(-0.1, 0.1))
        image[:, y0:y1, :] = _texture((y1 - y0, w), np.clip(base, 0, 1), rng)
        labels[y0:y1, :] = cls

    inst = np.zeros((h, w), dtype=np.int32)
    inst_classes: dict[int, int] = {}
    n_obj = int(rng.integers(spec.object_count_range[0], spec.object_count_range[1] + 1))
    next_id = 1
    for _ in range(n_obj):
        placed = False
        for _attempt in range(spec.max_placement_attempts):
            size = int(rng.integers(spec.object_size_range[0], spec.object_size_range[1] + 1))
            margin = size // 2 + 1
            if h - margin <= margin or w - margin <= margin:
                continue
            cy = int(rng.integers(margin, h - margin))
            cx = int(rng.integers(margin, w - margin))
            kind = int(rng.integers(0, 3))
            occ = _draw_shape(kind, cy, cx, size, h, w)
            if not occ.any() or (inst[occ] != 0).any():
                continue  # overlap with an earlier object — retry
            cls = int(rng.choice(spec.object_classes))
            color = np.clip(class_color(cls) * (1.0 + rng.uniform(-0.15, 0.15)), 0, 1)
            image[:, occ] = color.reshape(3, 1)
            labels[occ] = cls
            inst[occ] = next_id
            inst_classes[next_id] = cls
            next_id += 1
            placed = True
            break
        if not placed:
            raise PlacementError(
                f"could not place object {next_id} after {spec.max_placement_attempts} attempts"
            )

    return Scene(
        image=image * 2.0 - 1.0,
        labels=LabelMap(labels, spec.num_classes),
        instances=InstanceMap(inst, frozenset(spec.object_classes), inst_classes),
    )


def one_hot(labels: LabelMap) -> np.ndarray:
    """CxHxW float32 one-hot planes."""
    c = labels.num_classes
    planes = np.zeros((c,) + labels.shape, dtype=np.float32)
    h_idx, w_idx = np.indices(labels.shape)
    planes[labels.pixels, h_idx, w_idx] = 1.0
    return planes
