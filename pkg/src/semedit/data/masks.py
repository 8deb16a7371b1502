"""Mask samplers for the three edit flavours.

Free-form masks mix two branches: with probability ``p_box_strokes`` (default
0.7) a random box plus random-walk brush strokes, otherwise all pixels of one
class present in the scene ("class drop").  Addition masks are instance
bounding boxes; removal masks are rectangles rejection-sampled to overlap
background support.
"""
from __future__ import annotations

import cv2
import numpy as np

from ..errors import SamplingError
from .types import EditMask, InstanceMap, LabelMap

P_BOX_STROKES = 0.7
REMOVAL_ATTEMPT_CAP = 100


def _random_box(h, w, rng: np.random.Generator) -> np.ndarray:
    """Axis-aligned box covering roughly 4-25% of the canvas."""
    bh = int(rng.integers(h // 5, h // 2 + 1))
    bw = int(rng.integers(w // 5, w // 2 + 1))
    y0 = int(rng.integers(0, h - bh + 1))
    x0 = int(rng.integers(0, w - bw + 1))
    m = np.zeros((h, w), dtype=np.uint8)
    m[y0 : y0 + bh, x0 : x0 + bw] = 1
    return m


def _random_strokes(h, w, rng: np.random.Generator) -> np.ndarray:
    """Brush strokes drawn as a random-walk polyline (cv2.line segments)."""
    m = np.zeros((h, w), dtype=np.uint8)
    n_strokes = int(rng.integers(1, 4))
    # stroke geometry scales linearly with canvas size (reference: 64px)
    scale = max(h, w) / 64.0
    for _ in range(n_strokes):
        n_vertices = int(rng.integers(4, 13))
        width = max(1, int(round(int(rng.integers(2, 9)) * scale)))
        step = max(4, int(12 * scale))
        y = int(rng.integers(0, h))
        x = int(rng.integers(0, w))
        angle = rng.uniform(0, 2 * np.pi)
        for _ in range(n_vertices - 1):
            angle += rng.uniform(-np.pi / 2, np.pi / 2)
            ny = int(np.clip(y + step * np.sin(angle), 0, h - 1))
            nx = int(np.clip(x + step * np.cos(angle), 0, w - 1))
            cv2.line(m, (x, y), (nx, ny), color=1, thickness=width)
            y, x = ny, nx
    return m


def sample_freeform_mask(
    labels: LabelMap, rng: np.random.Generator, p_box_strokes: float = P_BOX_STROKES
) -> EditMask:
    h, w = labels.shape
    if rng.random() < p_box_strokes:
        m = _random_box(h, w, rng) | _random_strokes(h, w, rng)
        branch = "box_strokes"
    else:
        cls = int(rng.choice(labels.classes_present()))
        m = (labels.pixels == cls).astype(np.uint8)
        branch = "class_drop"
    return EditMask(m.astype(np.float32), meta={"branch": branch})


def instance_bbox(instances: InstanceMap, instance_id: int):
    """(y0, x0, y1, x1) tight bounds, end-exclusive."""
    ys, xs = np.nonzero(instances.pixels == instance_id)
    if ys.size == 0:
        raise SamplingError(f"instance {instance_id} has no pixels")
    return int(ys.min()), int(xs.min()), int(ys.max()) + 1, int(xs.max()) + 1


def sample_bbox_addition(
    instances: InstanceMap, rng: np.random.Generator, margin: int = 0
) -> tuple[EditMask, int]:
    """Bounding-box mask around one random object; returns (mask, its class)."""
    ids = instances.ids()
    if not ids:
        raise SamplingError("scene has no object instances to target")
    iid = int(rng.choice(ids))
    y0, x0, y1, x1 = instance_bbox(instances, iid)
    h, w = instances.pixels.shape
    y0, x0 = max(0, y0 - margin), max(0, x0 - margin)
    y1, x1 = min(h, y1 + margin), min(w, x1 + margin)
    m = np.zeros((h, w), dtype=np.float32)
    m[y0:y1, x0:x1] = 1.0
    mask = EditMask(m, meta={"branch": "bbox", "instance_id": iid})
    return mask, instances.instance_classes[iid]


def sample_replace_outline(
    instances: InstanceMap, rng: np.random.Generator
) -> tuple[EditMask, int]:
    """Exact silhouette of one random object; returns (mask, current class).

    Replacement edits keep an object's outline and swap its class, so the
    mask is the instance's pixel set rather than a box.
    """
    ids = instances.ids()
    if not ids:
        raise SamplingError("scene has no object instances to target")
    iid = int(rng.choice(ids))
    m = (instances.pixels == iid).astype(np.float32)
    mask = EditMask(m, meta={"branch": "outline", "instance_id": iid})
    return mask, instances.instance_classes[iid]


def sample_removal_region(
    labels: LabelMap,
    background_classes,
    rng: np.random.Generator,
    max_attempts: int = REMOVAL_ATTEMPT_CAP,
) -> EditMask:
    """Rectangle guaranteed to contain at least one background-support pixel.

    Background support is where in-filled content can plausibly continue from;
    rectangles that miss it entirely are rejected and resampled.
    """
    h, w = labels.shape
    support = np.isin(labels.pixels, list(background_classes))
    if not support.any():
        raise SamplingError("no background support anywhere in the scene")
    for _ in range(max_attempts):
        m = _random_box(h, w, rng).astype(bool)
        if (m & support).any():
            return EditMask(m.astype(np.float32), meta={"branch": "removal"})
    raise SamplingError(f"no removal rectangle hit background support in {max_attempts} attempts")
