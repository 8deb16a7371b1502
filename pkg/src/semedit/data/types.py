"""Core value types for scenes, masks and edit samples.

Images are float32 arrays of shape 3xHxW with values in [-1, 1].
Label maps are integer arrays of shape HxW with values in [0, C).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EDIT_MODES = ("freeform", "addition", "removal", "replace")
SEMANTICS_SCOPES = ("full", "bbox")

MIN_CANVAS = 8


@dataclass
class LabelMap:
    """Per-pixel class indices over a fixed class count."""

    pixels: np.ndarray  # HxW int
    num_classes: int

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2:
            raise ValueError(f"label map must be HxW, got shape {self.pixels.shape}")
        h, w = self.pixels.shape
        if h < MIN_CANVAS or w < MIN_CANVAS:
            raise ValueError(f"label map smaller than {MIN_CANVAS}px: {h}x{w}")
        if self.num_classes <= 0:
            raise ValueError("num_classes must be positive")
        if self.pixels.min() < 0 or self.pixels.max() >= self.num_classes:
            raise ValueError(
                f"label values must lie in [0, {self.num_classes}), "
                f"got range [{self.pixels.min()}, {self.pixels.max()}]"
            )
        self.pixels = self.pixels.astype(np.int32, copy=False)

    @property
    def shape(self):
        return self.pixels.shape

    def classes_present(self) -> np.ndarray:
        return np.unique(self.pixels)


@dataclass
class SemanticLayout:
    """One-hot encoding of a LabelMap, shape CxHxW."""

    planes: np.ndarray

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float32)
        if self.planes.ndim != 3:
            raise ValueError(f"layout must be CxHxW, got shape {self.planes.shape}")
        sums = self.planes.sum(axis=0)
        if not np.array_equal(sums, np.ones_like(sums)):
            raise ValueError("each pixel column must one-hot sum to exactly 1")
        if not np.isin(self.planes, (0.0, 1.0)).all():
            raise ValueError("layout values must be 0 or 1")

    @property
    def num_classes(self) -> int:
        return self.planes.shape[0]

    def argmax_labels(self) -> np.ndarray:
        return self.planes.argmax(axis=0).astype(np.int32)


@dataclass
class EditMask:
    """Binary mask of pixels to synthesize, shape 1xHxW. 1 = generate."""

    mask: np.ndarray
    meta: dict = field(default_factory=dict)  # sampler provenance (branch, instance id, ...)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.float32)
        if self.mask.ndim == 2:
            self.mask = self.mask[None]
        if self.mask.ndim != 3 or self.mask.shape[0] != 1:
            raise ValueError(f"mask must be 1xHxW, got shape {self.mask.shape}")
        if not np.isin(self.mask, (0.0, 1.0)).all():
            raise ValueError("mask values must be 0 or 1")

    @property
    def shape(self):
        return self.mask.shape[1:]

    def is_empty(self) -> bool:
        return not bool(self.mask.any())


@dataclass
class InstanceMap:
    """Per-pixel instance ids (0 = background) with each id's class."""

    pixels: np.ndarray  # HxW int
    foreground_classes: frozenset
    instance_classes: dict  # id -> class index

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels).astype(np.int32, copy=False)
        self.foreground_classes = frozenset(int(c) for c in self.foreground_classes)
        ids = set(int(i) for i in np.unique(self.pixels)) - {0}
        if ids != set(self.instance_classes):
            raise ValueError(
                f"instance ids in pixels {sorted(ids)} do not match "
                f"instance_classes keys {sorted(self.instance_classes)}"
            )
        for iid, cls in self.instance_classes.items():
            if int(cls) not in self.foreground_classes:
                raise ValueError(f"instance {iid} has non-foreground class {cls}")

    def ids(self) -> list:
        return sorted(self.instance_classes)


@dataclass
class EditSample:
    """One training/inference example: real image, masked image, mask, semantics.

    `semantics` is a CxHxW one-hot array; under bbox scope it is zeroed
    outside the mask, so columns there sum to 0 rather than 1.
    """

    image_real: np.ndarray  # 3xHxW in [-1, 1]
    image_masked: np.ndarray  # 3xHxW, zeroed inside mask
    mask: EditMask
    semantics: np.ndarray  # CxHxW
    mode: str
    semantics_scope: str = "full"

    def __post_init__(self):
        self.image_real = np.asarray(self.image_real, dtype=np.float32)
        self.image_masked = np.asarray(self.image_masked, dtype=np.float32)
        self.semantics = np.asarray(self.semantics, dtype=np.float32)
        if self.mode not in EDIT_MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {EDIT_MODES}")
        if self.semantics_scope not in SEMANTICS_SCOPES:
            raise ValueError(f"unknown scope {self.semantics_scope!r}")
        h, w = self.mask.shape
        for name, arr, ch in (
            ("image_real", self.image_real, 3),
            ("image_masked", self.image_masked, 3),
        ):
            if arr.shape != (ch, h, w):
                raise ValueError(f"{name} shape {arr.shape} != ({ch}, {h}, {w})")
        if self.semantics.ndim != 3 or self.semantics.shape[1:] != (h, w):
            raise ValueError(f"semantics shape {self.semantics.shape} incompatible with {h}x{w}")
        keep = 1.0 - self.mask.mask
        if not np.array_equal(self.image_masked, self.image_real * keep):
            raise ValueError("image_masked must equal image_real * (1 - mask)")
        if self.semantics_scope == "bbox":
            outside = self.semantics * keep
            if outside.any():
                raise ValueError("bbox scope requires semantics to be zero outside the mask")

    @property
    def num_classes(self) -> int:
        return self.semantics.shape[0]


@dataclass
class SceneSpec:
    """Recipe for one synthetic scene."""

    height: int = 64
    width: int = 64
    background_classes: tuple = (0, 1, 2, 3)
    object_classes: tuple = (4, 5, 6, 7)
    num_classes: int = 8
    object_count_range: tuple = (1, 4)
    object_size_range: tuple = (10, 24)  # px, at 64px canvas
    max_placement_attempts: int = 50

    def __post_init__(self):
        if self.height < MIN_CANVAS or self.width < MIN_CANVAS:
            raise ValueError("canvas too small")
        bg, fg = set(self.background_classes), set(self.object_classes)
        if bg & fg:
            raise ValueError(f"class palettes overlap: {sorted(bg & fg)}")
        if len(bg) < 3 or len(fg) < 3:
            raise ValueError("need at least 3 background and 3 object classes")
        if max(bg | fg) >= self.num_classes:
            raise ValueError("palette class index out of range")
        lo, hi = self.object_count_range
        if not (0 <= lo <= hi):
            raise ValueError("bad object count range")
