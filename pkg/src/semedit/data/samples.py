"""Assembling (image, mask, semantics) triples into training-ready samples."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import distance_transform_edt

from ..errors import PlacementError, SamplingError
from .masks import (
    sample_bbox_addition,
    sample_freeform_mask,
    sample_removal_region,
    sample_replace_outline,
)
from .scenes import Scene, one_hot, synth_scene
from .types import EditMask, EditSample, LabelMap, SceneSpec


def relabel_removed(labels: LabelMap, mask: EditMask, background_classes) -> LabelMap:
    """Rewrite labels under the mask to the nearest outside background label.

    Every masked pixel copies the class of its nearest pixel that is both
    outside the mask and background, so the semantic map shows continued
    background where the object used to be.
    """
    m = mask.mask[0].astype(bool)
    src = ~m & np.isin(labels.pixels, list(background_classes))
    if not src.any():
        raise SamplingError("no unmasked background pixel to continue from")
    _, (iy, ix) = distance_transform_edt(~src, return_indices=True)
    out = labels.pixels.copy()
    out[m] = labels.pixels[iy[m], ix[m]]
    return LabelMap(out, labels.num_classes)


def relabel_replaced(labels: LabelMap, mask: EditMask, new_class: int) -> LabelMap:
    """Rewrite every masked pixel to `new_class` (object swap within an outline)."""
    out = labels.pixels.copy()
    out[mask.mask[0].astype(bool)] = new_class
    return LabelMap(out, labels.num_classes)


def make_edit_sample(
    scene: Scene, mask: EditMask, mode: str, semantics_scope: str = "full",
    edited_labels: LabelMap = None, background_classes=None,
) -> EditSample:
    """Build one sample.

    Semantics come from `edited_labels` when given (removal/replace rewrite
    the masked region), otherwise from the scene's own labels.  For removal
    without explicit labels, the relabeling is derived here from
    `background_classes`.
    """
    if semantics_scope == "bbox" and mask.is_empty():
        raise ValueError("bbox scope with an empty mask leaves no semantics at all")
    if edited_labels is None:
        if mode == "removal":
            if background_classes is None:
                raise ValueError("removal needs edited_labels or background_classes")
            edited_labels = relabel_removed(scene.labels, mask, background_classes)
        else:
            edited_labels = scene.labels
    sem = one_hot(edited_labels)
    if semantics_scope == "bbox":
        sem = sem * mask.mask  # broadcast 1xHxW over C planes
    keep = 1.0 - mask.mask
    return EditSample(
        image_real=scene.image,
        image_masked=scene.image * keep,
        mask=mask,
        semantics=sem,
        mode=mode,
        semantics_scope=semantics_scope,
    )


def sample_for_mode(
    scene: Scene, spec: SceneSpec, mode: str, rng: np.random.Generator,
    semantics_scope: str = "full", bbox_margin: int = 0,
) -> EditSample:
    edited = None
    if mode == "freeform":
        mask = sample_freeform_mask(scene.labels, rng)
    elif mode == "addition":
        mask, _ = sample_bbox_addition(scene.instances, rng, margin=bbox_margin)
    elif mode == "removal":
        mask = sample_removal_region(scene.labels, spec.background_classes, rng)
    elif mode == "replace":
        mask, old_class = sample_replace_outline(scene.instances, rng)
        others = [c for c in spec.object_classes if c != old_class]
        if not others:
            raise SamplingError("no alternative class to replace with")
        edited = relabel_replaced(scene.labels, mask, int(rng.choice(others)))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return make_edit_sample(
        scene, mask, mode, semantics_scope,
        edited_labels=edited, background_classes=spec.background_classes,
    )


def batch_arrays(samples: list) -> dict:
    """Stack samples into N-first arrays keyed by tensor role."""
    return {
        "image_real": np.stack([s.image_real for s in samples]),
        "image_masked": np.stack([s.image_masked for s in samples]),
        "mask": np.stack([s.mask.mask for s in samples]),
        "semantics": np.stack([s.semantics for s in samples]),
    }


def synth_batch(
    spec: SceneSpec, batch_size: int, rng: np.random.Generator,
    mode: str = "freeform", semantics_scope: str = "full",
) -> dict:
    """Fresh scenes + masks, stacked; the workhorse for training and tests."""
    samples = []
    failures = 0
    while len(samples) < batch_size:
        try:
            scene = synth_scene(spec, rng)
            samples.append(sample_for_mode(scene, spec, mode, rng, semantics_scope))
        except (SamplingError, PlacementError):
            # scene unusable for this mode (e.g. no objects) -- draw another
            failures += 1
            if failures > 50 * batch_size:
                raise
    return batch_arrays(samples)
