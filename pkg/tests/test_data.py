"""Scene generation, mask samplers, and sample assembly."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semedit.data import (
    EditMask,
    EditSample,
    InstanceMap,
    LabelMap,
    SceneSpec,
    SemanticLayout,
    make_edit_sample,
    one_hot,
    relabel_removed,
    sample_bbox_addition,
    sample_freeform_mask,
    sample_removal_region,
    sample_replace_outline,
    sample_for_mode,
    synth_batch,
    synth_scene,
)
from semedit.data.masks import instance_bbox
from semedit.errors import SamplingError

SPEC = SceneSpec()


def scene_with_objects(seed=0):
    rng = np.random.default_rng(seed)
    spec = SceneSpec(object_count_range=(2, 4))
    return synth_scene(spec, rng), spec, rng


# ---------------------------------------------------------------- types

def test_label_map_rejects_out_of_range():
    with pytest.raises(ValueError):
        LabelMap(np.full((16, 16), 9), num_classes=8)


def test_semantic_layout_rejects_two_hot():
    planes = np.zeros((3, 16, 16), dtype=np.float32)
    planes[0] = 1.0
    planes[1, 0, 0] = 1.0  # pixel (0,0) now sums to 2
    with pytest.raises(ValueError):
        SemanticLayout(planes)


def test_edit_mask_rejects_nonbinary():
    with pytest.raises(ValueError):
        EditMask(np.full((16, 16), 0.5))


def test_edit_sample_rejects_inconsistent_masked_image():
    scene, spec, rng = scene_with_objects()
    mask = sample_freeform_mask(scene.labels, rng)
    with pytest.raises(ValueError):
        EditSample(
            image_real=scene.image,
            image_masked=scene.image,  # not zeroed under the mask
            mask=mask,
            semantics=one_hot(scene.labels),
            mode="freeform",
        )


def test_scene_spec_rejects_overlapping_palettes():
    with pytest.raises(ValueError):
        SceneSpec(background_classes=(0, 1, 2), object_classes=(2, 3, 4))


# ---------------------------------------------------------------- scenes

def test_scene_shapes_and_ranges():
    scene, spec, _ = scene_with_objects()
    assert scene.image.shape == (3, spec.height, spec.width)
    assert scene.image.dtype == np.float32
    assert scene.image.min() >= -1.0 and scene.image.max() <= 1.0
    assert scene.labels.pixels.shape == (spec.height, spec.width)


def test_scene_has_background_and_objects():
    scene, spec, _ = scene_with_objects()
    present = set(scene.labels.classes_present().tolist())
    assert len(present & set(spec.background_classes)) >= 3
    assert len(present & set(spec.object_classes)) >= 1


def test_objects_get_unique_instance_ids():
    # the no-overlap invariant: every placed object keeps its own id
    for seed in range(20):
        scene, spec, _ = scene_with_objects(seed)
        ids = scene.instances.ids()
        assert ids == list(range(1, len(ids) + 1))
        for iid in ids:
            region = scene.instances.pixels == iid
            assert region.any()
            # each instance region is a single class, the recorded one
            assert set(np.unique(scene.labels.pixels[region])) == {
                scene.instances.instance_classes[iid]
            }


def test_instance_pixels_never_overlap_background_ids():
    scene, spec, _ = scene_with_objects(3)
    bg_region = scene.instances.pixels == 0
    assert np.isin(scene.labels.pixels[bg_region], list(spec.background_classes)).all()


def test_one_hot_oracle():
    # brute-force per-pixel check against the vectorized encoder
    labels = LabelMap(np.random.default_rng(1).integers(0, 5, (16, 16)), 5)
    planes = one_hot(labels)
    for y in range(16):
        for x in range(16):
            expected = np.zeros(5, dtype=np.float32)
            expected[labels.pixels[y, x]] = 1.0
            assert np.array_equal(planes[:, y, x], expected)
    SemanticLayout(planes)  # also satisfies the strict one-hot contract


def test_synth_scene_deterministic_per_seed():
    a = synth_scene(SPEC, np.random.default_rng(7))
    b = synth_scene(SPEC, np.random.default_rng(7))
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.labels.pixels, b.labels.pixels)
    assert np.array_equal(a.instances.pixels, b.instances.pixels)


# ---------------------------------------------------------------- masks

def test_freeform_branch_probability():
    """Branch split matches the configured probability.

    n=10,000 draws; a 99% binomial CI around p=0.7 is +-0.0118, so the
    acceptance band [0.68, 0.72] comfortably contains the estimate.
    """
    scene, _, _ = scene_with_objects()
    rng = np.random.default_rng(42)
    n = 10_000
    hits = sum(
        sample_freeform_mask(scene.labels, rng).meta["branch"] == "box_strokes"
        for _ in range(n)
    )
    assert 0.68 <= hits / n <= 0.72


def test_freeform_class_drop_is_exact_class_region():
    scene, _, _ = scene_with_objects()
    rng = np.random.default_rng(0)
    # draw until the class-drop branch fires
    for _ in range(200):
        mask = sample_freeform_mask(scene.labels, rng)
        if mask.meta["branch"] == "class_drop":
            region = mask.mask[0].astype(bool)
            classes = np.unique(scene.labels.pixels[region])
            assert classes.size == 1
            # and it covers *all* pixels of that class
            assert np.array_equal(region, scene.labels.pixels == classes[0])
            return
    pytest.fail("class_drop branch never sampled in 200 draws")


def test_freeform_masks_nonempty_and_binary():
    scene, _, _ = scene_with_objects()
    rng = np.random.default_rng(5)
    for _ in range(50):
        mask = sample_freeform_mask(scene.labels, rng)
        assert not mask.is_empty()
        assert set(np.unique(mask.mask)) <= {0.0, 1.0}


def test_instance_bbox_oracle():
    # place one known square and check the bbox pixel-exactly
    px = np.zeros((32, 32), dtype=np.int32)
    px[5:11, 8:20] = 1
    inst = InstanceMap(px, frozenset({4}), {1: 4})
    assert instance_bbox(inst, 1) == (5, 8, 11, 20)


def test_bbox_addition_covers_instance():
    for seed in range(10):
        scene, _, rng = scene_with_objects(seed)
        mask, target_class = sample_bbox_addition(scene.instances, rng)
        iid = mask.meta["instance_id"]
        assert target_class == scene.instances.instance_classes[iid]
        inside = mask.mask[0].astype(bool)
        assert (scene.instances.pixels == iid)[~inside].sum() == 0  # nothing escapes
        y0, x0, y1, x1 = instance_bbox(scene.instances, iid)
        assert inside[y0:y1, x0:x1].all()
        # tight: mask is exactly the bbox at margin 0
        assert inside.sum() == (y1 - y0) * (x1 - x0)


def test_bbox_addition_known_square():
    # 4x4 square with corner at (2,2) -> mask rows 2..5 x cols 2..5
    px = np.zeros((16, 16), dtype=np.int32)
    px[2:6, 2:6] = 1
    inst = InstanceMap(px, frozenset({4}), {1: 4})
    mask, cls = sample_bbox_addition(inst, np.random.default_rng(0))
    assert cls == 4
    expected = np.zeros((16, 16), dtype=np.float32)
    expected[2:6, 2:6] = 1.0
    assert np.array_equal(mask.mask[0], expected)


def test_bbox_addition_uniform_over_instances():
    # two instances: each picked with frequency in [0.45, 0.55] over 1,000 draws
    px = np.zeros((32, 32), dtype=np.int32)
    px[2:6, 2:6] = 1
    px[20:26, 20:26] = 2
    inst = InstanceMap(px, frozenset({4}), {1: 4, 2: 4})
    rng = np.random.default_rng(123)
    picks = [sample_bbox_addition(inst, rng)[0].meta["instance_id"] for _ in range(1000)]
    freq1 = picks.count(1) / 1000
    assert 0.45 <= freq1 <= 0.55


def test_bbox_addition_margin_grows_and_clips():
    px = np.zeros((32, 32), dtype=np.int32)
    px[0:4, 0:4] = 1  # corner instance so margin clips at the edge
    inst = InstanceMap(px, frozenset({4}), {1: 4})
    mask, _ = sample_bbox_addition(inst, np.random.default_rng(0), margin=3)
    inside = mask.mask[0].astype(bool)
    assert inside[0:7, 0:7].all()
    assert inside.sum() == 49


def test_bbox_addition_requires_objects():
    inst = InstanceMap(np.zeros((16, 16), dtype=np.int32), frozenset({4}), {})
    with pytest.raises(SamplingError):
        sample_bbox_addition(inst, np.random.default_rng(0))


def test_removal_region_intersects_background():
    for seed in range(10):
        scene, spec, rng = scene_with_objects(seed)
        mask = sample_removal_region(scene.labels, spec.background_classes, rng)
        region = mask.mask[0].astype(bool)
        support = np.isin(scene.labels.pixels, list(spec.background_classes))
        assert (region & support).any()


def test_removal_region_cap_raises():
    # all-foreground scene: no rectangle can ever hit background support
    labels = LabelMap(np.full((32, 32), 4), num_classes=8)
    with pytest.raises(SamplingError):
        sample_removal_region(labels, (0, 1, 2), np.random.default_rng(0))


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_freeform_mask_valid_any_seed(seed):
    scene, _, _ = scene_with_objects(1)
    mask = sample_freeform_mask(scene.labels, np.random.default_rng(seed))
    assert mask.mask.shape == (1, 64, 64)
    assert not mask.is_empty()


# ---------------------------------------------------------------- samples

def test_removal_relabel_oracle():
    # hand-built strip scene: bg class 0 on the left, object class 4 under mask
    px = np.zeros((8, 8), dtype=np.int32)
    px[:, 4:] = 4
    labels = LabelMap(px, num_classes=8)
    m = np.zeros((8, 8), dtype=np.float32)
    m[:, 4:] = 1.0
    relabeled = relabel_removed(labels, EditMask(m), background_classes=(0,))
    assert (relabeled.pixels == 0).all()  # everything continues the background


def test_removal_relabel_nearest_wins():
    # two background classes left(0) / right(1); middle column relabels to nearer side
    px = np.zeros((8, 9), dtype=np.int32)
    px[:, 6:] = 1
    px[:, 3:6] = 4  # object strip
    labels = LabelMap(px, num_classes=8)
    m = np.zeros((8, 9), dtype=np.float32)
    m[:, 3:6] = 1.0
    relabeled = relabel_removed(labels, EditMask(m), background_classes=(0, 1))
    assert (relabeled.pixels[:, 3] == 0).all()  # col 3: nearest src is col 2 (class 0)
    assert (relabeled.pixels[:, 5] == 1).all()  # col 5: nearest src is col 6 (class 1)


def test_removal_relabel_needs_support():
    labels = LabelMap(np.full((8, 8), 4), num_classes=8)
    m = np.ones((8, 8), dtype=np.float32)
    with pytest.raises(SamplingError):
        relabel_removed(labels, EditMask(m), background_classes=(0,))


def test_make_edit_sample_masked_image_identity():
    scene, spec, rng = scene_with_objects()
    mask = sample_freeform_mask(scene.labels, rng)
    s = make_edit_sample(scene, mask, "freeform")
    keep = 1.0 - mask.mask
    assert np.array_equal(s.image_masked, scene.image * keep)
    assert np.array_equal(s.image_masked * mask.mask, np.zeros_like(s.image_masked))


def test_make_edit_sample_bbox_scope_zeroes_outside():
    scene, spec, rng = scene_with_objects()
    mask, _ = sample_bbox_addition(scene.instances, rng)
    s = make_edit_sample(scene, mask, "addition", semantics_scope="bbox")
    outside = (1.0 - mask.mask).astype(bool)[0]
    assert (s.semantics[:, outside] == 0).all()
    inside = mask.mask.astype(bool)[0]
    assert (s.semantics[:, inside].sum(axis=0) == 1).all()


def test_make_edit_sample_removal_erases_object_classes():
    scene, spec, rng = scene_with_objects()
    mask = sample_removal_region(scene.labels, spec.background_classes, rng)
    s = make_edit_sample(scene, mask, "removal", background_classes=spec.background_classes)
    inside = mask.mask.astype(bool)[0]
    sem_labels = s.semantics.argmax(axis=0)
    assert np.isin(sem_labels[inside], list(spec.background_classes)).all()


def test_replace_outline_is_exact_silhouette():
    scene, spec, rng = scene_with_objects()
    mask, old_class = sample_replace_outline(scene.instances, rng)
    iid = mask.meta["instance_id"]
    assert np.array_equal(mask.mask[0], (scene.instances.pixels == iid).astype(np.float32))
    assert old_class == scene.instances.instance_classes[iid]


def test_replace_sample_swaps_class_inside_outline_only():
    scene, spec, _ = scene_with_objects(2)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        s = sample_for_mode(scene, spec, "replace", rng)
        inside = s.mask.mask.astype(bool)[0]
        sem_labels = s.semantics.argmax(axis=0)
        # outside untouched
        assert np.array_equal(sem_labels[~inside], scene.labels.pixels[~inside])
        # inside: a single foreground class, different from the original
        new = np.unique(sem_labels[inside])
        assert new.size == 1
        assert new[0] in spec.object_classes
        old = np.unique(scene.labels.pixels[inside])
        assert new[0] != old[0]


def test_make_edit_sample_empty_mask_full_scope_is_identity():
    scene, _, _ = scene_with_objects()
    empty = EditMask(np.zeros((64, 64), dtype=np.float32))
    s = make_edit_sample(scene, empty, "freeform", "full")
    assert np.array_equal(s.image_masked, scene.image)


def test_make_edit_sample_empty_mask_bbox_scope_rejected():
    scene, _, _ = scene_with_objects()
    empty = EditMask(np.zeros((64, 64), dtype=np.float32))
    with pytest.raises(ValueError):
        make_edit_sample(scene, empty, "addition", "bbox")


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_one_hot_argmax_round_trip(seed):
    rng = np.random.default_rng(seed)
    labels = LabelMap(rng.integers(0, 8, (16, 16)), 8)
    assert np.array_equal(one_hot(labels).argmax(axis=0), labels.pixels)


def test_sample_for_mode_dispatch():
    scene, spec, rng = scene_with_objects()
    for mode in ("freeform", "addition", "removal", "replace"):
        s = sample_for_mode(scene, spec, mode, rng)
        assert s.mode == mode


def test_synth_batch_shapes():
    batch = synth_batch(SPEC, 3, np.random.default_rng(0))
    assert batch["image_real"].shape == (3, 3, 64, 64)
    assert batch["mask"].shape == (3, 1, 64, 64)
    assert batch["semantics"].shape == (3, SPEC.num_classes, 64, 64)
    assert batch["image_masked"].shape == (3, 3, 64, 64)
