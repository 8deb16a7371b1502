from .masks import (
    sample_bbox_addition,
    sample_freeform_mask,
    sample_removal_region,
    sample_replace_outline,
)
from .samples import (
    batch_arrays,
    make_edit_sample,
    relabel_removed,
    relabel_replaced,
    sample_for_mode,
    synth_batch,
)
from .scenes import Scene, one_hot, synth_scene
from .types import (
    EDIT_MODES,
    SEMANTICS_SCOPES,
    EditMask,
    EditSample,
    InstanceMap,
    LabelMap,
    SceneSpec,
    SemanticLayout,
)

__all__ = [
    "EDIT_MODES",
    "SEMANTICS_SCOPES",
    "EditMask",
    "EditSample",
    "InstanceMap",
    "LabelMap",
    "Scene",
    "SceneSpec",
    "SemanticLayout",
    "batch_arrays",
    "make_edit_sample",
    "one_hot",
    "relabel_removed",
    "relabel_replaced",
    "sample_bbox_addition",
    "sample_for_mode",
    "sample_freeform_mask",
    "sample_removal_region",
    "sample_replace_outline",
    "synth_batch",
    "synth_scene",
]
