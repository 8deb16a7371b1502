from .fid import (
    GaussianStats,
    RandomConvEmbedder,
    embed_images,
    fid_between,
    frechet_distance,
    get_embedder,
    register_embedder,
)
from .report import (
    REPORT_COLUMNS,
    REPORT_HEADERS,
    MetricsReport,
    confusion_matrix,
    evaluate_suite,
    scores_from_confusion,
    segmentation_consistency,
    write_report_csv,
    write_report_json,
)
from .segmenter import (
    TinySegmenter,
    pixel_accuracy_on_scenes,
    segmenter_embedder,
    train_segmenter,
)
from .ssim import masked_ssim

__all__ = [
    "GaussianStats",
    "MetricsReport",
    "REPORT_COLUMNS",
    "REPORT_HEADERS",
    "RandomConvEmbedder",
    "TinySegmenter",
    "confusion_matrix",
    "embed_images",
    "evaluate_suite",
    "fid_between",
    "frechet_distance",
    "get_embedder",
    "masked_ssim",
    "pixel_accuracy_on_scenes",
    "register_embedder",
    "scores_from_confusion",
    "segmentation_consistency",
    "segmenter_embedder",
    "train_segmenter",
    "write_report_csv",
    "write_report_json",
]
