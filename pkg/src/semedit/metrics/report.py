"""Evaluation suite: one report combining SSIM, FID and label consistency."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import torch

from ..data import EDIT_MODES, SceneSpec, batch_arrays, sample_for_mode, synth_scene
from ..errors import MetricError, PlacementError, SamplingError
from ..models import generate_edit
from .fid import fid_between
from .ssim import masked_ssim

# Column order used everywhere a report is rendered.
REPORT_COLUMNS = ("ssim_masked", "pixel_accuracy", "miou", "fid")
REPORT_HEADERS = ("SSIM", "accu", "mIoU", "FID")


@dataclass
class MetricsReport:
    ssim_masked: float
    fid: float
    miou: float
    pixel_accuracy: float
    per_class_iou: dict = field(default_factory=dict)
    sample_count: int = 0

    def __post_init__(self):
        tol = 1e-6
        if not -1.0 - tol <= self.ssim_masked <= 1.0 + tol:
            raise ValueError("ssim_masked outside [-1, 1]")
        for name in ("pixel_accuracy", "miou"):
            v = getattr(self, name)
            if not -tol <= v <= 1.0 + tol:
                raise ValueError(f"{name} outside [0, 1]")
        if self.fid < -tol:
            raise ValueError("fid negative beyond tolerance")

    def to_dict(self) -> dict:
        return {
            "ssim_masked": self.ssim_masked,
            "pixel_accuracy": self.pixel_accuracy,
            "miou": self.miou,
            "fid": self.fid,
            "per_class_iou": {str(k): v for k, v in self.per_class_iou.items()},
            "sample_count": self.sample_count,
        }

    def row(self) -> list:
        return [getattr(self, c) for c in REPORT_COLUMNS]


def write_report_json(report: MetricsReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_HEADERS)
        writer.writerow([f"{v:.6f}" for v in report.row()])


def confusion_matrix(predictions: np.ndarray, references: np.ndarray,
                     num_classes: int) -> np.ndarray:
    """rows = reference class, cols = predicted class."""
    if predictions.shape != references.shape:
        raise ValueError("prediction/reference shapes differ")
    p = predictions.reshape(-1).astype(np.int64)
    r = references.reshape(-1).astype(np.int64)
    if p.min() < 0 or p.max() >= num_classes or r.min() < 0 or r.max() >= num_classes:
        raise ValueError("class index outside [0, num_classes)")
    conf = np.bincount(r * num_classes + p, minlength=num_classes * num_classes)
    return conf.reshape(num_classes, num_classes)


def scores_from_confusion(conf: np.ndarray):
    """(miou, accuracy, per_class_iou); mIoU averages classes present in the references."""
    total = conf.sum()
    if total == 0:
        raise MetricError("empty confusion matrix")
    accuracy = float(np.trace(conf)) / float(total)
    per_class = {}
    present = []
    for c in range(conf.shape[0]):
        tp = conf[c, c]
        fp = conf[:, c].sum() - tp
        fn = conf[c, :].sum() - tp
        denom = tp + fp + fn
        if denom > 0:
            per_class[c] = float(tp) / float(denom)
        if conf[c, :].sum() > 0:  # class occurs in references
            present.append(c)
    if not present:
        raise MetricError("no class present in references")
    miou = float(np.mean([per_class[c] for c in present]))
    return miou, accuracy, per_class


def segmentation_consistency(images: np.ndarray, reference_labels: np.ndarray,
                             segmenter):
    """Score a segmenter's reading of edited images against intended labels.

    `images` is Nx3xHxW, `reference_labels` NxHxW int.  Returns
    (miou, accuracy, per_class_iou) from one pooled confusion matrix.
    """
    num_classes = segmenter.num_classes
    if reference_labels.max() >= num_classes:
        raise ValueError("reference labels exceed segmenter class count")
    pred = segmenter.predict(images)
    conf = confusion_matrix(pred, reference_labels, num_classes)
    assert conf.sum() == reference_labels.size
    return scores_from_confusion(conf)


def _collect_samples(spec: SceneSpec, n_samples: int, modes, rng,
                     semantics_scope: str):
    samples, sample_modes = [], []
    failures = 0
    i = 0
    while len(samples) < n_samples:
        mode = modes[i % len(modes)]
        try:
            scene = synth_scene(spec, rng)
            samples.append(sample_for_mode(scene, spec, mode, rng, semantics_scope))
            sample_modes.append(mode)
            i += 1
        except (SamplingError, PlacementError):
            failures += 1
            if failures > 50 * n_samples:
                raise
    return samples, sample_modes


def evaluate_suite(generator, spec: SceneSpec, *, n_samples: int = 32,
                   seed: int = 0, modes=EDIT_MODES, semantics_scope: str = "full",
                   segmenter=None, embedder=None, batch_size: int = 8) -> MetricsReport:
    """Sample edits, run the generator, composite, and score everything.

    The mIoU/accuracy block needs a segmenter and full-scope semantics (the
    intended labels are recovered from the one-hot planes); without a
    segmenter those fields are reported as NaN-free zeros with empty
    per-class detail.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample to evaluate")
    rng = np.random.default_rng(seed)
    samples, _ = _collect_samples(spec, n_samples, tuple(modes), rng, semantics_scope)

    composited = []
    ssims = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        arrays = batch_arrays(chunk)
        out = generate_edit(
            generator,
            torch.from_numpy(arrays["image_masked"]).float(),
            torch.from_numpy(arrays["mask"]).float(),
            torch.from_numpy(arrays["semantics"]).float(),
            image_real=torch.from_numpy(arrays["image_real"]).float(),
        ).numpy()
        composited.append(out)
        for j, s in enumerate(chunk):
            ssims.append(masked_ssim(s.image_real, out[j], s.mask))
    edited = np.concatenate(composited, axis=0)
    real = np.stack([s.image_real for s in samples])

    fid = fid_between(real, edited, embedder)

    miou = accuracy = 0.0
    per_class = {}
    if segmenter is not None:
        if semantics_scope != "full":
            raise ValueError("label consistency needs full-scope semantics")
        refs = np.stack([s.semantics.argmax(axis=0) for s in samples])
        miou, accuracy, per_class = segmentation_consistency(edited, refs, segmenter)

    return MetricsReport(
        ssim_masked=float(np.mean(ssims)),
        fid=fid,
        miou=miou,
        pixel_accuracy=accuracy,
        per_class_iou=per_class,
        sample_count=len(samples),
    )
