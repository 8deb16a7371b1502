"""HTTP edit service: paint a label map over an image, get the edit back.

The request carries the image and a painted label layer (255 = untouched);
the edit mask is derived server-side as the painted region.  Compositing is
done on uint8 pixels so untouched bytes round-trip exactly.  Model access is
serialized behind a lock with a bounded admission semaphore (back-pressure
as 429 rather than unbounded queueing).
"""
from __future__ import annotations

import base64
import binascii
import io
import threading
import time

import numpy as np
import torch
from fastapi import Body, FastAPI, HTTPException
from PIL import Image

from .data import EDIT_MODES, SEMANTICS_SCOPES
from .data.io import (
    DEFAULT_CLASS_NAMES,
    image_to_uint8,
    palette_for,
    read_manifest,
    uint8_to_image,
)
from .errors import CheckpointError
from .models import Generator, composite
from .training import TrainConfig, load_checkpoint

QUEUE_CAP = 16
MAX_FIELD_BYTES = 4 * 1024 * 1024  # base64 payload cap per image field
UNTOUCHED = 255


def load_generator(checkpoint_path, expect_num_classes: int = None):
    """Inference-only load: the generator, its config, and a version string."""
    ckpt = load_checkpoint(checkpoint_path, expect_num_classes=expect_num_classes)
    cfg = TrainConfig.from_json(ckpt["config_json"])
    gen = Generator(cfg.num_classes)
    gen.load_state_dict(ckpt["gen_state"])
    gen.eval()
    for p in gen.parameters():
        p.requires_grad_(False)
    version = f"step{ckpt['step']}-{ckpt['meta']['sha256'][:12]}"
    return gen, cfg, version


def _b64_png_array(field: str, data: str, *, expect_mode: str) -> np.ndarray:
    """Decode a base64 PNG field or raise 400 naming the offending field."""
    if not isinstance(data, str):
        raise HTTPException(400, detail=f"{field}: expected a base64 string")
    if len(data) > MAX_FIELD_BYTES:
        raise HTTPException(413, detail=f"{field}: payload exceeds size cap")
    try:
        raw = base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError):
        raise HTTPException(400, detail=f"{field}: invalid base64")
    try:
        img = Image.open(io.BytesIO(raw))
        if img.format != "PNG":
            raise HTTPException(400, detail=f"{field}: only PNG images are accepted")
        if img.mode != expect_mode:
            raise HTTPException(
                400, detail=f"{field}: expected mode {expect_mode}, got {img.mode}"
            )
        return np.asarray(img)
    except HTTPException:
        raise
    except Exception:
        raise HTTPException(400, detail=f"{field}: undecodable PNG")


def _png_b64(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def validate_paint(image_u8: np.ndarray, painted: np.ndarray,
                   num_classes: int) -> np.ndarray:
    """Derive the edit mask from a painted layer; ValueError names the field."""
    if painted.shape != image_u8.shape[:2]:
        raise ValueError("painted_labels: size differs from image")
    h, w = painted.shape
    if h % 4 or w % 4:
        raise ValueError("image: height and width must be divisible by 4")
    mask = painted != UNTOUCHED
    if not mask.any():
        raise ValueError("painted_labels: painted region is empty")
    if painted[mask].max() >= num_classes:
        raise ValueError(
            f"painted_labels: class index out of range "
            f"(model has {num_classes} classes)"
        )
    return mask


def apply_painted_edit(generator, num_classes: int, image_u8: np.ndarray,
                       painted: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Generate inside the mask; splice uint8 pixels for byte equality."""
    real = uint8_to_image(image_u8)
    m = mask.astype(np.float32)[None]
    sem = np.zeros((num_classes,) + mask.shape, dtype=np.float32)
    ys, xs = np.nonzero(mask)
    sem[painted[ys, xs], ys, xs] = 1.0
    masked = real * (1.0 - m)
    with torch.no_grad():
        gen = generator(
            torch.from_numpy(masked[None]).float(),
            torch.from_numpy(m[None]).float(),
            torch.from_numpy(sem[None]).float(),
        )[0]
    gen_u8 = image_to_uint8(gen.numpy())  # already HxWx3
    out = image_u8.copy()
    out[mask] = gen_u8[mask]
    return out


class EditService:
    """Owns the frozen generator and the admission/serialization primitives."""

    def __init__(self, checkpoint_path, manifest: dict = None,
                 queue_cap: int = QUEUE_CAP):
        self.generator, self.cfg, self.model_version = load_generator(checkpoint_path)
        self.num_classes = self.cfg.num_classes
        if manifest is not None:
            if int(manifest["num_classes"]) != self.num_classes:
                raise CheckpointError(
                    "manifest class count does not match the checkpoint"
                )
            self.class_names = list(manifest["class_names"])
            self.palette = [tuple(c) for c in manifest["palette"]]
        else:
            self.class_names = list(DEFAULT_CLASS_NAMES[: self.num_classes])
            self.palette = palette_for(self.num_classes)
        self._slots = threading.Semaphore(queue_cap)
        self._model_lock = threading.Lock()

    # -- request pipeline ---------------------------------------------------

    def decode_request(self, payload: dict):
        for field in ("image", "painted_labels"):
            if field not in payload:
                raise HTTPException(400, detail=f"{field}: missing")
        mode = payload.get("mode", "freeform")
        if mode not in EDIT_MODES:
            raise HTTPException(400, detail=f"mode: unknown mode {mode!r}")
        scope = payload.get("semantics_scope", "bbox")
        if scope not in SEMANTICS_SCOPES:
            raise HTTPException(400, detail=f"semantics_scope: unknown scope {scope!r}")

        image = _b64_png_array("image", payload["image"], expect_mode="RGB")
        painted = _b64_png_array("painted_labels", payload["painted_labels"],
                                 expect_mode="L")
        try:
            mask = validate_paint(image, painted, self.num_classes)
        except ValueError as e:
            raise HTTPException(400, detail=str(e))
        return image, painted, mask, mode, scope

    def handle_edit(self, payload: dict) -> dict:
        image, painted, mask, mode, scope = self.decode_request(payload)
        if not self._slots.acquire(blocking=False):
            raise HTTPException(429, detail="edit queue is full, retry later")
        try:
            start = time.perf_counter()
            with self._model_lock:
                out = apply_painted_edit(
                    self.generator, self.num_classes, image, painted, mask
                )
            latency_ms = (time.perf_counter() - start) * 1000.0
        finally:
            self._slots.release()
        return {
            "image": _png_b64(out),
            "mask": _png_b64((mask * np.uint8(255)).astype(np.uint8)),
            "latency_ms": latency_ms,
            "model_version": self.model_version,
            "mode": mode,
            "semantics_scope": scope,
        }


def create_app(checkpoint_path, manifest_dir=None,
               queue_cap: int = QUEUE_CAP) -> FastAPI:
    manifest = read_manifest(manifest_dir) if manifest_dir else None
    service = EditService(checkpoint_path, manifest=manifest, queue_cap=queue_cap)
    app = FastAPI(title="semedit")
    app.state.service = service

    @app.get("/health")
    def health():
        return {"status": "ok", "model_version": service.model_version}

    @app.get("/classes")
    def classes():
        return {
            "num_classes": service.num_classes,
            "names": service.class_names,
            "palette": [list(c) for c in service.palette],
        }

    @app.post("/edit")
    def edit(payload: dict = Body(...)):
        return service.handle_edit(payload)

    return app
