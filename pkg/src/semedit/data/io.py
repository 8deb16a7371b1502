"""Disk format: PNG images plus a JSON manifest.

Layout written by `write_dataset`:

    root/
      manifest.json          # num_classes, class names, palette, split sizes
      images/NNNNN.png       # RGB, uint8
      labels/NNNNN.png       # single channel, class index per pixel
      instances/NNNNN.png    # single channel, instance id per pixel
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .scenes import Scene, class_color, synth_scene
from .types import InstanceMap, LabelMap, SceneSpec

DEFAULT_CLASS_NAMES = (
    "ground", "road", "sky", "vegetation",
    "box", "disc", "cone", "marker", "extra8", "extra9",
)


def image_to_uint8(img: np.ndarray) -> np.ndarray:
    """3xHxW [-1,1] float -> HxWx3 uint8 (round-half-away like PIL expects)."""
    scaled = (np.clip(img, -1.0, 1.0) + 1.0) * 127.5
    return np.rint(scaled).astype(np.uint8).transpose(1, 2, 0)


def uint8_to_image(arr: np.ndarray) -> np.ndarray:
    """HxWx3 uint8 -> 3xHxW float32 in [-1,1]."""
    return (arr.astype(np.float32) / 127.5 - 1.0).transpose(2, 0, 1)


def save_png(path, arr: np.ndarray):
    Image.fromarray(arr).save(path)


def load_png(path) -> np.ndarray:
    return np.asarray(Image.open(path))


def palette_for(num_classes: int) -> list:
    return [[int(round(v * 255)) for v in class_color(c)] for c in range(num_classes)]


def write_manifest(root: Path, spec: SceneSpec, count: int):
    names = list(DEFAULT_CLASS_NAMES[: spec.num_classes])
    while len(names) < spec.num_classes:
        names.append(f"class{len(names)}")
    manifest = {
        "num_classes": spec.num_classes,
        "class_names": names,
        "palette": palette_for(spec.num_classes),
        "background_classes": list(spec.background_classes),
        "object_classes": list(spec.object_classes),
        "height": spec.height,
        "width": spec.width,
        "count": count,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def read_manifest(root) -> dict:
    return json.loads((Path(root) / "manifest.json").read_text())


def write_dataset(root, spec: SceneSpec, count: int, rng: np.random.Generator) -> dict:
    root = Path(root)
    for sub in ("images", "labels", "instances"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    instance_classes = {}
    for i in range(count):
        scene = synth_scene(spec, rng)
        stem = f"{i:05d}.png"
        save_png(root / "images" / stem, image_to_uint8(scene.image))
        save_png(root / "labels" / stem, scene.labels.pixels.astype(np.uint8))
        # instances get 16 bits: ids are unbounded by the class count
        Image.fromarray(scene.instances.pixels.astype(np.uint16)).save(
            root / "instances" / stem
        )
        instance_classes[stem] = {str(k): v for k, v in scene.instances.instance_classes.items()}
    manifest = write_manifest(root, spec, count)
    (root / "instance_classes.json").write_text(json.dumps(instance_classes, indent=2))
    return manifest


def load_scene(root, index: int) -> Scene:
    root = Path(root)
    manifest = read_manifest(root)
    stem = f"{index:05d}.png"
    img = uint8_to_image(load_png(root / "images" / stem))
    labels = LabelMap(load_png(root / "labels" / stem), manifest["num_classes"])
    inst_px = load_png(root / "instances" / stem)
    inst_cls_all = json.loads((root / "instance_classes.json").read_text())
    inst_cls = {int(k): int(v) for k, v in inst_cls_all[stem].items()}
    instances = InstanceMap(inst_px, frozenset(manifest["object_classes"]), inst_cls)
    return Scene(image=img, labels=labels, instances=instances)


def spec_from_manifest(manifest: dict) -> SceneSpec:
    return SceneSpec(
        height=manifest["height"],
        width=manifest["width"],
        background_classes=tuple(manifest["background_classes"]),
        object_classes=tuple(manifest["object_classes"]),
        num_classes=manifest["num_classes"],
    )
