"""Checkpoint archives with reproducible bytes.

A checkpoint is a plain (uncompressed) zip whose entries all carry a
constant timestamp, so saving the same state twice yields identical files.
Layout:

    meta.json                 format version, epoch/step, payload sha256
    config.json               TrainConfig
    arrays/gen/<key>.npy      generator state_dict tensors
    arrays/disc/<key>.npy     discriminator state_dict tensors
    arrays/optg/...           optimizer tensors + param_groups json
    arrays/optd/...
    rng/numpy.json            np.random.Generator bit-generator state
    rng/torch.npy             torch global RNG state

The sha256 in meta.json covers every other entry (name + bytes, sorted), so
bit rot or tampering is detected at load time.
"""
from __future__ import annotations

import hashlib
import io
import json
import zipfile
from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointError

FORMAT_VERSION = 1
_EPOCH_DATE = (1980, 1, 1, 0, 0, 0)  # zip's minimum representable timestamp


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, arr)
    return buf.getvalue()


def _tensor_entries(prefix: str, state_dict: dict) -> dict:
    out = {}
    for key, value in state_dict.items():
        out[f"{prefix}/{key}.npy"] = _npy_bytes(value.detach().cpu().numpy())
    return out


def _optimizer_entries(prefix: str, opt_state: dict) -> dict:
    entries = {}
    meta = {"param_groups": opt_state["param_groups"], "state_keys": {}}
    for idx, slots in opt_state["state"].items():
        meta["state_keys"][str(idx)] = sorted(slots)
        for name, value in slots.items():
            tensor = value if torch.is_tensor(value) else torch.tensor(value)
            entries[f"{prefix}/state/{idx}/{name}.npy"] = _npy_bytes(
                tensor.detach().cpu().numpy()
            )
    entries[f"{prefix}/groups.json"] = json.dumps(meta, sort_keys=True).encode()
    return entries


def _payload_sha256(entries: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(entries):
        h.update(name.encode())
        h.update(entries[name])
    return h.hexdigest()


def save_checkpoint(path, *, config_json: str, gen_state: dict, disc_state: dict,
                    optg_state: dict, optd_state: dict, np_rng_state: dict,
                    epoch: int, step: int) -> None:
    entries = {"config.json": config_json.encode()}
    entries.update(_tensor_entries("arrays/gen", gen_state))
    entries.update(_tensor_entries("arrays/disc", disc_state))
    entries.update(_optimizer_entries("arrays/optg", optg_state))
    entries.update(_optimizer_entries("arrays/optd", optd_state))
    entries["rng/numpy.json"] = json.dumps(np_rng_state, sort_keys=True).encode()
    entries["rng/torch.npy"] = _npy_bytes(torch.get_rng_state().numpy())
    meta = {
        "format_version": FORMAT_VERSION,
        "epoch": epoch,
        "step": step,
        "sha256": _payload_sha256(entries),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in ["meta.json"] + sorted(entries):
            data = json.dumps(meta, sort_keys=True).encode() if name == "meta.json" \
                else entries[name]
            info = zipfile.ZipInfo(name, date_time=_EPOCH_DATE)
            zf.writestr(info, data)
    tmp.replace(path)


def _split_optimizer(entries: dict, prefix: str) -> dict:
    meta = json.loads(entries[f"{prefix}/groups.json"])
    state = {}
    for idx_str, keys in meta["state_keys"].items():
        slots = {}
        for name in keys:
            arr = np.load(io.BytesIO(entries[f"{prefix}/state/{idx_str}/{name}.npy"]))
            slots[name] = torch.from_numpy(arr.copy())
        state[int(idx_str)] = slots
    return {"param_groups": meta["param_groups"], "state": state}


def load_checkpoint(path, expect_num_classes: int = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        with zipfile.ZipFile(path) as zf:
            entries = {name: zf.read(name) for name in zf.namelist()}
    except zipfile.BadZipFile as e:
        raise CheckpointError(f"unreadable archive: {e}") from e
    if "meta.json" not in entries:
        raise CheckpointError("archive has no meta.json")
    meta = json.loads(entries.pop("meta.json"))
    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"format version {meta.get('format_version')} != {FORMAT_VERSION}"
        )
    if _payload_sha256(entries) != meta["sha256"]:
        raise CheckpointError("payload checksum mismatch: archive corrupt or tampered")

    config = json.loads(entries["config.json"])
    if expect_num_classes is not None and config["num_classes"] != expect_num_classes:
        raise CheckpointError(
            f"checkpoint trained with num_classes={config['num_classes']}, "
            f"caller expects {expect_num_classes}"
        )

    def tensors(prefix):
        out = {}
        plen = len(prefix) + 1
        for name, data in entries.items():
            if name.startswith(prefix + "/") and name.endswith(".npy"):
                key = name[plen:-4]
                out[key] = torch.from_numpy(np.load(io.BytesIO(data)).copy())
        return out

    return {
        "meta": meta,
        "config_json": entries["config.json"].decode(),
        "gen_state": tensors("arrays/gen"),
        "disc_state": tensors("arrays/disc"),
        "optg_state": _split_optimizer(entries, "arrays/optg"),
        "optd_state": _split_optimizer(entries, "arrays/optd"),
        "np_rng_state": json.loads(entries["rng/numpy.json"]),
        "torch_rng_state": torch.from_numpy(
            np.load(io.BytesIO(entries["rng/torch.npy"])).copy()
        ),
        "epoch": meta["epoch"],
        "step": meta["step"],
    }
