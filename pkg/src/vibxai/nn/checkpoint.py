"""Checkpoint file format.

Layout: magic "VXCP", little-endian u32 version, u32 header length, JSON
header, then one little-endian float64 blob per entry in the header's
"arrays" list (alphabetical by name: standardization vectors plus the model
state dict). Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .model import ModelConfig
from .training import Checkpoint

_MAGIC = b"VXCP"
_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_weights(ckpt: Checkpoint, path: str) -> None:
    arrays = dict(ckpt.state)
    arrays["_feature_mean"] = ckpt.feature_mean
    arrays["_feature_std"] = ckpt.feature_std
    names = sorted(arrays)
    header = {
        "model_config": ckpt.model_config.to_dict(),
        "best_test_accuracy": ckpt.best_test_accuracy,
        "epoch_of_best": ckpt.epoch_of_best,
        "arrays": [{"name": n, "shape": list(arrays[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_weights(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
        head = f.read(8)
        if len(head) < 8:
            raise CheckpointError(f"{path}: truncated header")
        version, hlen = struct.unpack("<II", head)
        if version != _VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        raw = f.read(hlen)
        if len(raw) < hlen:
            raise CheckpointError(f"{path}: truncated header")
        try:
            header = json.loads(raw)
        except json.JSONDecodeError as e:
            raise CheckpointError(f"{path}: corrupt header: {e}") from e
        arrays: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = f.read(8 * count)
            if len(blob) != 8 * count:
                raise CheckpointError(f"{path}: truncated array {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
    mean = arrays.pop("_feature_mean")
    std = arrays.pop("_feature_std")
    return Checkpoint(
        model_config=ModelConfig.from_dict(header["model_config"]),
        state=arrays,
        feature_mean=mean,
        feature_std=std,
        best_test_accuracy=header["best_test_accuracy"],
        epoch_of_best=header["epoch_of_best"],
    )
