"""Self-describing JSON checkpoints: a header plus named arrays."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    doc = {
        "header": {"format_version": CHECKPOINT_VERSION, **header},
        "arrays": {name: {"shape": list(a.shape), "data": np.asarray(a, dtype=float).ravel().tolist()}
                   for name, a in arrays.items()},
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path, expected_shapes: dict[str, tuple] | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        doc = json.loads(Path(path).read_text())
        header, raw = doc["header"], doc["arrays"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: not a checkpoint ({exc})") from None
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {header.get('format_version')!r}")
    arrays = {}
    for name, entry in raw.items():
        shape = tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=float)
        if data.size != int(np.prod(shape)):
            raise CheckpointError(f"{name}: {data.size} values do not fill shape {shape}")
        arrays[name] = data.reshape(shape)
    if expected_shapes is not None:
        missing = set(expected_shapes) - set(arrays)
        if missing:
            raise CheckpointError(f"checkpoint lacks {sorted(missing)}")
        for name, shape in expected_shapes.items():
            if arrays[name].shape != tuple(shape):
                raise CheckpointError(f"{name}: shape {arrays[name].shape}, expected {tuple(shape)}")
    return header, arrays
