"""Model checkpoints: one JSON document per model.

Layout: {"format_version": 1, "config": {...}, "tensors": {name:
{"shape": [...], "data": [...]}}}. Floats are written with 17
significant digits, which round-trips IEEE-754 doubles bit-faithfully,
and keys are sorted so identical models serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _render(obj) -> str:
    if isinstance(obj, float):
        return format(obj, ".17g")
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.floating):
        return format(float(obj), ".17g")
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_render(x) for x in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist())
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ",".join(json.dumps(str(k)) + ":" + _render(v) for k, v in items) + "}"
    raise CheckpointError(f"cannot serialize {type(obj).__name__} in checkpoint")


def dumps(config: dict, tensors: dict[str, Tensor]) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "tensors": {
            name: {"shape": list(t.data.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in tensors.items()
        },
    }
    return _render(doc)


def save(path: str | Path, config: dict, tensors: dict[str, Tensor]) -> None:
    Path(path).write_text(dumps(config, tensors) + "\n", encoding="utf-8")


def load(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (config, arrays). The caller rebuilds parameter objects."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {doc.get('format_version')!r}")
    arrays = {}
    for name, entry in doc["tensors"].items():
        arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        arrays[name] = arr
    return doc["config"], arrays


def restore_tensors(params: dict[str, Tensor], arrays: dict[str, np.ndarray]) -> None:
    """Copy checkpoint arrays into an existing parameter mapping."""
    missing = set(params) - set(arrays)
    extra = set(arrays) - set(params)
    if missing or extra:
        raise CheckpointError(f"tensor names mismatch: missing={sorted(missing)} extra={sorted(extra)}")
    for name, t in params.items():
        if arrays[name].shape != t.data.shape:
            raise CheckpointError(
                f"shape mismatch for {name}: checkpoint {arrays[name].shape} vs model {t.data.shape}")
        t.data[...] = arrays[name]
