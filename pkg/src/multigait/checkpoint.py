"""Versioned binary container of named float arrays plus JSON metadata.

The container is a numpy ``.npz`` archive: every array keeps its own
``.npy`` shape/dtype header.  Two reserved entries hold the format version and
a UTF-8 JSON blob for non-array state (config, RNG states, curriculum).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
_VERSION_KEY = "__format_version__"
_META_KEY = "__meta__"


class CheckpointError(RuntimeError):
    pass


def save(path: str | os.PathLike, arrays: dict[str, np.ndarray], meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    for key in arrays:
        if key.startswith("__"):
            raise CheckpointError(f"array name {key!r} is reserved")
    payload = {k: np.asarray(v) for k, v in arrays.items()}
    payload[_VERSION_KEY] = np.asarray(FORMAT_VERSION, dtype=np.int64)
    blob = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    payload[_META_KEY] = np.frombuffer(blob, dtype=np.uint8)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, **payload)
    os.replace(tmp, path)
    return path


def load(path: str | os.PathLike) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        if _VERSION_KEY not in data.files:
            raise CheckpointError(f"{path} is not a checkpoint container")
        version = int(data[_VERSION_KEY])
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
        meta = json.loads(bytes(data[_META_KEY]).decode("utf-8"))
        arrays = {k: data[k] for k in data.files if k not in (_VERSION_KEY, _META_KEY)}
    return arrays, meta
