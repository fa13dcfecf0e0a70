"""Versioned binary checkpoint container.

Layout (all integers little-endian), documented here and in the README:

    bytes 0..7   magic  b"ASTBND01"
    u32          byte length of the config block
    ...          config block: UTF-8 ``key=value`` lines, one per line
    u32          tensor count
    per tensor:
      u16        name byte length
      ...        name, UTF-8
      u8         ndim
      u32 * ndim dims
      f32 * prod(dims)  values, C (row-major) order
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"ASTBND01"


def save_checkpoint(
    path: str | Path, config: Mapping[str, str], tensors: Mapping[str, np.ndarray]
) -> None:
    cfg_block = "".join(f"{k}={v}\n" for k, v in config.items()).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", len(cfg_block)), cfg_block]
    parts.append(struct.pack("<I", len(tensors)))
    for name, value in tensors.items():
        arr = np.ascontiguousarray(value, dtype="<f4")
        name_b = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a recognized checkpoint (bad magic/version)")
    off = 8

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        vals = struct.unpack_from(fmt, raw, off)
        off += size
        return vals

    (cfg_len,) = take("<I")
    cfg_block = raw[off : off + cfg_len].decode("utf-8")
    off += cfg_len
    config = {}
    for line in cfg_block.splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            config[k] = v
    (count,) = take("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = take("<H")
        name = raw[off : off + name_len].decode("utf-8")
        off += name_len
        (ndim,) = take("<B")
        shape = take(f"<{ndim}I") if ndim else ()
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=off).reshape(shape)
        off += 4 * n
        tensors[name] = arr.copy()
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes after last tensor (corrupt file)")
    return config, tensors
