"""Checkpoint files: a text manifest followed by one packed binary blob.

Layout (UTF-8 until the first blank line, then raw bytes):

    sta-lstm-ckpt 1
    joints 30
    classes 8
    hidden 100
    attn_hidden 100
    main_layers 3
    spatial_bypass 0
    temporal_bypass 0
    dropout 0.5
    tensor <name> <d0xd1|-> <byte offset> <element count>   (one per tensor)
    adam <step_count> <lr> <beta1> <beta2> <eps>             (optional)
    adam_tensor <m|v> <name> <dims> <offset> <count>         (optional)
    blob <total bytes> sha256 <hex digest>
    <blank line>
    <little-endian float64 blob>

Loading rebuilds the model bit-identically; a digest or length mismatch is
reported as corruption, an unknown version as a version error. Files are
written atomically (temp file, then rename).
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import CorruptionError, VersionError
from .model import ModelShape, STAModel, zero_model

__all__ = ["save_checkpoint", "load_checkpoint", "atomic_write_bytes", "atomic_write_text"]

MAGIC = "sta-lstm-ckpt"
VERSION = 1


def atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def _dims(shape: tuple[int, ...]) -> str:
    return "x".join(str(d) for d in shape) if shape else "-"


def _parse_dims(s: str) -> tuple[int, ...]:
    return () if s == "-" else tuple(int(d) for d in s.split("x"))


def save_checkpoint(path, model: STAModel, adam=None) -> None:
    shape = model.shape()
    lines = [
        f"{MAGIC} {VERSION}",
        f"joints {shape.joints}",
        f"classes {shape.classes}",
        f"hidden {shape.hidden}",
        f"attn_hidden {shape.attn_size}",
        f"main_layers {shape.main_layers}",
        f"spatial_bypass {int(shape.spatial_bypass)}",
        f"temporal_bypass {int(shape.temporal_bypass)}",
        f"dropout {shape.dropout!r}",
    ]
    chunks: list[bytes] = []
    offset = 0

    def pack(arr: np.ndarray) -> tuple[int, int]:
        nonlocal offset
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        chunks.append(raw)
        start = offset
        offset += len(raw)
        return start, arr.size

    for name, t in model.named_parameters():
        start, count = pack(t.data)
        lines.append(f"tensor {name} {_dims(t.data.shape)} {start} {count}")
    if adam is not None:
        lines.append(f"adam {adam.step_count} {adam.lr!r} {adam.beta1!r} {adam.beta2!r} {adam.eps!r}")
        for kind, table in (("m", adam.m), ("v", adam.v)):
            for name in sorted(table):
                start, count = pack(table[name])
                lines.append(f"adam_tensor {kind} {name} {_dims(table[name].shape)} {start} {count}")

    blob = b"".join(chunks)
    digest = hashlib.sha256(blob).hexdigest()
    lines.append(f"blob {len(blob)} sha256 {digest}")
    atomic_write_bytes(path, "\n".join(lines).encode() + b"\n\n" + blob)


def load_checkpoint(path, with_adam: bool = False):
    """Rebuild (model, adam_or_None) from a checkpoint file."""
    raw = Path(path).read_bytes()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise CorruptionError(f"{path}: no manifest/blob separator found")
    header = raw[:sep].decode()
    blob = raw[sep + 2:]
    lines = header.splitlines()
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != MAGIC:
        raise CorruptionError(f"{path}: not a checkpoint file")
    if magic[1] != str(VERSION):
        raise VersionError(f"{path}: unsupported checkpoint version {magic[1]}")

    meta: dict[str, str] = {}
    tensors: list[tuple[str, tuple[int, ...], int, int]] = []
    adam_line: list[str] | None = None
    adam_tensors: list[tuple[str, str, tuple[int, ...], int, int]] = []
    blob_decl: tuple[int, str] | None = None
    for line in lines[1:]:
        parts = line.split()
        if parts[0] == "tensor":
            tensors.append((parts[1], _parse_dims(parts[2]), int(parts[3]), int(parts[4])))
        elif parts[0] == "adam":
            adam_line = parts[1:]
        elif parts[0] == "adam_tensor":
            adam_tensors.append((parts[1], parts[2], _parse_dims(parts[3]), int(parts[4]), int(parts[5])))
        elif parts[0] == "blob":
            blob_decl = (int(parts[1]), parts[3])
        else:
            meta[parts[0]] = parts[1]

    if blob_decl is None:
        raise CorruptionError(f"{path}: manifest has no blob record")
    declared_len, declared_digest = blob_decl
    if len(blob) != declared_len:
        raise CorruptionError(f"{path}: blob is {len(blob)} bytes, manifest declares {declared_len}")
    if hashlib.sha256(blob).hexdigest() != declared_digest:
        raise CorruptionError(f"{path}: blob digest mismatch")

    try:
        shape = ModelShape(
            joints=int(meta["joints"]),
            classes=int(meta["classes"]),
            hidden=int(meta["hidden"]),
            attn_hidden=int(meta["attn_hidden"]),
            main_layers=int(meta["main_layers"]),
            spatial_bypass=bool(int(meta["spatial_bypass"])),
            temporal_bypass=bool(int(meta["temporal_bypass"])),
            dropout=float(meta["dropout"]),
        )
    except KeyError as e:
        raise CorruptionError(f"{path}: manifest missing field {e}") from None

    model = zero_model(shape)
    by_name: dict[str, Tensor] = dict(model.named_parameters())
    seen = set()
    for name, dims, start, count in tensors:
        if name not in by_name:
            raise CorruptionError(f"{path}: manifest tensor '{name}' not in model layout")
        target = by_name[name]
        if target.data.shape != dims:
            raise CorruptionError(f"{path}: tensor '{name}' has shape {dims}, model expects {target.data.shape}")
        arr = _read_block(blob, start, count, dims, name, path)
        target.data[...] = arr
        seen.add(name)
    missing = set(by_name) - seen
    if missing:
        raise CorruptionError(f"{path}: manifest missing tensors {sorted(missing)}")

    adam = None
    if with_adam and adam_line is not None:
        from .training import AdamState

        adam = AdamState(
            step_count=int(adam_line[0]),
            lr=float(adam_line[1]),
            beta1=float(adam_line[2]),
            beta2=float(adam_line[3]),
            eps=float(adam_line[4]),
        )
        for kind, name, dims, start, count in adam_tensors:
            arr = _read_block(blob, start, count, dims, f"adam.{kind}.{name}", path)
            (adam.m if kind == "m" else adam.v)[name] = arr
    return model, adam


def _read_block(blob: bytes, start: int, count: int, dims: tuple[int, ...], name: str, path) -> np.ndarray:
    end = start + 8 * count
    if end > len(blob):
        raise CorruptionError(f"{path}: tensor '{name}' extends past the blob")
    return np.frombuffer(blob, dtype="<f8", count=count, offset=start).reshape(dims).copy()
