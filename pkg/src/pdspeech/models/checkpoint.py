"""Binary checkpoint files for trained CNN classifiers.

Layout of a ``.pdxf`` file::

    offset 0   4 bytes   magic ``b"PDXF"``
    offset 4   1 byte    format version (currently 1)
    offset 5   4 bytes   header length, little-endian uint32
    offset 9   N bytes   UTF-8 JSON header
    then                 raw float32 little-endian tensor data, one blob
                         per header entry, in header order

The JSON header records the architecture, the input normalization
statistics, a free-form provenance dict (training seed, source language,
epoch count and the like), and the name plus shape of every tensor blob
that follows.  Readers validate eagerly: a wrong magic, an unsupported
version, a short file, or trailing bytes all raise before any model is
built.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..nn.tensor import Tensor
from .cnn import CnnArchitecture, PdCnn

MAGIC = b"PDXF"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<4sBI")


class CheckpointError(Exception):
    """Base class for checkpoint read and write failures."""


class InvalidMagicError(CheckpointError):
    """The file does not start with the ``PDXF`` magic bytes."""


class TruncatedCheckpointError(CheckpointError):
    """The file ends before the declared content does."""


class ArchitectureMismatchError(CheckpointError):
    """Stored tensors do not fit the architecture in the header."""


def _parameter_names(model: PdCnn) -> list[str]:
    """Stable names for model.parameters(), in the same order."""
    names = []
    for i, layer in enumerate(model.net.layers):
        for attr in ("weight", "bias"):
            if isinstance(getattr(layer, attr, None), Tensor):
                names.append(f"layer{i:02d}.{type(layer).__name__.lower()}.{attr}")
    return names


@dataclass(frozen=True)
class Checkpoint:
    architecture: CnnArchitecture
    norm_stats: tuple[float, float]
    provenance: dict = field(default_factory=dict)
    tensors: tuple[tuple[str, np.ndarray], ...] = ()


def save_checkpoint(model: PdCnn, path: str | Path,
                    provenance: dict | None = None) -> None:
    """Write the model's parameters and metadata to ``path``.

    Parameters are stored as float32 regardless of the model dtype.
    ``provenance`` must be JSON-serializable.
    """
    names = _parameter_names(model)
    params = model.parameters()
    if len(names) != len(params):
        raise CheckpointError("parameter naming walked a different set of "
                              "tensors than model.parameters() returned")
    header = {
        "architecture": model.arch.to_dict(),
        "norm_stats": [float(model.norm_stats[0]), float(model.norm_stats[1])],
        "provenance": dict(provenance or {}),
        "tensors": [{"name": n, "shape": list(p.data.shape)}
                    for n, p in zip(names, params)],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for p in params:
            fh.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read and validate a ``.pdxf`` file."""
    raw = Path(path).read_bytes()
    if len(raw) < _PREAMBLE.size:
        raise TruncatedCheckpointError(
            f"file is {len(raw)} bytes, shorter than the fixed preamble")
    magic, version, header_len = _PREAMBLE.unpack_from(raw, 0)
    if magic != MAGIC:
        raise InvalidMagicError(f"expected magic {MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version}")
    body_start = _PREAMBLE.size + header_len
    if len(raw) < body_start:
        raise TruncatedCheckpointError("file ends inside the JSON header")
    try:
        header = json.loads(raw[_PREAMBLE.size:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"header is not valid JSON: {exc}") from exc
    try:
        arch = CnnArchitecture.from_dict(header["architecture"])
        mean, std = header["norm_stats"]
        provenance = header["provenance"]
        entries = header["tensors"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed header: {exc}") from exc

    tensors = []
    offset = body_start
    for entry in entries:
        shape = tuple(int(s) for s in entry["shape"])
        n_bytes = int(np.prod(shape)) * 4
        if len(raw) < offset + n_bytes:
            raise TruncatedCheckpointError(
                f"file ends inside tensor {entry['name']!r}")
        data = np.frombuffer(raw, dtype="<f4", count=int(np.prod(shape)),
                             offset=offset).reshape(shape).copy()
        tensors.append((str(entry["name"]), data))
        offset += n_bytes
    if offset != len(raw):
        raise CheckpointError(
            f"{len(raw) - offset} trailing bytes after the last tensor")
    return Checkpoint(architecture=arch, norm_stats=(float(mean), float(std)),
                      provenance=provenance, tensors=tuple(tensors))


def model_from_checkpoint(source: str | Path | Checkpoint) -> PdCnn:
    """Rebuild a ready-to-predict model from a checkpoint."""
    ckpt = source if isinstance(source, Checkpoint) else load_checkpoint(source)
    model = PdCnn(ckpt.architecture, seed=0)
    expected = [p.data.shape for p in model.parameters()]
    stored = [arr.shape for _, arr in ckpt.tensors]
    if expected != stored:
        raise ArchitectureMismatchError(
            f"architecture implies parameter shapes {expected}, "
            f"checkpoint stores {stored}")
    model.load_parameters([arr for _, arr in ckpt.tensors])
    model.norm_stats = ckpt.norm_stats
    return model
