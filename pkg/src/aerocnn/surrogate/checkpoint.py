"""
Checkpoint file:

    b"AEROCKPT" | u32 version | u64 metadata length | YAML metadata | payload

The payload is every state_dict tensor as little-endian float32, in the
order of the metadata's tensor directory. Integer buffers (batch-norm step
counters) round-trip through float32 and are cast back on load.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np
import torch
import yaml

from ..geometry import DomainSpec
from .model import ENCODER_BLOCKS, ModelConfig, SurrogateModel, SurrogateNet, count_parameters
from .scaler import Scaler

logger = logging.getLogger(__name__)

MAGIC = b"AEROCKPT"
VERSION = 1
PREAMBLE = struct.Struct("<IQ")
MAX_METADATA = 1 << 26


class CheckpointFormatError(ValueError):
    pass


def _plain(value):
    """numpy scalars and tuples into YAML-safe python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def save_checkpoint(model: SurrogateModel, path, domain=None) -> Path:
    path = Path(path)
    net = model.net
    state = net.state_dict()

    tensors = []
    chunks = []
    offset = 0
    for name, tensor in state.items():
        array = tensor.detach().cpu().numpy().astype("<f4").ravel()
        tensors.append(
            {
                "name": name,
                "shape": list(tensor.shape),
                "dtype": str(tensor.dtype).replace("torch.", ""),
                "offset": offset,
                "count": int(array.size),
            }
        )
        chunks.append(array.tobytes())
        offset += array.nbytes

    metadata = {
        "format_version": VERSION,
        "config": model.config.to_dict(),
        "scaler": model.scaler.to_dict(),
        "parameter_count": count_parameters(net),
        "encoder_blocks": len(model.config.blocks),
        "training": model.metadata.get("training", {}),
        "tensors": tensors,
    }
    if domain is not None:
        metadata["domain"] = {"min": list(domain.box.min), "max": list(domain.box.max), "dims": list(domain.dims)}
    elif "domain" in model.metadata:
        metadata["domain"] = model.metadata["domain"]
    meta_bytes = yaml.safe_dump(_plain(metadata), sort_keys=False).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(PREAMBLE.pack(VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        for chunk in chunks:
            f.write(chunk)
    logger.info("Checkpoint saved to %s (%d tensors, %d parameters)", path, len(tensors), metadata["parameter_count"])
    return path


def read_metadata(path) -> tuple[dict, bytes]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointFormatError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    head = len(MAGIC) + PREAMBLE.size
    if len(data) < head:
        raise CheckpointFormatError(f"{path}: truncated header ({len(data)} bytes)")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    version, meta_len = PREAMBLE.unpack_from(data, len(MAGIC))
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: version mismatch, file has {version}, expected {VERSION}")
    if meta_len > MAX_METADATA or head + meta_len > len(data):
        raise CheckpointFormatError(f"{path}: truncated metadata")
    try:
        metadata = yaml.safe_load(data[head : head + meta_len].decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as e:
        raise CheckpointFormatError(f"{path}: unreadable metadata: {e}") from e
    if not isinstance(metadata, dict) or "tensors" not in metadata or "config" not in metadata:
        raise CheckpointFormatError(f"{path}: metadata lacks config or tensor directory")
    return metadata, data[head + meta_len :]


def load_checkpoint(path) -> SurrogateModel:
    metadata, payload = read_metadata(path)
    try:
        cfg = ModelConfig.from_dict(metadata["config"])
        scaler = Scaler.from_dict(metadata["scaler"])
    except (TypeError, ValueError, KeyError) as e:
        raise CheckpointFormatError(f"{path}: invalid config or scaler: {e}") from e

    net = SurrogateNet(cfg)
    expected = net.state_dict()
    directory = {t["name"]: t for t in metadata["tensors"]}

    unexpected = sorted(set(directory) - set(expected))
    if unexpected:
        raise CheckpointFormatError(f"{path}: unexpected tensor(s) {unexpected}")

    state = {}
    for name, reference in expected.items():
        entry = directory.get(name)
        if entry is None:
            raise CheckpointFormatError(f"{path}: missing tensor {name!r}")
        if tuple(entry["shape"]) != tuple(reference.shape):
            raise CheckpointFormatError(
                f"{path}: shape mismatch for {name!r}: file {tuple(entry['shape'])}, model {tuple(reference.shape)}"
            )
        start, count = int(entry["offset"]), int(entry["count"])
        if start + 4 * count > len(payload):
            raise CheckpointFormatError(f"{path}: truncated payload at tensor {name!r}")
        array = np.frombuffer(payload, dtype="<f4", count=count, offset=start).reshape(reference.shape)
        state[name] = torch.from_numpy(array.copy()).to(reference.dtype)

    net.load_state_dict(state)
    net.eval()
    if metadata.get("encoder_blocks", ENCODER_BLOCKS) != len(cfg.blocks):
        logger.warning("checkpoint metadata lists %s encoder blocks, config has %d", metadata.get("encoder_blocks"), len(cfg.blocks))
    extra = {k: metadata[k] for k in ("training", "domain", "parameter_count", "encoder_blocks") if k in metadata}
    return SurrogateModel(net, scaler, extra)


def checkpoint_domain(model: SurrogateModel):
    """DomainSpec the training grids were voxelized on, if recorded."""
    entry = model.metadata.get("domain")
    if not entry:
        return None
    return DomainSpec.from_bounds(list(entry["min"]) + list(entry["max"]), entry["dims"])
