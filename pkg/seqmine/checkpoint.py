"""Binary checkpoint format.

Layout (all integers little-endian):

    magic       8 bytes  b"SEQMCKPT"
    header_len  uint64
    header      JSON (utf-8), keys sorted
    payload     raw '<f8' tensors, in header order

The header records the format version, model args, optimizer step, trainer
state and, for every tensor, its group, name, shape and byte offset.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
from loguru import logger

from seqmine.errors import (
    CheckpointShapeError,
    CheckpointVersionError,
    CorruptCheckpointError,
    ShapeError,
)
from seqmine.models.bilstm_msa import ModelArgs, ModelParams
from seqmine.optim import AdamState
from seqmine.utils.file import atomic_write_bytes

MAGIC = b"SEQMCKPT"
FORMAT_VERSION = 1
_LEN = struct.Struct("<Q")
_DTYPE = np.dtype("<f8")

TENSOR_GROUPS = ("params", "exp_avg", "exp_avg_sq")


@dataclass
class Checkpoint:
    model_args: dict
    params: dict[str, np.ndarray]
    exp_avg: dict[str, np.ndarray] = field(default_factory=dict)
    exp_avg_sq: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    epoch: int = 0
    # numpy bit generator state of the trainer's epoch-seed stream
    rng_state: Optional[dict] = None
    # early-stopping counters and the history so far
    trainer_state: dict = field(default_factory=dict)
    # class names, sequence length, normalisation stats
    meta: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_model(
        cls,
        params: ModelParams,
        adam: AdamState | None = None,
        **kwargs: Any,
    ) -> "Checkpoint":
        adam = adam or AdamState()
        return cls(
            model_args=params.args.to_dict(),
            params=params.state_dict(),
            exp_avg={k: np.array(v) for k, v in adam.exp_avg.items()},
            exp_avg_sq={k: np.array(v) for k, v in adam.exp_avg_sq.items()},
            step=adam.step,
            **kwargs,
        )

    def to_model(self) -> ModelParams:
        """Rebuild ModelParams, checking every tensor against the stored args."""

        args = ModelArgs.from_dict(dict(self.model_args))
        model = ModelParams.init(args)

        expected = {name: p.shape for name, p in model.named_parameters()}
        for group in TENSOR_GROUPS:
            tensors = getattr(self, group)
            if group != "params" and not tensors:
                continue
            if set(tensors) != set(expected):
                missing = sorted(set(expected) - set(tensors))
                unexpected = sorted(set(tensors) - set(expected))
                raise CheckpointShapeError(
                    f"{group} tensors disagree with model config, missing={missing} unexpected={unexpected}"
                )
            for name, shape in expected.items():
                if tensors[name].shape != shape:
                    raise CheckpointShapeError(
                        f"{group}.{name} has shape {tensors[name].shape}, config implies {shape}"
                    )

        try:
            model.load_state_dict(self.params)
        except ShapeError as e:
            raise CheckpointShapeError(str(e)) from e

        return model

    def adam_state(self) -> AdamState:
        return AdamState(
            step=self.step,
            exp_avg={k: np.array(v) for k, v in self.exp_avg.items()},
            exp_avg_sq={k: np.array(v) for k, v in self.exp_avg_sq.items()},
        )


def _encode(ckpt: Checkpoint) -> bytes:
    entries = []
    chunks = []
    offset = 0
    for group in TENSOR_GROUPS:
        for name, value in getattr(ckpt, group).items():
            raw = np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
            entries.append(
                {
                    "group": group,
                    "name": name,
                    "shape": list(np.shape(value)),
                    "offset": offset,
                    "nbytes": len(raw),
                }
            )
            chunks.append(raw)
            offset += len(raw)

    header = {
        "version": ckpt.format_version,
        "model_args": ckpt.model_args,
        "step": ckpt.step,
        "epoch": ckpt.epoch,
        "rng_state": ckpt.rng_state,
        "trainer_state": ckpt.trainer_state,
        "meta": ckpt.meta,
        "tensors": entries,
        "payload_bytes": offset,
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")

    return b"".join([MAGIC, _LEN.pack(len(header_bytes)), header_bytes, *chunks])


def _decode(payload: bytes, path: Path) -> Checkpoint:
    prefix = len(MAGIC) + _LEN.size
    if len(payload) < prefix or payload[: len(MAGIC)] != MAGIC:
        raise CorruptCheckpointError(f"{path}: not a seqmine checkpoint (bad magic or truncated)")

    (header_len,) = _LEN.unpack_from(payload, len(MAGIC))
    if len(payload) < prefix + header_len:
        raise CorruptCheckpointError(f"{path}: truncated header")

    try:
        header = json.loads(payload[prefix : prefix + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpointError(f"{path}: unreadable header: {e}") from e

    version = header.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: checkpoint format version {version}, this build reads {FORMAT_VERSION}"
        )

    body = memoryview(payload)[prefix + header_len :]
    if len(body) != header.get("payload_bytes"):
        raise CorruptCheckpointError(
            f"{path}: payload is {len(body)} bytes, header promises {header.get('payload_bytes')}"
        )

    groups: dict[str, dict[str, np.ndarray]] = {g: {} for g in TENSOR_GROUPS}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        start, nbytes = entry["offset"], entry["nbytes"]
        if nbytes != int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize or start + nbytes > len(body):
            raise CorruptCheckpointError(f"{path}: tensor {entry['group']}.{entry['name']} is out of bounds")

        value = np.frombuffer(body[start : start + nbytes], dtype=_DTYPE).reshape(shape)
        groups[entry["group"]][entry["name"]] = value.astype(np.float64)

    return Checkpoint(
        model_args=header["model_args"],
        params=groups["params"],
        exp_avg=groups["exp_avg"],
        exp_avg_sq=groups["exp_avg_sq"],
        step=header["step"],
        epoch=header["epoch"],
        rng_state=header["rng_state"],
        trainer_state=header["trainer_state"],
        meta=header["meta"],
        format_version=version,
    )


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> Path:
    path = atomic_write_bytes(path, _encode(ckpt))
    logger.debug(f"Saved checkpoint to {path} (epoch {ckpt.epoch}, step {ckpt.step})")
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    payload = path.read_bytes()
    ckpt = _decode(payload, path)
    logger.debug(f"Loaded checkpoint from {path} (epoch {ckpt.epoch}, step {ckpt.step})")
    return ckpt
