"""Embedding record sets and their two interchangeable file encodings.

A record set carries per-token embedding vectors for prompts and generated
outputs, grouped by prompt and trajectory. Two encodings round-trip the same
data: newline-delimited JSON records, and a compact binary layout (magic
"IITR", little-endian, float32 vectors).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

ROLE_PROMPT = "prompt"
ROLE_OUTPUT = "output"

_MAGIC = b"IITR"
_VERSION = 1


@dataclass(frozen=True)
class EmbeddingRecord:
    prompt_id: str
    trajectory_id: str
    role: str
    token_index: int
    vector: np.ndarray


@dataclass
class EmbeddingRecordSet:
    """Validated collection of embedding records.

    Invariants checked at construction: a single shared vector dimension,
    consecutive token indices from 0 within each (trajectory_id, role) group,
    and a prompt group for every prompt_id referenced by an output trajectory.
    """

    records: list[EmbeddingRecord]
    dim: int = field(init=False)

    def __post_init__(self):
        if not self.records:
            raise InvalidInputError("record set is empty")
        dims = {r.vector.shape[-1] for r in self.records}
        if len(dims) != 1:
            raise InvalidInputError(f"mixed vector dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        if self.dim < 1:
            raise InvalidInputError("vector dimension must be >= 1")
        for rec in self.records:
            if rec.role not in (ROLE_PROMPT, ROLE_OUTPUT):
                raise InvalidInputError(f"unknown role {rec.role!r}")
            if rec.token_index < 0:
                raise InvalidInputError("negative token_index")
        groups: dict[tuple[str, str, str], list[int]] = {}
        for rec in self.records:
            groups.setdefault((rec.prompt_id, rec.trajectory_id, rec.role), []).append(
                rec.token_index
            )
        for key, indices in groups.items():
            if sorted(indices) != list(range(len(indices))):
                raise InvalidInputError(
                    f"token indices not consecutive from 0 in group {key}"
                )
        prompt_ids = {r.prompt_id for r in self.records if r.role == ROLE_PROMPT}
        for rec in self.records:
            if rec.role == ROLE_OUTPUT and rec.prompt_id not in prompt_ids:
                raise InvalidInputError(
                    f"output trajectory {rec.trajectory_id!r} has no prompt group "
                    f"for prompt {rec.prompt_id!r}"
                )

    def prompt_vectors(self, prompt_id: str) -> np.ndarray:
        """Prompt token vectors for one prompt, ordered by token index."""
        recs = [
            r
            for r in self.records
            if r.role == ROLE_PROMPT and r.prompt_id == prompt_id
        ]
        if not recs:
            raise InvalidInputError(f"no prompt records for {prompt_id!r}")
        recs.sort(key=lambda r: r.token_index)
        return np.stack([r.vector for r in recs]).astype(float)

    def output_vectors(self, trajectory_id: str) -> np.ndarray:
        recs = [
            r
            for r in self.records
            if r.role == ROLE_OUTPUT and r.trajectory_id == trajectory_id
        ]
        if not recs:
            raise InvalidInputError(f"no output records for {trajectory_id!r}")
        recs.sort(key=lambda r: r.token_index)
        return np.stack([r.vector for r in recs]).astype(float)

    def trajectories(self) -> list[tuple[str, str]]:
        """Ordered unique (prompt_id, trajectory_id) pairs with output tokens."""
        seen = []
        for rec in self.records:
            if rec.role == ROLE_OUTPUT:
                key = (rec.prompt_id, rec.trajectory_id)
                if key not in seen:
                    seen.append(key)
        return seen


def write_records_text(records: EmbeddingRecordSet, path: str | Path) -> None:
    """One JSON object per line; float repr keeps the round-trip lossless."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records.records:
            fh.write(
                json.dumps(
                    {
                        "prompt_id": rec.prompt_id,
                        "trajectory_id": rec.trajectory_id,
                        "role": rec.role,
                        "token_index": rec.token_index,
                        "vector": [float(x) for x in rec.vector],
                    }
                )
            )
            fh.write("\n")


def write_records_binary(records: EmbeddingRecordSet, path: str | Path) -> None:
    """Binary layout: IITR magic, version/dim u32, count u64, then records.

    Vectors are stored as float32; callers holding float64 data that is not
    float32-representable lose precision here by design.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIQ", _VERSION, records.dim, len(records.records)))
        for rec in records.records:
            pid = rec.prompt_id.encode("utf-8")
            tid = rec.trajectory_id.encode("utf-8")
            fh.write(struct.pack("<H", len(pid)))
            fh.write(pid)
            fh.write(struct.pack("<H", len(tid)))
            fh.write(tid)
            role = 0 if rec.role == ROLE_PROMPT else 1
            fh.write(struct.pack("<BI", role, rec.token_index))
            fh.write(np.asarray(rec.vector, dtype="<f4").tobytes())


def _read_text(path: Path) -> EmbeddingRecordSet:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = EmbeddingRecord(
                    prompt_id=str(obj["prompt_id"]),
                    trajectory_id=str(obj["trajectory_id"]),
                    role=str(obj["role"]),
                    token_index=int(obj["token_index"]),
                    vector=np.asarray(obj["vector"], dtype=float),
                )
            except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                raise InvalidInputError(f"{path}:{lineno}: bad record ({exc})") from exc
            records.append(rec)
    return EmbeddingRecordSet(records)


def _read_binary(path: Path) -> EmbeddingRecordSet:
    data = path.read_bytes()
    if data[:4] != _MAGIC:
        raise InvalidInputError(f"{path}: bad magic bytes")
    try:
        version, dim, count = struct.unpack_from("<IIQ", data, 4)
        if version != _VERSION:
            raise InvalidInputError(f"{path}: unsupported version {version}")
        off = 4 + 16
        records = []
        for _ in range(count):
            (plen,) = struct.unpack_from("<H", data, off)
            off += 2
            pid = data[off : off + plen].decode("utf-8")
            off += plen
            (tlen,) = struct.unpack_from("<H", data, off)
            off += 2
            tid = data[off : off + tlen].decode("utf-8")
            off += tlen
            role, token_index = struct.unpack_from("<BI", data, off)
            off += 5
            vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(float)
            off += 4 * dim
            records.append(
                EmbeddingRecord(
                    prompt_id=pid,
                    trajectory_id=tid,
                    role=ROLE_PROMPT if role == 0 else ROLE_OUTPUT,
                    token_index=token_index,
                    vector=vec,
                )
            )
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise InvalidInputError(f"{path}: truncated or corrupt ({exc})") from exc
    if off != len(data):
        raise InvalidInputError(f"{path}: trailing bytes after last record")
    return EmbeddingRecordSet(records)


def read_records(path: str | Path) -> EmbeddingRecordSet:
    """Load a record file, sniffing binary vs. text by the magic bytes."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"{path}: no such file")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return _read_binary(path)
    return _read_text(path)
