"""Named embedding vectors in a bit-exact binary container, plus the
cosine-similarity primitive the rest of the toolkit builds on.

File layout ("EMB1"):
    bytes 0-3   ASCII magic "EMB1"
    u32 LE      version (currently 1)
    u32 LE      vector dimension
    u64 LE      record count
    ids block   count x (u16 LE byte length + UTF-8 bytes)
    data block  count x dim IEEE-754 float32 LE, row-major
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataError,
    DimError,
    DuplicateIdError,
    FormatError,
    IoError,
    TruncationError,
    ZeroNormError,
)

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


@dataclass
class EmbeddingMatrix:
    """Ordered, named float32 vectors of a common dimension.

    Immutable by convention after construction; safe to share across
    concurrent readers.
    """

    ids: list[str]
    dim: int
    data: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.data is None:
            self.data = np.zeros((0, self.dim), dtype=np.float32)
        self.data = np.asarray(self.data, dtype=np.float32).reshape(len(self.ids), self.dim)
        self.validate()

    def validate(self):
        if self.dim < 1:
            raise DimError(f"dim must be >= 1, got {self.dim}")
        if len(set(self.ids)) != len(self.ids):
            raise DuplicateIdError("duplicate ids in embedding matrix")
        if any(not i for i in self.ids):
            raise DataError("empty id in embedding matrix")
        if not np.isfinite(self.data).all():
            raise DataError("non-finite values in embedding data")

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.dim == other.dim
            and self.data.tobytes() == other.data.tobytes()
        )

    def row(self, id_: str) -> np.ndarray:
        try:
            return self.data[self.ids.index(id_)]
        except ValueError:
            raise KeyError(id_) from None

    def index(self) -> dict[str, int]:
        return {i: k for k, i in enumerate(self.ids)}


def save_embeddings(m: EmbeddingMatrix, path) -> None:
    """Write ``m`` to ``path`` in the EMB1 container format."""
    m.validate()
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, m.dim, len(m.ids)))
            for id_ in m.ids:
                raw = id_.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise IoError(f"id too long for container: {id_[:32]}...")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
            fh.write(np.ascontiguousarray(m.data, dtype="<f4").tobytes())
    except OSError as e:
        raise IoError(str(e)) from e


def load_embeddings(path) -> EmbeddingMatrix:
    """Read an EMB1 container; row order equals on-disk id order."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as e:
        raise IoError(str(e)) from e

    if len(blob) < _HEADER.size:
        raise TruncationError(f"file shorter than EMB1 header: {len(blob)} bytes")
    magic, version, dim, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if dim < 1:
        raise FormatError(f"invalid dimension {dim}")

    off = _HEADER.size
    ids: list[str] = []
    seen = set()
    for _ in range(count):
        if off + 2 > len(blob):
            raise TruncationError("truncated ids block")
        (n,) = struct.unpack_from("<H", blob, off)
        off += 2
        if off + n > len(blob):
            raise TruncationError("truncated id payload")
        try:
            id_ = blob[off : off + n].decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"undecodable id: {e}") from e
        off += n
        if id_ in seen:
            raise DuplicateIdError(f"duplicate id {id_!r}")
        seen.add(id_)
        ids.append(id_)

    need = count * dim * 4
    if len(blob) - off < need:
        raise TruncationError(
            f"data block needs {need} bytes, found {len(blob) - off}"
        )
    data = np.frombuffer(blob[off : off + need], dtype="<f4").reshape(count, dim)
    if not np.isfinite(data).all():
        raise DataError("NaN or infinity in data block")
    return EmbeddingMatrix(ids=ids, dim=dim, data=data.copy())


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Accumulation is done in float64 regardless of storage dtype.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimError(f"length mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity undefined for zero-norm vector")
    return float(np.clip(a.dot(b) / (na * nb), -1.0, 1.0))


def similarity_matrix(rows: EmbeddingMatrix, cols: EmbeddingMatrix) -> np.ndarray:
    """All-pairs cosine similarities, entry (i, j) = cos(rows[i], cols[j])."""
    if rows.dim != cols.dim:
        raise DimError(f"dimension mismatch: {rows.dim} vs {cols.dim}")
    a = rows.data.astype(np.float64)
    b = cols.data.astype(np.float64)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if (na == 0.0).any() or (nb == 0.0).any():
        raise ZeroNormError("zero-norm row encountered in similarity_matrix")
    sim = (a @ b.T) / np.outer(na, nb)
    return np.clip(sim, -1.0, 1.0)
