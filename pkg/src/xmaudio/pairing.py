"""Artwork-to-music pairing: greedy max-similarity matching with exclusion,
pairwise-similarity statistics, and stratified train/test/val splits.

Greedy rule: artworks are processed in input order; each takes the most
similar music track still unassigned, ties broken by lowest music index.
The greedy loop is inherently sequential and is never parallelized.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .embeddings import EmbeddingMatrix, similarity_matrix
from .errors import (
    EmptyInputError,
    InsufficientPoolError,
    MissingStyleError,
    OracleSizeError,
    SplitError,
)

DEFAULT_PROMPT = "Music representing the content of this artwork"
DEFAULT_NEGATIVE_PROMPT = "Low quality"

MANIFEST_FIELDS = (
    "artwork_id",
    "music_id",
    "similarity",
    "description",
    "style",
    "split",
    "prompt",
    "negative_prompt",
)


@dataclass
class PairRecord:
    artwork_id: str
    music_id: str
    similarity: float
    description: str | None = None
    style: str | None = None
    split: str = "train"
    prompt: str = DEFAULT_PROMPT
    negative_prompt: str = DEFAULT_NEGATIVE_PROMPT


@dataclass
class PairingManifest:
    records: list[PairRecord] = field(default_factory=list)
    created_from: list[str] = field(default_factory=list)

    def validate(self):
        artworks = [r.artwork_id for r in self.records]
        music = [r.music_id for r in self.records]
        if len(set(artworks)) != len(artworks):
            raise SplitError("duplicate artwork_id in manifest")
        if len(set(music)) != len(music):
            raise SplitError("duplicate music_id in manifest")

    def __len__(self):
        return len(self.records)


@dataclass
class SimilarityStats:
    max: float
    min: float
    avg: float
    above_avg: int
    below_avg: int
    n: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "max_sim": self.max,
                "min_sim": self.min,
                "avg_sim": self.avg,
                "above_avg": self.above_avg,
                "below_avg": self.below_avg,
            }
        )


def greedy_pair(
    artworks: EmbeddingMatrix,
    music: EmbeddingMatrix,
    descriptions: dict[str, str] | None = None,
    styles: dict[str, str] | None = None,
) -> PairingManifest:
    """Pair each artwork with its most similar unassigned music track."""
    if len(music) < len(artworks):
        raise InsufficientPoolError(
            f"{len(music)} music tracks for {len(artworks)} artworks"
        )
    sim = similarity_matrix(artworks, music)
    return pair_from_similarity(
        sim, artworks.ids, music.ids, descriptions=descriptions, styles=styles
    )


def pair_from_similarity(
    sim: np.ndarray,
    artwork_ids,
    music_ids,
    descriptions=None,
    styles=None,
) -> PairingManifest:
    """Greedy matching over an explicit similarity matrix (rows = artworks)."""
    sim = np.asarray(sim, dtype=np.float64)
    if sim.shape[1] < sim.shape[0]:
        raise InsufficientPoolError(
            f"{sim.shape[1]} music tracks for {sim.shape[0]} artworks"
        )
    available = np.ones(sim.shape[1], dtype=bool)
    records = []
    for i, aid in enumerate(artwork_ids):
        row = np.where(available, sim[i], -np.inf)
        j = int(np.argmax(row))  # argmax takes the lowest index on ties
        available[j] = False
        records.append(
            PairRecord(
                artwork_id=aid,
                music_id=music_ids[j],
                similarity=float(sim[i, j]),
                description=(descriptions or {}).get(aid),
                style=(styles or {}).get(aid),
            )
        )
    return PairingManifest(records=records)


def similarity_stats(values) -> SimilarityStats:
    """Max/min/avg plus the above/below-average partition.

    "Above" means strictly greater than the average; values equal to the
    average count as below, so above + below always equals n.
    """
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("similarity_stats needs at least one value")
    if not np.isfinite(values).all():
        raise EmptyInputError("non-finite similarity value")
    avg = float(values.mean())
    above = int((values > avg).sum())
    return SimilarityStats(
        max=float(values.max()),
        min=float(values.min()),
        avg=avg,
        above_avg=above,
        below_avg=int(values.size) - above,
        n=int(values.size),
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(
    manifest: PairingManifest,
    train_fraction: float,
    val_count: int,
    seed: int,
) -> PairingManifest:
    """Per-style train/test partition, then move val_count test records to val.

    Train counts use round-half-up of train_fraction x style size; the
    remainder goes to test. Validation records are drawn uniformly from the
    test set with the given seed. Record contents other than ``split`` are
    preserved, as is record order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train_fraction must be in (0,1), got {train_fraction}")
    for r in manifest.records:
        if not r.style:
            raise MissingStyleError(f"record {r.artwork_id} has no style label")

    by_style: dict[str, list[int]] = {}
    for idx, r in enumerate(manifest.records):
        by_style.setdefault(r.style, []).append(idx)

    splits = ["test"] * len(manifest.records)
    for style_indices in by_style.values():
        n_train = _round_half_up(train_fraction * len(style_indices))
        for idx in style_indices[:n_train]:
            splits[idx] = "train"

    test_indices = [i for i, s in enumerate(splits) if s == "test"]
    if val_count > len(test_indices):
        raise SplitError(
            f"val_count {val_count} exceeds test-set size {len(test_indices)}"
        )
    rng = np.random.default_rng(seed)
    for idx in rng.choice(len(test_indices), size=val_count, replace=False):
        splits[test_indices[int(idx)]] = "val"

    out = [
        PairRecord(**{**asdict(r), "split": s})
        for r, s in zip(manifest.records, splits)
    ]
    return PairingManifest(records=out, created_from=list(manifest.created_from))


def optimal_pair_oracle(sim: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Maximum-total-similarity perfect matching by exhaustive search.

    Test-scale oracle only (inputs capped at 10x10): every assignment of
    rows to distinct columns is considered, via recursion over used-column
    bitmasks instead of raw permutation lists so the cap stays cheap.
    """
    sim = np.asarray(sim, dtype=np.float64)
    n, m = sim.shape
    if n > 10 or m > 10:
        raise OracleSizeError(f"oracle capped at 10x10, got {n}x{m}")
    if m < n:
        raise InsufficientPoolError(f"{m} columns for {n} rows")

    @functools.lru_cache(maxsize=None)
    def best_from(i: int, used: int) -> float:
        if i == n:
            return 0.0
        return max(
            sim[i, j] + best_from(i + 1, used | (1 << j))
            for j in range(m)
            if not used & (1 << j)
        )

    matching: list[tuple[int, int]] = []
    used = 0
    for i in range(n):
        j = max(
            (j for j in range(m) if not used & (1 << j)),
            key=lambda j: sim[i, j] + best_from(i + 1, used | (1 << j)),
        )
        matching.append((i, j))
        used |= 1 << j
    total = best_from(0, 0)
    best_from.cache_clear()
    return matching, float(total)


# --- manifest persistence (JSON Lines) --------------------------------------

def save_manifest(manifest: PairingManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in manifest.records:
            fh.write(json.dumps({k: getattr(r, k) for k in MANIFEST_FIELDS}))
            fh.write("\n")


def load_manifest(path) -> PairingManifest:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(PairRecord(**json.loads(line)))
    m = PairingManifest(records=records)
    m.validate()
    return m
