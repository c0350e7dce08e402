"""Objective evaluation: Fréchet distance between Gaussian fits of audio
embedding sets, KL divergence between softmax-derived track distributions,
and the embedding cosine score, plus the matrix-square-root machinery.

The Fréchet term uses the symmetric product sqrtm(S_b^(1/2) S_e S_b^(1/2)),
which matches the trace of sqrtm(S_b S_e) for PSD inputs while staying
symmetric and numerically stable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix, cosine_similarity
from .errors import (
    DimError,
    IdLookupError,
    SampleError,
    SupportError,
    SymmetryError,
)
from .pairing import PairingManifest

_SYM_TOL = 1e-9
_EIG_FLOOR = -1e-8
_JITTER = 1e-6
_SMOOTHING = 1e-10


@dataclass
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    @property
    def dim(self) -> int:
        return len(self.mean)


@dataclass
class MetricReport:
    fad: float
    kl_div: float
    ibsc_artwork: float
    ibsc_groundtruth: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "fad": self.fad,
                "kl_div": self.kl_div,
                "ibsc_artw_gemus": self.ibsc_artwork,
                "ibsc_gtmus_gemus": self.ibsc_groundtruth,
            }
        )


def fit_gaussian(embs: EmbeddingMatrix | np.ndarray) -> GaussianStats:
    """Sample mean and unbiased (n-1) covariance, symmetrized."""
    data = embs.data if isinstance(embs, EmbeddingMatrix) else np.asarray(embs)
    data = data.astype(np.float64)
    n = data.shape[0]
    if n < 2:
        raise SampleError(f"need at least 2 samples, got {n}")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianStats(mean=mean, cov=cov, n=n)


def matrix_sqrt_psd(A: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below zero (rounding noise down to -1e-8) are clamped;
    anything more negative means the input was not PSD and a jittered
    retry is the caller's business.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SymmetryError(f"expected a square matrix, got {A.shape}")
    if not np.allclose(A, A.T, atol=_SYM_TOL, rtol=0.0):
        raise SymmetryError("input matrix is not symmetric")
    w, V = np.linalg.eigh(A)
    w = np.maximum(w, 0.0)
    return (V * np.sqrt(w)) @ V.T


def fad(b: GaussianStats, e: GaussianStats) -> float:
    """||mu_b - mu_e||^2 + Tr(S_b + S_e - 2 sqrtm(S_b^(1/2) S_e S_b^(1/2)))."""
    if b.dim != e.dim:
        raise DimError(f"dimension mismatch: {b.dim} vs {e.dim}")
    cov_b, cov_e = b.cov, e.cov
    if min(np.linalg.eigvalsh(cov_b).min(), np.linalg.eigvalsh(cov_e).min()) < _EIG_FLOOR:
        jitter = _JITTER * np.eye(b.dim)
        cov_b = cov_b + jitter
        cov_e = cov_e + jitter
    sqrt_b = matrix_sqrt_psd(cov_b)
    inner = sqrt_b @ cov_e @ sqrt_b
    cross = matrix_sqrt_psd(0.5 * (inner + inner.T))
    diff = b.mean - e.mean
    value = float(diff @ diff + np.trace(cov_b) + np.trace(cov_e) - 2.0 * np.trace(cross))
    return max(value, 0.0)


def kl_div(p, q) -> float:
    """Sum of p_i ln(p_i / q_i) in nats, with 0 ln(0/q) := 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimError(f"shape mismatch: {p.shape} vs {q.shape}")
    if (p < 0).any() or (q < 0).any():
        raise SupportError("negative probability entry")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise SupportError("inputs must sum to 1 within 1e-9")
    mask = p > 0
    if (q[mask] == 0).any():
        raise SupportError("q has zero mass where p is positive")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def to_distribution(v, temperature: float = 1.0) -> np.ndarray:
    """Softmax over an embedding at the given temperature, max-subtracted,
    with additive 1e-10 smoothing before renormalization."""
    if temperature <= 0:
        raise SupportError(f"temperature must be positive, got {temperature}")
    v = np.asarray(v, dtype=np.float64).ravel() / temperature
    ex = np.exp(v - v.max())
    dist = ex / ex.sum()
    dist = dist + _SMOOTHING
    return dist / dist.sum()


def ibsc(agt, gen) -> float:
    """Cosine similarity between a reference embedding and a generated one."""
    return cosine_similarity(agt, gen)


def evaluate_manifest(
    manifest: PairingManifest,
    generated: EmbeddingMatrix,
    groundtruth: EmbeddingMatrix,
    artworks: EmbeddingMatrix,
    temperature: float = 1.0,
) -> MetricReport:
    """Aggregate report over a paired manifest.

    Generated embeddings are keyed by the pair's music_id (one generated
    track per pair); artworks by artwork_id. FAD is computed between
    Gaussian fits of the generated and ground-truth embedding sets; KL and
    the cosine scores are per-pair averages.
    """
    gen_idx = generated.index()
    gt_idx = groundtruth.index()
    art_idx = artworks.index()

    gen_rows, gt_rows = [], []
    kls, ib_art, ib_gt = [], [], []
    for r in manifest.records:
        try:
            g = generated.data[gen_idx[r.music_id]]
            t = groundtruth.data[gt_idx[r.music_id]]
            a = artworks.data[art_idx[r.artwork_id]]
        except KeyError as e:
            raise IdLookupError(f"id not found in embedding store: {e}") from e
        gen_rows.append(g)
        gt_rows.append(t)
        kls.append(kl_div(to_distribution(t, temperature), to_distribution(g, temperature)))
        ib_art.append(ibsc(a, g))
        ib_gt.append(ibsc(t, g))

    if not manifest.records:
        raise IdLookupError("empty manifest")

    def _stats(rows):
        arr = np.array(rows, dtype=np.float64)
        if arr.shape[0] == 1:
            # single pair: degenerate point distribution, zero covariance
            d = arr.shape[1]
            return GaussianStats(mean=arr[0], cov=np.zeros((d, d)), n=1)
        return fit_gaussian(arr)

    return MetricReport(
        fad=fad(_stats(gt_rows), _stats(gen_rows)),
        kl_div=float(np.mean(kls)),
        ibsc_artwork=float(np.mean(ib_art)),
        ibsc_groundtruth=float(np.mean(ib_gt)),
    )
