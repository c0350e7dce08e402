"""Cross-modal artwork/music toolkit: embedding pairing, mel-spectrogram
extraction, diffusion-loss math, and objective audio metrics."""

from .embeddings import (
    EmbeddingMatrix,
    cosine_similarity,
    load_embeddings,
    save_embeddings,
    similarity_matrix,
)
from .pairing import (
    PairRecord,
    PairingManifest,
    SimilarityStats,
    greedy_pair,
    load_manifest,
    optimal_pair_oracle,
    save_manifest,
    similarity_stats,
    stratified_split,
)
from .diffusion import (
    NoiseSchedule,
    NoisyLatent,
    add_noise,
    make_schedule,
    mse_loss,
    sample,
    snr_weight,
    weighted_loss,
)
from .metrics import (
    GaussianStats,
    MetricReport,
    evaluate_manifest,
    fad,
    fit_gaussian,
    ibsc,
    kl_div,
    matrix_sqrt_psd,
    to_distribution,
)

__version__ = "0.1.0"
