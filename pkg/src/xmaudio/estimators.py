"""scikit-learn compatible wrappers around the transform-shaped pieces of
the toolkit, so they drop into Pipeline / get_params tooling.

Only the operations that are genuinely fit/transform shaped live here
(spectrogram extraction, softmax distributions, Gaussian fitting, the
projection layer); file formats and the sequential pairing loop stay in
their functional modules.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import dsp, metrics, nets
from .errors import SampleError


class MelSpectrogramTransformer(BaseEstimator, TransformerMixin):
    """Waveform arrays -> log-mel spectrogram matrices (stateless)."""

    def __init__(self, sample_rate=16000, n_fft=1024, hop=160,
                 n_mels=64, fmin=0.0, fmax=8000.0):
        self.sample_rate = sample_rate
        self.n_fft = n_fft
        self.hop = hop
        self.n_mels = n_mels
        self.fmin = fmin
        self.fmax = fmax

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        params = dsp.StftParams(n_fft=self.n_fft, hop=self.hop)
        out = []
        for x in X:
            buf = dsp.AudioBuffer(np.asarray(x, dtype=np.float64), self.sample_rate)
            out.append(dsp.log_mel(buf, params, self.n_mels, self.fmin, self.fmax).values)
        return out


class SoftmaxDistribution(BaseEstimator, TransformerMixin):
    """Embedding rows -> probability simplex rows via tempered softmax."""

    def __init__(self, temperature=1.0):
        self.temperature = temperature

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = check_array(X, dtype=np.float64)
        return np.vstack([metrics.to_distribution(row, self.temperature) for row in X])


class GaussianEmbeddingStats(BaseEstimator):
    """Fits the mean/covariance summary used by the Fréchet audio metric;
    score(X) is the Fréchet distance between the fit and a second set."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.stats_ = metrics.fit_gaussian(X)
        return self

    def score(self, X, y=None):
        check_is_fitted(self, "stats_")
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise SampleError("need at least 2 rows to fit the comparison set")
        return metrics.fad(self.stats_, metrics.fit_gaussian(X))


class ImageProjection(BaseEstimator, TransformerMixin):
    """Randomly initialized projection layer as a transformer: one
    embedding row in, flattened conditioning tokens out."""

    def __init__(self, in_dim=1024, token_dim=768, n_tokens=1,
                 hidden_dim=1024, seed=0):
        self.in_dim = in_dim
        self.token_dim = token_dim
        self.n_tokens = n_tokens
        self.hidden_dim = hidden_dim
        self.seed = seed

    def fit(self, X, y=None):
        self.params_ = nets.ProjectionParams.init_random(
            np.random.default_rng(self.seed),
            in_dim=self.in_dim, token_dim=self.token_dim,
            n_tokens=self.n_tokens, hidden_dim=self.hidden_dim)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        return np.vstack([
            nets.project_image(row, self.params_).ravel() for row in X
        ])
