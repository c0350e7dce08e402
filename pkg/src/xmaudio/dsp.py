"""Mel-spectrogram front end: WAV ingestion, STFT, mel filterbank,
log-mel extraction, and Griffin-Lim inversion for round-trip checks.

Default extraction profile (documented, not taken from any upstream
extractor): 16 kHz, n_fft 1024, hop 160, periodic Hann window, 64 mel
bands over 0-8000 Hz, natural-log compression with floor 1e-5. Frames
start at sample 0 (no center padding), so a signal of N samples yields
exactly 1 + floor((N - n_fft) / hop) frames.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from .embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from .errors import BandError, FormatError, TooShortError, UnsupportedCodecError

LOG_FLOOR = 1e-5

DEFAULT_PROFILE = dict(
    sample_rate=16000, n_fft=1024, hop=160, n_mels=64, fmin=0.0, fmax=8000.0
)


@dataclass
class AudioBuffer:
    samples: np.ndarray  # mono, float64 in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if self.sample_rate <= 0:
            raise FormatError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.isfinite(self.samples).all():
            raise FormatError("non-finite audio samples")


@dataclass
class StftParams:
    n_fft: int = 1024
    hop: int = 160
    window: str = "hann"

    def __post_init__(self):
        if not (0 < self.hop <= self.n_fft):
            raise FormatError(f"need 0 < hop <= n_fft, got hop={self.hop} n_fft={self.n_fft}")
        if self.n_fft & (self.n_fft - 1):
            raise FormatError(f"n_fft must be a power of two, got {self.n_fft}")
        if self.window != "hann":
            raise FormatError(f"unsupported window {self.window!r}")


@dataclass
class MelSpectrogram:
    values: np.ndarray  # frames x n_mels, natural-log magnitudes
    params: StftParams
    n_mels: int
    fmin: float
    fmax: float
    sample_rate: int

    def param_dict(self) -> dict:
        d = asdict(self.params)
        d.update(n_mels=self.n_mels, fmin=self.fmin, fmax=self.fmax,
                 sample_rate=self.sample_rate, log_floor=LOG_FLOOR)
        return d


# --- WAV I/O ----------------------------------------------------------------

def load_wav(path, target_rate: int) -> AudioBuffer:
    """Read a RIFF/WAVE file (PCM16 or float32, mono or stereo).

    Stereo is downmixed by channel average; resampling to target_rate is
    linear interpolation.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FormatError("not a RIFF/WAVE file")

    fmt = None
    data = None
    off = 12
    while off + 8 <= len(blob):
        cid = blob[off : off + 4]
        (size,) = struct.unpack_from("<I", blob, off + 4)
        body = blob[off + 8 : off + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise FormatError("short fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body)
        elif cid == b"data":
            if len(body) < size:
                raise FormatError("truncated data chunk")
            data = body
        off += 8 + size + (size & 1)
    if fmt is None or data is None:
        raise FormatError("missing fmt or data chunk")

    codec, channels, rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedCodecError(f"{channels} channels unsupported")
    if codec == 1 and bits == 16:
        raw = np.frombuffer(data[: len(data) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif codec == 3 and bits == 32:
        raw = np.frombuffer(data[: len(data) // 4 * 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedCodecError(f"codec {codec} / {bits}-bit unsupported")

    if channels == 2:
        samples = samples[: len(samples) // 2 * 2].reshape(-1, 2).mean(axis=1)

    if rate != target_rate and len(samples) > 1:
        duration = (len(samples) - 1) / rate
        n_out = int(duration * target_rate) + 1
        t_out = np.arange(n_out) / target_rate
        t_in = np.arange(len(samples)) / rate
        samples = np.interp(t_out, t_in, samples)
    return AudioBuffer(samples=np.clip(samples, -1.0, 1.0), sample_rate=target_rate)


def save_wav(buf: AudioBuffer, path) -> None:
    """Write 16-bit PCM mono."""
    pcm = np.clip(np.round(buf.samples * 32767.0), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, buf.sample_rate,
                                       buf.sample_rate * 2, 2, 16))
        fh.write(b"data" + struct.pack("<I", len(data)) + data)


# --- STFT -------------------------------------------------------------------

def _hann(n: int) -> np.ndarray:
    # periodic Hann: integer-bin tones leak into at most the adjacent bin
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def frame_count(n_samples: int, p: StftParams) -> int:
    return 1 + (n_samples - p.n_fft) // p.hop


def _frames(samples: np.ndarray, p: StftParams) -> np.ndarray:
    if len(samples) < p.n_fft:
        raise TooShortError(
            f"signal of {len(samples)} samples shorter than n_fft {p.n_fft}"
        )
    n = frame_count(len(samples), p)
    idx = np.arange(p.n_fft)[None, :] + p.hop * np.arange(n)[:, None]
    return samples[idx]


def stft(a: AudioBuffer, p: StftParams) -> np.ndarray:
    """Complex one-sided STFT, frames x (n_fft/2 + 1), float64 math."""
    return np.fft.rfft(_frames(a.samples, p) * _hann(p.n_fft), axis=1)


def stft_magnitude(a: AudioBuffer, p: StftParams) -> np.ndarray:
    return np.abs(stft(a, p))


# --- mel filterbank ---------------------------------------------------------

def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int,
                   fmin: float, fmax: float) -> np.ndarray:
    """Triangular filters with centers equally spaced on the mel scale.

    Returns n_mels x (n_fft/2 + 1); weights are evaluated at each FFT bin's
    center frequency, so every row is nonzero for sane band/bin ratios.
    """
    if not (0 <= fmin < fmax <= sample_rate / 2):
        raise BandError(f"invalid band [{fmin}, {fmax}] at rate {sample_rate}")
    if n_mels < 1:
        raise BandError(f"n_mels must be >= 1, got {n_mels}")
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    fb = np.zeros((n_mels, n_fft // 2 + 1))
    for i in range(n_mels):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        up = (bin_freqs - lo) / (center - lo)
        down = (hi - bin_freqs) / (hi - center)
        fb[i] = np.maximum(0.0, np.minimum(up, down))
        if not fb[i].any():
            # band narrower than a bin: keep the nearest bin so rows stay nonzero
            fb[i, int(np.argmin(np.abs(bin_freqs - center)))] = 1.0
    return fb


def log_mel(a: AudioBuffer, p: StftParams, n_mels: int,
            fmin: float, fmax: float) -> MelSpectrogram:
    """Natural-log mel power spectrogram, floored at 1e-5."""
    mag = stft_magnitude(a, p)
    fb = mel_filterbank(a.sample_rate, p.n_fft, n_mels, fmin, fmax)
    power = (mag ** 2) @ fb.T
    values = np.log(np.maximum(power, LOG_FLOOR))
    return MelSpectrogram(values=values, params=p, n_mels=n_mels,
                          fmin=fmin, fmax=fmax, sample_rate=a.sample_rate)


def mel_to_linear(m: MelSpectrogram) -> np.ndarray:
    """Approximate linear magnitude via the filterbank pseudo-inverse."""
    fb = mel_filterbank(m.sample_rate, m.params.n_fft, m.n_mels, m.fmin, m.fmax)
    power = np.exp(m.values) @ np.linalg.pinv(fb).T
    return np.sqrt(np.maximum(power, 0.0))


# --- Griffin-Lim ------------------------------------------------------------

def _istft(spec: np.ndarray, p: StftParams, n_samples: int) -> np.ndarray:
    win = _hann(p.n_fft)
    out = np.zeros(n_samples)
    norm = np.zeros(n_samples)
    frames = np.fft.irfft(spec, n=p.n_fft, axis=1)
    for k in range(spec.shape[0]):
        s = k * p.hop
        out[s : s + p.n_fft] += frames[k] * win
        norm[s : s + p.n_fft] += win ** 2
    return out / np.maximum(norm, 1e-10)


def griffin_lim(target, iterations: int, seed: int,
                params: StftParams | None = None,
                sample_rate: int | None = None,
                momentum: float = 0.9) -> AudioBuffer:
    """Phase reconstruction from a magnitude spectrogram.

    Accepts either a linear magnitude matrix (frames x bins) with explicit
    params/sample_rate, or a MelSpectrogram (inverted through the filterbank
    pseudo-inverse first). Iterates projection between the magnitude
    constraint and the consistent-spectrogram set, with momentum on the
    spectrogram update. Phase starts near zero with a small seeded jitter;
    the whole run is deterministic given seed.
    """
    if isinstance(target, MelSpectrogram):
        mag = mel_to_linear(target)
        params = target.params
        sample_rate = target.sample_rate
    else:
        mag = np.asarray(target, dtype=np.float64)
        if params is None or sample_rate is None:
            raise FormatError("linear-magnitude input needs params and sample_rate")
    if iterations < 1:
        raise FormatError(f"iterations must be >= 1, got {iterations}")

    n_samples = params.n_fft + params.hop * (mag.shape[0] - 1)
    rng = np.random.default_rng(seed)
    phase = np.exp(2j * np.pi * 1e-3 * rng.standard_normal(mag.shape))
    estimate = mag * phase
    prev = None
    x = np.zeros(n_samples)
    for _ in range(iterations):
        x = _istft(estimate, params, n_samples)
        spec = stft(AudioBuffer(x, sample_rate), params)
        accel = spec + momentum * (spec - prev) if prev is not None else spec
        prev = spec
        estimate = mag * np.exp(1j * np.angle(accel))
    return AudioBuffer(samples=np.clip(x, -1.0, 1.0), sample_rate=sample_rate)


# --- persistence ------------------------------------------------------------

def save_melspec(m: MelSpectrogram, path, sidecar_path) -> None:
    """Spectrogram as an EMB1 container (one row per frame) + JSON sidecar."""
    mat = EmbeddingMatrix(
        ids=[f"frame_{i:06d}" for i in range(m.values.shape[0])],
        dim=m.n_mels,
        data=m.values.astype(np.float32),
    )
    save_embeddings(mat, path)
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(m.param_dict(), fh, indent=2)


def load_melspec(path, sidecar_path) -> MelSpectrogram:
    mat = load_embeddings(path)
    with open(sidecar_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    p = StftParams(n_fft=meta["n_fft"], hop=meta["hop"], window=meta["window"])
    return MelSpectrogram(values=mat.data.astype(np.float64), params=p,
                          n_mels=meta["n_mels"], fmin=meta["fmin"],
                          fmax=meta["fmax"], sample_rate=meta["sample_rate"])
