"""Trainable pieces with hand-written reverse-mode gradients: the image
projection layer (two linears around a GELU), a small conditional MLP
denoiser with sinusoidal timestep embedding, the AdamW optimizer with
linear warmup, and the toy training loop over the diffusion loss stack.

All math is float64; gradient checks compare against central finite
differences at 1e-4 relative error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import erf

from .diffusion import NoiseSchedule, add_noise, make_schedule, mse_loss, snr_weight
from .embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from .errors import ConfigError, GradError, ShapeError

TIME_EMB_DIM = 32

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


_ACTIVATIONS = {
    "gelu": (gelu, gelu_grad),
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2),
}


def timestep_embedding(t: int, dim: int = TIME_EMB_DIM) -> np.ndarray:
    """Sinusoidal embedding, interleaved sin/cos over log-spaced frequencies."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    angles = t * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])


# --- image projection layer --------------------------------------------------

@dataclass
class ProjectionParams:
    """reshape(W2 @ act(W1 @ emb + b1) + b2) into n_tokens x token_dim."""

    in_dim: int = 1024
    token_dim: int = 768
    n_tokens: int = 1
    hidden_dim: int = 1024
    activation: str = "gelu"
    W1: np.ndarray = None  # type: ignore[assignment]
    b1: np.ndarray = None  # type: ignore[assignment]
    W2: np.ndarray = None  # type: ignore[assignment]
    b2: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.n_tokens < 1:
            raise ShapeError(f"n_tokens must be >= 1, got {self.n_tokens}")
        out = self.n_tokens * self.token_dim
        if self.W1 is None:
            self.W1 = np.zeros((self.hidden_dim, self.in_dim))
            self.b1 = np.zeros(self.hidden_dim)
            self.W2 = np.zeros((out, self.hidden_dim))
            self.b2 = np.zeros(out)
        for name, shape in self.shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ShapeError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.isfinite(arr).all():
                raise GradError(f"non-finite values in {name}")

    def shapes(self) -> dict[str, tuple]:
        out = self.n_tokens * self.token_dim
        return {
            "W1": (self.hidden_dim, self.in_dim),
            "b1": (self.hidden_dim,),
            "W2": (out, self.hidden_dim),
            "b2": (out,),
        }

    @classmethod
    def init_random(cls, rng: np.random.Generator, scale: float = 0.05, **kw):
        p = cls(**kw)
        p.W1 = rng.standard_normal(p.W1.shape) * scale
        p.b1 = rng.standard_normal(p.b1.shape) * scale
        p.W2 = rng.standard_normal(p.W2.shape) * scale
        p.b2 = rng.standard_normal(p.b2.shape) * scale
        return p


def project_image(emb: np.ndarray, p: ProjectionParams) -> np.ndarray:
    """Map one embedding to n_tokens x token_dim conditioning tokens."""
    emb = np.asarray(emb, dtype=np.float64).ravel()
    if emb.shape != (p.in_dim,):
        raise ShapeError(f"embedding has shape {emb.shape}, expected ({p.in_dim},)")
    act, _ = _ACTIVATIONS[p.activation]
    hidden = act(p.W1 @ emb + p.b1)
    return (p.W2 @ hidden + p.b2).reshape(p.n_tokens, p.token_dim)


def projection_backward(emb: np.ndarray, p: ProjectionParams,
                        upstream: np.ndarray):
    """Exact reverse-mode gradients of project_image.

    Returns (grads dict keyed like ProjectionParams.shapes(), input gradient).
    """
    emb = np.asarray(emb, dtype=np.float64).ravel()
    if emb.shape != (p.in_dim,):
        raise ShapeError(f"embedding has shape {emb.shape}, expected ({p.in_dim},)")
    upstream = np.asarray(upstream, dtype=np.float64).reshape(p.n_tokens * p.token_dim)
    act, dact = _ACTIVATIONS[p.activation]
    pre = p.W1 @ emb + p.b1
    hidden = act(pre)
    d_hidden = (p.W2.T @ upstream) * dact(pre)
    grads = {
        "W2": np.outer(upstream, hidden),
        "b2": upstream.copy(),
        "W1": np.outer(d_hidden, emb),
        "b1": d_hidden,
    }
    return grads, p.W1.T @ d_hidden


# --- toy conditional denoiser -------------------------------------------------

@dataclass
class DenoiserParams:
    """Three-layer tanh MLP: (latent + time emb + condition) -> latent."""

    latent_dim: int
    cond_dim: int
    hidden_dim: int = 64
    time_dim: int = TIME_EMB_DIM
    W1: np.ndarray = None  # type: ignore[assignment]
    b1: np.ndarray = None  # type: ignore[assignment]
    W2: np.ndarray = None  # type: ignore[assignment]
    b2: np.ndarray = None  # type: ignore[assignment]
    W3: np.ndarray = None  # type: ignore[assignment]
    b3: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        d_in = self.latent_dim + self.time_dim + self.cond_dim
        if self.W1 is None:
            self.W1 = np.zeros((self.hidden_dim, d_in))
            self.b1 = np.zeros(self.hidden_dim)
            self.W2 = np.zeros((self.hidden_dim, self.hidden_dim))
            self.b2 = np.zeros(self.hidden_dim)
            self.W3 = np.zeros((self.latent_dim, self.hidden_dim))
            self.b3 = np.zeros(self.latent_dim)
        for name, shape in self.shapes().items():
            if getattr(self, name).shape != shape:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    def shapes(self) -> dict[str, tuple]:
        d_in = self.latent_dim + self.time_dim + self.cond_dim
        return {
            "W1": (self.hidden_dim, d_in),
            "b1": (self.hidden_dim,),
            "W2": (self.hidden_dim, self.hidden_dim),
            "b2": (self.hidden_dim,),
            "W3": (self.latent_dim, self.hidden_dim),
            "b3": (self.latent_dim,),
        }

    @classmethod
    def init_random(cls, rng: np.random.Generator, scale: float = 0.2, **kw):
        d = cls(**kw)
        for name, shape in d.shapes().items():
            setattr(d, name, rng.standard_normal(shape) * scale)
        return d


def denoiser_forward(xt, t: int, cond, d: DenoiserParams, _cache=None) -> np.ndarray:
    xt = np.asarray(xt, dtype=np.float64).ravel()
    cond = np.asarray(cond, dtype=np.float64).ravel()
    if xt.shape != (d.latent_dim,) or cond.shape != (d.cond_dim,):
        raise ShapeError(
            f"latent {xt.shape} / condition {cond.shape} do not match "
            f"({d.latent_dim},) / ({d.cond_dim},)"
        )
    z = np.concatenate([xt, timestep_embedding(t, d.time_dim), cond])
    pre1 = d.W1 @ z + d.b1
    h1 = np.tanh(pre1)
    pre2 = d.W2 @ h1 + d.b2
    h2 = np.tanh(pre2)
    out = d.W3 @ h2 + d.b3
    if _cache is not None:
        _cache.update(z=z, pre1=pre1, h1=h1, pre2=pre2, h2=h2)
    return out


def denoiser_backward(cache: dict, d: DenoiserParams, upstream: np.ndarray):
    """Gradients for denoiser_forward given its cache and dL/d(out).

    Returns (grads dict, gradient w.r.t. the condition slice of the input).
    """
    upstream = np.asarray(upstream, dtype=np.float64).ravel()
    d_h2 = d.W3.T @ upstream
    d_pre2 = d_h2 * (1.0 - cache["h2"] ** 2)
    d_h1 = d.W2.T @ d_pre2
    d_pre1 = d_h1 * (1.0 - cache["h1"] ** 2)
    d_z = d.W1.T @ d_pre1
    grads = {
        "W3": np.outer(upstream, cache["h2"]),
        "b3": upstream.copy(),
        "W2": np.outer(d_pre2, cache["h1"]),
        "b2": d_pre2,
        "W1": np.outer(d_pre1, cache["z"]),
        "b1": d_pre1,
    }
    return grads, d_z[d.latent_dim + d.time_dim :]


# --- AdamW -------------------------------------------------------------------

@dataclass
class OptimizerState:
    lr: float = 2e-5
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01
    warmup_steps: int = 500
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def effective_lr(self, step: int | None = None) -> float:
        s = self.step if step is None else step
        if self.warmup_steps > 0:
            return self.lr * min(1.0, s / self.warmup_steps)
        return self.lr


def adamw_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
               state: OptimizerState) -> dict[str, np.ndarray]:
    """One decoupled-weight-decay Adam update with bias correction and
    linear learning-rate warmup. Returns new params; state mutates."""
    state.step += 1
    b1, b2 = state.betas
    lr = state.effective_lr()
    out = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        if not np.isfinite(g).all():
            raise GradError(f"non-finite gradient for {name}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** state.step)
        v_hat = v / (1.0 - b2 ** state.step)
        out[name] = p - lr * (m_hat / (np.sqrt(v_hat) + state.eps)
                              + state.weight_decay * p)
    return out


# --- toy training loop ---------------------------------------------------------

@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 4
    accumulation: int = 4
    lr: float = 2e-5
    warmup_steps: int = 500
    weight_decay: float = 0.01
    seed: int = 0
    # schedule
    T: int = 100
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    gamma: float = 5.0
    # toy model dims
    cond_dim: int = 16
    latent_dim: int = 8
    token_dim: int = 16
    n_tokens: int = 1
    proj_hidden: int = 32
    den_hidden: int = 64

    def validate(self):
        if self.steps < 1 or self.batch_size < 1 or self.accumulation < 1:
            raise ConfigError("steps, batch_size, and accumulation must be >= 1")
        if self.lr < 0 or self.warmup_steps < 0:
            raise ConfigError("lr and warmup_steps must be non-negative")


@dataclass
class TrainReport:
    losses: list[float]
    lrs: list[float]
    params: dict[str, np.ndarray]

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for i, (loss, lr) in enumerate(zip(self.losses, self.lrs)):
                fh.write(json.dumps({"step": i + 1, "loss": loss, "lr": lr}) + "\n")


def make_synthetic_dataset(n: int, cond_dim: int, latent_dim: int, seed: int,
                           noise_scale: float = 0.1):
    """Latents are a fixed linear map of the condition plus small noise."""
    rng = np.random.default_rng(seed)
    mapping = rng.standard_normal((latent_dim, cond_dim)) / np.sqrt(cond_dim)
    conds = rng.standard_normal((n, cond_dim))
    latents = conds @ mapping.T + noise_scale * rng.standard_normal((n, latent_dim))
    return [(conds[i], latents[i]) for i in range(n)]


def _item_loss_and_grads(cond, x0, t, eps, sched, proj, den):
    """Forward + backward for one training example.

    Loss contribution is snr_weight(t) * mse(pred, eps); returned grads are
    d(loss)/d(param) for this single item, keyed "proj.X" / "den.X".
    """
    tokens = project_image(cond, proj)
    c = tokens.ravel()
    nl = add_noise(x0, eps, t, sched)
    cache: dict = {}
    pred = denoiser_forward(nl.xt, t, c, den, _cache=cache)
    w = snr_weight(t, sched)
    loss = w * mse_loss(pred, eps)
    d_pred = w * 2.0 * (pred - eps) / pred.size
    den_grads, d_cond = denoiser_backward(cache, den, d_pred)
    proj_grads, _ = projection_backward(cond, proj, d_cond)
    grads = {f"den.{k}": v for k, v in den_grads.items()}
    grads.update({f"proj.{k}": v for k, v in proj_grads.items()})
    return loss, grads


def train_toy(dataset, config: TrainConfig) -> TrainReport:
    """Train projection + denoiser on (condition, latent) pairs.

    Each optimizer step consumes batch_size x accumulation examples drawn
    from one seeded stream, so accumulation regroups micro-batches without
    changing which examples (or noise draws) a step sees. Replay is
    deterministic given seed + config.
    """
    config.validate()
    if not dataset:
        raise ConfigError("empty dataset")
    rng = np.random.default_rng(config.seed)
    sched = make_schedule(config.T, config.beta_start, config.beta_end, config.gamma)

    proj = ProjectionParams.init_random(
        rng, in_dim=config.cond_dim, token_dim=config.token_dim,
        n_tokens=config.n_tokens, hidden_dim=config.proj_hidden)
    den = DenoiserParams.init_random(
        rng, latent_dim=config.latent_dim, cond_dim=config.token_dim * config.n_tokens,
        hidden_dim=config.den_hidden)

    params: dict[str, np.ndarray] = {}
    params.update({f"proj.{k}": getattr(proj, k) for k in proj.shapes()})
    params.update({f"den.{k}": getattr(den, k) for k in den.shapes()})
    state = OptimizerState(lr=config.lr, warmup_steps=config.warmup_steps,
                           weight_decay=config.weight_decay)

    per_step = config.batch_size * config.accumulation
    losses, lrs = [], []
    for _ in range(config.steps):
        idx = rng.integers(0, len(dataset), size=per_step)
        ts = rng.integers(0, config.T, size=per_step)
        epss = rng.standard_normal((per_step, config.latent_dim))

        for k in proj.shapes():
            setattr(proj, k, params[f"proj.{k}"])
        for k in den.shapes():
            setattr(den, k, params[f"den.{k}"])

        acc = {name: np.zeros_like(p) for name, p in params.items()}
        total_loss = 0.0
        for j in range(per_step):
            cond, x0 = dataset[int(idx[j])]
            loss, grads = _item_loss_and_grads(
                cond, x0, int(ts[j]), epss[j], sched, proj, den)
            total_loss += loss
            for name, g in grads.items():
                acc[name] += g
        for name in acc:
            acc[name] /= per_step
        params = adamw_step(params, acc, state)
        losses.append(total_loss / per_step)
        lrs.append(state.effective_lr())
    return TrainReport(losses=losses, lrs=lrs, params=params)


# --- checkpoints ---------------------------------------------------------------

def save_checkpoint(params: dict[str, np.ndarray], path, shape_path) -> None:
    """Flattened tensors in an EMB1 container, zero-padded to a common
    width; true shapes live in the JSON sidecar."""
    names = sorted(params)
    width = max(int(np.prod(params[n].shape)) for n in names) if names else 1
    data = np.zeros((len(names), width), dtype=np.float32)
    shapes = {}
    for i, n in enumerate(names):
        flat = np.asarray(params[n], dtype=np.float32).ravel()
        data[i, : flat.size] = flat
        shapes[n] = list(params[n].shape)
    save_embeddings(EmbeddingMatrix(ids=names, dim=width, data=data), path)
    with open(shape_path, "w", encoding="utf-8") as fh:
        json.dump(shapes, fh, indent=2)


def load_checkpoint(path, shape_path) -> dict[str, np.ndarray]:
    mat = load_embeddings(path)
    with open(shape_path, encoding="utf-8") as fh:
        shapes = json.load(fh)
    out = {}
    for i, n in enumerate(mat.ids):
        shape = tuple(shapes[n])
        size = int(np.prod(shape))
        out[n] = mat.data[i, :size].astype(np.float64).reshape(shape)
    return out
