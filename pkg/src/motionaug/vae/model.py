"""Conditional motion VAE with a mixture-of-experts decoder.

Encoder: ``[x_t, x_{t-1}]`` -> FC -> residual FC -> residual FC -> FC -> (mu, sigma).
Decoder: ``z`` -> expansion layer ``z_exp`` (same width as a frame); the gate
network and each expert read ``[z_exp, x_{t-1}]``; the expert outputs are
blended by the softmax gate weights.

Frames are standardized with per-feature statistics stored on the model;
the networks only ever see standardized values.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .. import tensornet as tn
from ..motion.frames import FRAME_DIM

MODEL_KIND = "motion-vae"
MODEL_VERSION = 1
STD_FLOOR = 1e-2
LOG_SIGMA_MIN = float(np.log(1e-6))
LOG_SIGMA_MAX = float(np.log(1e3))


class ModelFormatError(ValueError):
    pass


@dataclass
class VaeConfig:
    input_dim: int = FRAME_DIM
    latent_dim: int = 40
    expanded_latent_dim: int = FRAME_DIM
    hidden_width: int = 256
    gate_width: int = 64
    n_experts: int = 6

    def __post_init__(self):
        for key, val in asdict(self).items():
            if int(val) <= 0:
                raise ValueError(f"{key} must be positive")


class VaeModel:
    def __init__(self, config: VaeConfig | None = None, seed: int = 0, params: tn.ParamStore | None = None):
        self.config = config or VaeConfig()
        self.params = params if params is not None else _init_params(self.config, seed)
        self.mean = np.zeros(self.config.input_dim)
        self.std = np.ones(self.config.input_dim)
        self.trained = False

    def fit_normalization(self, frames) -> None:
        data = np.concatenate([np.asarray(f, dtype=np.float64) for f in frames], axis=0)
        self.mean = data.mean(axis=0)
        self.std = np.maximum(data.std(axis=0), STD_FLOOR)

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, xn) -> np.ndarray:
        return np.asarray(xn, dtype=np.float64) * self.std + self.mean

    def param_count(self) -> int:
        return self.params.count()

    # graph builders on standardized tensors --------------------------------
    def _layer(self, name, x) -> tn.Tensor:
        return tn.affine(x, self.params[name + ".W"], self.params[name + ".b"])

    def encode_graph(self, xn_t, xn_prev) -> tuple[tn.Tensor, tn.Tensor, tn.Tensor]:
        """Returns (mu, sigma, log_sigma) tensors."""
        h = tn.elu(self._layer("enc.fc1", tn.concat(xn_t, xn_prev)))
        h = h + tn.elu(self._layer("enc.fc2", h))
        h = h + tn.elu(self._layer("enc.fc3", h))
        h = tn.elu(self._layer("enc.fc4", h))
        mu = self._layer("enc.mu", h)
        log_sigma = tn.clip(self._layer("enc.log_sigma", h), LOG_SIGMA_MIN, LOG_SIGMA_MAX)
        return mu, tn.exp(log_sigma), log_sigma

    def decode_graph(self, z, xn_prev) -> tuple[tn.Tensor, tn.Tensor]:
        """Returns (standardized prediction, gate weights)."""
        z_exp = tn.elu(self._layer("dec.expand", z))
        inp = tn.concat(z_exp, xn_prev)
        g = tn.elu(self._layer("gate.fc1", inp))
        g = tn.elu(self._layer("gate.fc2", g))
        gates = tn.softmax(self._layer("gate.out", g))
        out = None
        for k in range(self.config.n_experts):
            pre = f"expert{k}"
            h = tn.elu(self._layer(pre + ".fc1", inp))
            h = h + tn.elu(self._layer(pre + ".fc2", h))
            y = self._layer(pre + ".out", h)
            term = tn.columns(gates, k, k + 1) * y
            out = term if out is None else out + term
        return out, gates


def _init_params(cfg: VaeConfig, seed: int) -> tn.ParamStore:
    rng = tn.make_rng(seed)
    store = tn.ParamStore()

    def layer(name, n_in, n_out):
        store.add(name + ".W", tn.glorot_uniform(rng, n_in, n_out))
        store.add(name + ".b", np.zeros(n_out))

    D, H, Z, E, G = cfg.input_dim, cfg.hidden_width, cfg.latent_dim, cfg.expanded_latent_dim, cfg.gate_width
    layer("enc.fc1", 2 * D, H)
    layer("enc.fc2", H, H)
    layer("enc.fc3", H, H)
    layer("enc.fc4", H, H)
    layer("enc.mu", H, Z)
    layer("enc.log_sigma", H, Z)
    layer("dec.expand", Z, E)
    layer("gate.fc1", E + D, G)
    layer("gate.fc2", G, G)
    layer("gate.out", G, cfg.n_experts)
    for k in range(cfg.n_experts):
        layer(f"expert{k}.fc1", E + D, H)
        layer(f"expert{k}.fc2", H, H)
        layer(f"expert{k}.out", H, D)
    return store


def _check_frame(x, dim, what) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != dim or x.ndim not in (1, 2):
        raise ValueError(f"{what}: expected (..., {dim}) frame(s), got shape {x.shape}")
    return x


def encode(model: VaeModel, x_t, x_prev) -> tuple[np.ndarray, np.ndarray]:
    """Latent mean and standard deviation for raw frames (1-D or batched)."""
    D = model.config.input_dim
    x_t = _check_frame(x_t, D, "x_t")
    x_prev = _check_frame(x_prev, D, "x_prev")
    if x_t.shape != x_prev.shape:
        raise ValueError(f"frame shapes differ: {x_t.shape} vs {x_prev.shape}")
    mu, sigma, _ = model.encode_graph(tn.Tensor(model.normalize(x_t)), tn.Tensor(model.normalize(x_prev)))
    return mu.value, sigma.value


def reparameterize(mu, sigma, rng: np.random.Generator):
    """``mu + sigma * eta`` with standard normal eta.

    Works on arrays or on tensors (then differentiable in mu and sigma).
    """
    if isinstance(mu, tn.Tensor) or isinstance(sigma, tn.Tensor):
        mu_t, sigma_t = tn.as_tensor(mu), tn.as_tensor(sigma)
        eta = rng.standard_normal(np.broadcast_shapes(mu_t.shape, sigma_t.shape))
        return mu_t + sigma_t * tn.Tensor(eta)
    mu, sigma = np.asarray(mu, dtype=np.float64), np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    eta = rng.standard_normal(np.broadcast_shapes(mu.shape, sigma.shape))
    return mu + sigma * eta


def decode(model: VaeModel, z, x_prev, return_gates: bool = False):
    """Predicted raw frame(s) from latent ``z`` and the condition frame."""
    x_prev = _check_frame(x_prev, model.config.input_dim, "x_prev")
    z = np.asarray(z, dtype=np.float64)
    out, gates = model.decode_graph(tn.Tensor(z), tn.Tensor(model.normalize(x_prev)))
    pred = model.denormalize(out.value)
    return (pred, gates.value) if return_gates else pred


def kl_divergence(mu, sigma, log_sigma=None):
    """KL(N(mu, sigma^2) || N(0, I)), summed over latent dims, averaged over the batch."""
    if isinstance(mu, tn.Tensor) or isinstance(sigma, tn.Tensor):
        mu, sigma = tn.as_tensor(mu), tn.as_tensor(sigma)
        if log_sigma is None:
            log_sigma = tn.log(sigma)
        per = tn.square(mu) + tn.square(sigma) - 1.0 - tn.mul_scalar(log_sigma, 2.0)
        batch = mu.shape[0] if mu.value.ndim == 2 else 1
        return tn.mul_scalar(tn.total(per), 0.5 / batch)
    mu, sigma = np.asarray(mu, dtype=np.float64), np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be strictly positive")
    per = mu * mu + sigma * sigma - 1.0 - 2.0 * np.log(sigma)
    batch = mu.shape[0] if mu.ndim == 2 else 1
    return 0.5 * per.sum() / batch


def elbo_loss(x_true, x_pred, mu, sigma, beta: float, log_sigma=None):
    """``MSE(x_pred, x_true) + beta * KL``.

    With tensors this returns ``(loss, mse, kl)`` tensors for training; with
    arrays it returns a float.
    """
    tensors = any(isinstance(v, tn.Tensor) for v in (x_true, x_pred, mu, sigma))
    if not tensors:
        x_true = np.asarray(x_true, dtype=np.float64)
        x_pred = np.asarray(x_pred, dtype=np.float64)
        if x_true.shape != x_pred.shape:
            raise ValueError(f"shape mismatch {x_true.shape} vs {x_pred.shape}")
        mse = float(np.mean((x_pred - x_true) ** 2))
        return mse + beta * float(kl_divergence(mu, sigma))
    if np.any(tn.as_tensor(sigma).value <= 0):
        raise ValueError("sigma must be strictly positive")
    diff = tn.as_tensor(x_pred) - tn.as_tensor(x_true)
    mse = tn.mean(tn.square(diff))
    kl = kl_divergence(mu, sigma, log_sigma)
    return mse + tn.mul_scalar(kl, beta), mse, kl


def model_to_dict(model: VaeModel) -> dict:
    meta = {
        "kind": MODEL_KIND,
        "model_version": MODEL_VERSION,
        "config": asdict(model.config),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "trained": model.trained,
    }
    return tn.params_to_dict(model.params, meta)


def save_model(model: VaeModel, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(model_to_dict(model), separators=(",", ":")))


def load_model(path) -> VaeModel:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: cannot read model: {exc}") from exc
    try:
        params, meta = tn.params_from_dict(data)
    except tn.WeightsFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    if meta.get("kind") != MODEL_KIND:
        raise ModelFormatError(f"{path}: not a motion VAE file")
    if meta.get("model_version") != MODEL_VERSION:
        raise ModelFormatError(f"{path}: model version {meta.get('model_version')!r}, expected {MODEL_VERSION}")
    config = VaeConfig(**meta["config"])
    expected = _init_params(config, 0)
    if expected.names() != params.names() or any(
        expected[n].value.shape != params[n].value.shape for n in params.names()
    ):
        raise ModelFormatError(f"{path}: parameters do not match the embedded config")
    model = VaeModel(config, params=params)
    model.mean = np.asarray(meta["mean"], dtype=np.float64)
    model.std = np.asarray(meta["std"], dtype=np.float64)
    model.trained = bool(meta.get("trained", False))
    return model
