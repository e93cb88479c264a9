"""Scheduled-sampling training of the motion VAE."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import tensornet as tn
from .model import VaeModel, elbo_loss

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


class DatasetError(ValueError):
    pass


@dataclass
class TrainConfig:
    beta: float = 3e-3
    window: int = 30
    stages: tuple = (50, 150, 200)
    warmup_epochs: int = 10
    lr_start: float = 2e-6
    lr_peak: float = 2e-5
    lr_decay: float = 0.99
    batch_size: int = 512
    seed: int = 0
    detach_feedback: bool = True

    def __post_init__(self):
        self.stages = tuple(int(s) for s in self.stages)
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if len(self.stages) != 3 or min(self.stages) < 0:
            raise ValueError("stages must be three non-negative epoch counts")
        if self.window < 1 or self.batch_size < 1 or self.warmup_epochs < 0:
            raise ValueError("window, batch_size must be >= 1 and warmup_epochs >= 0")
        if not (self.lr_start > 0 and self.lr_peak > 0 and 0 < self.lr_decay <= 1):
            raise ValueError("learning-rate settings out of range")

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Small profile for single-machine runs: short stages, batch 64 and a
        larger step size so a few dozen updates make visible progress."""
        base = dict(stages=(5, 15, 20), batch_size=64, lr_start=1e-4, lr_peak=1e-3)
        base.update(overrides)
        return cls(**base)

    @property
    def total_epochs(self) -> int:
        return self.warmup_epochs + sum(self.stages)


def learning_rate(cfg: TrainConfig, epoch: float) -> float:
    """Linear warm-up from ``lr_start`` to ``lr_peak``, then per-epoch decay."""
    if epoch < cfg.warmup_epochs:
        return cfg.lr_start + (cfg.lr_peak - cfg.lr_start) * epoch / cfg.warmup_epochs
    return cfg.lr_peak * cfg.lr_decay ** (epoch - cfg.warmup_epochs)


def sampling_probability(cfg: TrainConfig, k: float) -> float:
    """Ground-truth conditioning probability at schedule epoch ``k``
    (counted from the end of warm-up)."""
    s1, s2, _ = cfg.stages
    if k < s1:
        return 1.0
    if k < s1 + s2:
        return 1.0 - (k - s1) / s2
    return 0.0


def stage_of(cfg: TrainConfig, epoch: int) -> int:
    """0 during warm-up, then 1/2/3."""
    if epoch < cfg.warmup_epochs:
        return 0
    k = epoch - cfg.warmup_epochs
    s1, s2, _ = cfg.stages
    return 1 if k < s1 else 2 if k < s1 + s2 else 3


def make_windows(dataset, window: int) -> np.ndarray:
    """Cut each frame sequence into non-overlapping (window + 1)-frame chunks:
    one conditioning frame followed by ``window`` prediction targets."""
    chunks = []
    for i, seq in enumerate(dataset):
        seq = np.asarray(seq, dtype=np.float64)
        if seq.ndim != 2 or seq.shape[0] < window + 1:
            raise DatasetError(f"sequence {i} has {seq.shape[0] if seq.ndim else 0} frames; need at least {window + 1}")
        for start in range(0, seq.shape[0] - window, window):
            chunks.append(seq[start:start + window + 1])
    if not chunks:
        raise DatasetError("empty dataset")
    return np.stack(chunks)


def window_loss(model: VaeModel, batch_n: np.ndarray, p: float, rng: np.random.Generator,
                beta: float, detach_feedback: bool = True):
    """Loss graph over a batch of standardized windows (B, L+1, D).

    Returns ``(loss, mse, kl)`` tensors averaged over the L prediction steps.
    """
    B, L1, _ = batch_n.shape
    cond = tn.Tensor(batch_n[:, 0])
    loss = mse_sum = kl_sum = None
    for t in range(1, L1):
        target = tn.Tensor(batch_n[:, t])
        mu, sigma, log_sigma = model.encode_graph(target, cond)
        eta = rng.standard_normal(mu.shape)
        z = mu + sigma * tn.Tensor(eta)
        pred, _ = model.decode_graph(z, cond)
        step_loss, mse, kl = elbo_loss(target, pred, mu, sigma, beta, log_sigma=log_sigma)
        loss = step_loss if loss is None else loss + step_loss
        mse_sum = mse.value if mse_sum is None else mse_sum + mse.value
        kl_sum = kl.value if kl_sum is None else kl_sum + kl.value
        use_truth = rng.random(B) < p
        feedback = pred.detach() if detach_feedback else pred
        mask = tn.Tensor(use_truth.astype(np.float64)[:, None])
        cond = mask * target + (1.0 - mask) * feedback
    n = L1 - 1
    return tn.mul_scalar(loss, 1.0 / n), float(mse_sum) / n, float(kl_sum) / n


@dataclass
class EpochRecord:
    epoch: int
    stage: int
    p: float
    lr: float
    loss_reconst: float
    loss_kl: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "stage", "p", "lr", "loss_reconst", "loss_kl"])
            for r in self.records:
                w.writerow([r.epoch, r.stage, repr(r.p), repr(r.lr), repr(r.loss_reconst), repr(r.loss_kl)])


def train(model: VaeModel, dataset, cfg: TrainConfig, fit_normalization: bool = True) -> tuple[VaeModel, TrainHistory]:
    """Train in place and return the model with its per-epoch loss history.

    ``dataset`` is a list of (T, D) raw frame arrays.
    """
    windows = make_windows(dataset, cfg.window)
    if fit_normalization:
        model.fit_normalization(list(dataset))
    windows_n = model.normalize(windows)
    rng = tn.make_rng(cfg.seed)
    adam = tn.AdamState()
    history = TrainHistory()
    n_win = windows_n.shape[0]
    for epoch in range(cfg.total_epochs):
        lr = learning_rate(cfg, epoch)
        p = 1.0 if epoch < cfg.warmup_epochs else sampling_probability(cfg, epoch - cfg.warmup_epochs)
        order = rng.permutation(n_win)
        mse_acc = kl_acc = 0.0
        n_batches = 0
        for b0 in range(0, n_win, cfg.batch_size):
            batch = windows_n[order[b0:b0 + cfg.batch_size]]
            model.params.zero_grad()
            loss, mse, kl = window_loss(model, batch, p, rng, cfg.beta, cfg.detach_feedback)
            if not np.isfinite(loss.value):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {n_batches} (mse={mse}, kl={kl}, lr={lr:g}, p={p:g})"
                )
            tn.backward(loss)
            tn.adam_step(model.params, adam, lr)
            mse_acc += mse
            kl_acc += kl
            n_batches += 1
        rec = EpochRecord(epoch, stage_of(cfg, epoch), p, lr, mse_acc / n_batches, kl_acc / n_batches)
        history.records.append(rec)
        log.info("epoch %d stage %d p=%.3f lr=%.2e mse=%.5f kl=%.4f", epoch, rec.stage, p, lr, rec.loss_reconst, rec.loss_kl)
    model.trained = True
    return model, history
