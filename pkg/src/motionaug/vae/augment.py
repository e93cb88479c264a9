"""Guided generation of motion variants: best-of-N sampling plus refinement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rotmath
from ..motion.frames import POS_INDEX, ROT_INDEX, VEL_INDEX
from .model import VaeModel, decode, encode

VEL_ZERO = 1e-6


class UntrainedModelError(RuntimeError):
    pass


@dataclass
class AugmentConfig:
    n_best: int = 2
    d_p: float = 0.15
    d_v: float = 2.0
    k_samples: int = 4
    seed: int = 0
    sigma_scale: float = 1.0

    def __post_init__(self):
        if self.n_best < 1:
            raise ValueError("n_best must be >= 1")
        if not self.d_p > 0:
            raise ValueError("d_p must be positive")
        if not self.d_v > 1:
            raise ValueError("d_v must exceed 1")
        if self.k_samples < 1:
            raise ValueError("k_samples must be >= 1")
        if self.sigma_scale < 0:
            raise ValueError("sigma_scale must be non-negative")


def refine_frame(pred, truth, d_p: float, d_v: float) -> np.ndarray:
    """Pull a predicted frame back into plausible bands around ground truth.

    Positions move into a ball of radius ``d_p``; each velocity component is
    kept between ``v/d_v`` and ``v*d_v`` (sign aware, with a small symmetric
    band when ``v`` is ~0); rotation blocks are re-orthonormalized.
    Works on single frames or stacks of frames.
    """
    pred = np.array(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    out = pred.copy()

    gp, pp = truth[..., POS_INDEX], pred[..., POS_INDEX]
    diff = pp - gp
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    scale = np.where(dist > d_p, d_p / np.where(dist > 0, dist, 1.0), 1.0)
    out[..., POS_INDEX] = gp + diff * scale

    gv = truth[..., VEL_INDEX]
    lo = np.minimum(gv * d_v, gv / d_v)
    hi = np.maximum(gv * d_v, gv / d_v)
    tiny = np.abs(gv) < VEL_ZERO
    lo = np.where(tiny, -VEL_ZERO * d_v, lo)
    hi = np.where(tiny, VEL_ZERO * d_v, hi)
    out[..., VEL_INDEX] = np.clip(pred[..., VEL_INDEX], lo, hi)

    rot = pred[..., ROT_INDEX]
    try:
        out[..., ROT_INDEX] = rotmath.renormalize_sixd(rot)
    except rotmath.DegenerateRotationError:
        fixed = np.empty_like(rot)
        flat_r, flat_t, flat_o = rot.reshape(-1, 6), truth[..., ROT_INDEX].reshape(-1, 6), fixed.reshape(-1, 6)
        for i in range(flat_r.shape[0]):
            try:
                flat_o[i] = rotmath.renormalize_sixd(flat_r[i])
            except rotmath.DegenerateRotationError:
                flat_o[i] = flat_t[i]
        out[..., ROT_INDEX] = fixed
    return out


def augment_sequence(model: VaeModel, reference, cfg: AugmentConfig, rng: np.random.Generator,
                     allow_untrained: bool = False) -> np.ndarray:
    """One augmented frame sequence guided by ``reference`` (T, D).

    Frame 0 is the ground truth. At each later step the previous generated
    frame conditions ``n_best`` decoder samples whose latents come from the
    encoder applied to the ground-truth frame; the candidate with the lowest
    MSE to ground truth is refined and kept.
    """
    if not (model.trained or allow_untrained):
        raise UntrainedModelError("model has not been trained (pass allow_untrained=True to override)")
    ref = np.asarray(reference, dtype=np.float64)
    D = model.config.input_dim
    if ref.ndim != 2 or ref.shape[1] != D:
        raise ValueError(f"reference must have shape (T, {D}), got {ref.shape}")
    if ref.shape[0] < 2:
        raise ValueError("reference needs at least 2 frames")
    out = np.empty_like(ref)
    out[0] = ref[0]
    N = cfg.n_best
    for t in range(1, ref.shape[0]):
        prev = out[t - 1]
        mu, sigma = encode(model, ref[t], prev)
        eta = rng.standard_normal((N, mu.size))
        z = mu + cfg.sigma_scale * sigma * eta
        cands = decode(model, z, np.broadcast_to(prev, (N, D)))
        err = np.mean((cands - ref[t]) ** 2, axis=1)
        best = cands[int(np.argmin(err))]
        out[t] = refine_frame(best, ref[t], cfg.d_p, cfg.d_v)
    return out


def sample_seeds(seed: int, k: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for ``k`` augmentation samples."""
    return np.random.SeedSequence(seed).spawn(k)


def augment_many(model: VaeModel, reference, cfg: AugmentConfig, allow_untrained: bool = False) -> list[np.ndarray]:
    return [
        augment_sequence(model, reference, cfg, np.random.default_rng(s), allow_untrained)
        for s in sample_seeds(cfg.seed, cfg.k_samples)
    ]
