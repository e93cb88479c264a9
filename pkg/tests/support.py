"""Experiment drivers shared by the module tests and the acceptance suite."""
import functools

import numpy as np

from motionaug import tensornet as tn
from motionaug.dynamics import RigidBodyModel
from motionaug.metrics import jitter
from motionaug.motion import build_frames, default_skeleton, gen_synthetic_motion
from motionaug.motion.synthetic import gen_climbing, gen_standing, perturb_rotations
from motionaug.physopt import optimize_sequence
from motionaug.vae import TrainConfig, VaeConfig, VaeModel, train, window_loss

TINY = VaeConfig(input_dim=12, latent_dim=4, expanded_latent_dim=8, hidden_width=8, gate_width=4, n_experts=2)


def vae_gradient_error(config=TINY, coords=None, seed=0, p=0.5, h=1e-6):
    """Relative error of the backpropagated window loss gradient against
    central differences, taken over all parameters (or ``coords``)."""
    model = VaeModel(config, seed=seed)
    data = np.random.default_rng(seed + 1).normal(size=(4, 4, config.input_dim))

    def loss_at(flat):
        model.params.set_flat(flat)
        loss, _, _ = window_loss(model, data, p, np.random.default_rng(7), 3e-3, detach_feedback=False)
        return loss

    theta = model.params.flat().copy()
    model.params.zero_grad()
    tn.backward(loss_at(theta))
    analytic = model.params.flat_grad()
    idx = np.arange(theta.size) if coords is None else np.asarray(coords)
    numeric = np.empty(idx.size)
    for k, i in enumerate(idx):
        old = theta[i]
        theta[i] = old + h
        fp = float(loss_at(theta).value)
        theta[i] = old - h
        fm = float(loss_at(theta).value)
        theta[i] = old
        numeric[k] = (fp - fm) / (2 * h)
    model.params.set_flat(theta)
    return float(np.abs(analytic[idx] - numeric).max() / np.abs(numeric).max())


def overfit_run(seconds=10.0):
    skel = default_skeleton()
    frames = build_frames(skel, gen_synthetic_motion("walk", seconds, 0))
    model, hist = train(VaeModel(seed=0), [frames], TrainConfig.desk())
    return model, hist


@functools.lru_cache(maxsize=None)
def jitter_experiment(target_ratio=2.5, noise_seed=11, motion_seed=3, seconds=10.0):
    """Optimize a noisy walk whose jitter is ``target_ratio`` times the clean one."""
    skel = default_skeleton()
    clean = gen_synthetic_motion("walk", seconds, motion_seed)
    j_clean = jitter(skel, clean)
    lo, hi = 0.0, 0.1
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if jitter(skel, perturb_rotations(clean, mid, noise_seed)) / j_clean < target_ratio:
            lo = mid
        else:
            hi = mid
    noisy = perturb_rotations(clean, 0.5 * (lo + hi), noise_seed)
    import time
    t0 = time.perf_counter()
    out, trace = optimize_sequence(RigidBodyModel(skel), noisy)
    elapsed = time.perf_counter() - t0
    return {
        "j_clean": j_clean, "j_noisy": jitter(skel, noisy), "j_out": jitter(skel, out),
        "trace": trace, "elapsed": elapsed,
    }


@functools.lru_cache(maxsize=None)
def standing_experiment(seconds=2.0):
    skel = default_skeleton()
    model = RigidBodyModel(skel)
    ref = gen_standing(seconds)
    out, trace = optimize_sequence(model, ref)
    vert = trace.lam.reshape(len(trace), -1, 3) @ skel.up_axis        # (T, 23)
    joints = model.contact_joints()
    return {"skel": skel, "model": model, "ref": ref, "out": out, "trace": trace, "vert": vert, "joints": joints}


@functools.lru_cache(maxsize=None)
def climbing_experiment(seconds=2.0):
    skel = default_skeleton()
    model = RigidBodyModel(skel)
    ref = gen_climbing(seconds, seed=0)
    out, trace = optimize_sequence(model, ref)
    vert = trace.lam.reshape(len(trace), -1, 3) @ skel.up_axis
    return {"skel": skel, "model": model, "ref": ref, "out": out, "trace": trace, "vert": vert,
            "joints": model.contact_joints()}
