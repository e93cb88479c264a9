"""``motionaug`` command line.

Every subcommand accepts ``--config FILE.json``; command-line flags override
values from the file. Config layout::

    {"seed": 1, "skeleton": "path/to/skeleton.json",
     "vae": {...VaeConfig fields}, "train": {"profile": "desk", ...TrainConfig fields},
     "augment": {...AugmentConfig fields}, "physopt": {...PhysParams fields},
     "imu": {"sites": [...], "with_gravity": false}}

Exit codes: 0 success, 1 invalid input or usage, 2 failure while running.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dynamics import RigidBodyModel, backend
from .imusynth import ImuConfig, save_imu, synthesize
from .metrics import fidelity, jitter
from .motion.frames import build_frames, frames_to_poses
from .motion.io import FormatError, get_skeleton, load_motion, save_motion, write_json
from .motion.synthetic import KINDS, gen_synthetic_motion
from .physopt import PhysParams, optimize_sequence
from .vae import (
    AugmentConfig, ModelFormatError, TrainConfig, UntrainedModelError, VaeConfig, VaeModel, augment_sequence,
    load_model, sample_seeds, save_model, train,
)

log = logging.getLogger("motionaug")
EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# --- config helpers ----------------------------------------------------------

def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: top level must be an object")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise UsageError(f"config section '{name}' must be an object")
    return dict(sec)


def _build(cls, values: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"config section '{section}': unknown keys {unknown}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config section '{section}': {exc}") from exc


def _seed(args, cfg: dict) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise UsageError("a seed is required (--seed or \"seed\" in the config file)")
    try:
        return int(seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"seed must be an integer, got {seed!r}") from exc


def _existing(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {path}")
    return p


def _skeleton(args, cfg: dict):
    path = args.skeleton or cfg.get("skeleton")
    if path is not None:
        _existing(path, "skeleton file")
    return get_skeleton(path)


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()


def _write_manifest(path: Path, command: str, payload: dict, timings: dict, outputs: list, extra=None) -> None:
    manifest = {
        "command": command,
        "config": payload,
        "config_hash": _config_hash(payload),
        "versions": {
            "motionaug": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "dynamics_backend": backend.NAME,
        },
        "timings_s": timings,
        "outputs": [str(o) for o in outputs],
    }
    if extra:
        manifest.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _manifest_for_file(out: Path) -> Path:
    name = out.name.split(".")[0] or "run"
    return out.with_name(f"{name}.manifest.json")


# --- subcommands ------------------------------------------------------------

def cmd_gen_synthetic(args, cfg) -> int:
    t0 = time.perf_counter()
    seed = _seed(args, cfg)
    kind = args.kind or cfg.get("kind", "walk")
    seconds = args.seconds if args.seconds is not None else cfg.get("seconds", 2.0)
    if kind not in KINDS:
        raise UsageError(f"unknown kind '{kind}' (choose from {', '.join(KINDS)})")
    if not float(seconds) > 0:
        raise UsageError("--seconds must be positive")
    skel = _skeleton(args, cfg)
    seq = gen_synthetic_motion(kind, float(seconds), seed, skel)
    out = Path(args.output)
    save_motion(seq, out)
    payload = {"kind": kind, "seconds": float(seconds), "seed": seed}
    _write_manifest(_manifest_for_file(out), "gen-synthetic", payload, {"total": time.perf_counter() - t0}, [out])
    log.info("wrote %s (%d frames)", out, len(seq))
    return EXIT_OK


def _train_config(args, cfg, seed) -> TrainConfig:
    values = _section(cfg, "train")
    profile = args.profile or values.pop("profile", "desk")
    if profile not in ("desk", "full"):
        raise UsageError("--profile must be 'desk' or 'full'")
    if args.stages:
        try:
            values["stages"] = tuple(int(s) for s in args.stages.split(","))
        except ValueError as exc:
            raise UsageError("--stages expects three comma-separated integers") from exc
    for key in ("batch_size", "warmup_epochs", "lr_start", "lr_peak", "window", "beta"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    values["seed"] = seed
    known = {f.name for f in fields(TrainConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"config section 'train': unknown keys {unknown}")
    try:
        return TrainConfig.desk(**values) if profile == "desk" else TrainConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"train config: {exc}") from exc


def cmd_train_vae(args, cfg) -> int:
    t0 = time.perf_counter()
    seed = _seed(args, cfg)
    skel = _skeleton(args, cfg)
    inputs = args.input or cfg.get("train_inputs", [])
    if not inputs:
        raise UsageError("at least one --input motion file is required")
    seqs = [load_motion(_existing(p, "motion file"), skel) for p in inputs]
    dataset = [build_frames(skel, s) for s in seqs]
    vcfg_values = _section(cfg, "vae")
    if args.hidden is not None:
        vcfg_values["hidden_width"] = args.hidden
    vcfg = _build(VaeConfig, vcfg_values, "vae")
    tcfg = _train_config(args, cfg, seed)
    model = VaeModel(vcfg, seed=seed)
    t1 = time.perf_counter()
    model, history = train(model, dataset, tcfg)
    t2 = time.perf_counter()
    out = Path(args.output)
    save_model(model, out)
    hist_path = Path(args.history) if args.history else out.with_name(out.name.split(".")[0] + ".loss.csv")
    history.write_csv(hist_path)
    payload = {"inputs": [str(p) for p in inputs], "vae": asdict(vcfg), "train": asdict(tcfg)}
    _write_manifest(_manifest_for_file(out), "train-vae", payload,
                    {"load": t1 - t0, "train": t2 - t1, "total": time.perf_counter() - t0}, [out, hist_path],
                    {"param_count": model.param_count()})
    log.info("trained %d parameters; final reconstruction %.5f", model.param_count(),
             history.records[-1].loss_reconst)
    return EXIT_OK


def _phys_params(cfg) -> PhysParams:
    return _build(PhysParams, _section(cfg, "physopt"), "physopt")


def _constraint_summary(trace, params: PhysParams) -> dict:
    opt = trace.optimal_frames()
    return {
        "frames": len(trace),
        "optimal_frames": len(opt),
        "fallback_frames": trace.n_fallback(),
        "max_eom_residual": max((f.check.eom_residual for f in opt), default=0.0),
        "max_power": max((f.check.max_power for f in opt), default=0.0),
        "max_friction_violation": max((f.check.friction_violation for f in opt), default=0.0),
        "checks_passed": all(f.check.passed(params) for f in opt),
    }


def _augment_one(job):
    """Worker: one augmented sample (picklable inputs only)."""
    k, seed_seq, model, skel, ref, acfg, physopt, params, allow_untrained = job
    t0 = time.perf_counter()
    frames = build_frames(skel, ref)
    aug = augment_sequence(model, frames, acfg, np.random.default_rng(seed_seq), allow_untrained)
    vae_seq = frames_to_poses(skel, aug, ref)
    t1 = time.perf_counter()
    result = {"k": k, "vae": vae_seq, "final": vae_seq, "trace": None, "timings": {"vae": t1 - t0}}
    if physopt:
        rbm = RigidBodyModel(skel)
        final, trace = optimize_sequence(rbm, vae_seq, params)
        result.update(final=final, trace=trace, rbm=rbm)
        result["timings"]["physopt"] = time.perf_counter() - t1
    return result


def cmd_augment(args, cfg) -> int:
    t0 = time.perf_counter()
    seed = _seed(args, cfg)
    skel = _skeleton(args, cfg)
    model = load_model(_existing(args.model, "model file"))
    ref = load_motion(_existing(args.input, "motion file"), skel)
    if len(ref) < 2:
        raise UsageError("reference motion needs at least 2 frames")
    values = _section(cfg, "augment")
    if args.n is not None:
        values["k_samples"] = args.n
    values.setdefault("k_samples", 4)
    for flag, key in (("best_of", "n_best"), ("d_p", "d_p"), ("d_v", "d_v")):
        if getattr(args, flag) is not None:
            values[key] = getattr(args, flag)
    values["seed"] = seed
    acfg = _build(AugmentConfig, values, "augment")
    params = _phys_params(cfg)
    physopt = bool(args.physopt or cfg.get("physopt_enabled", False))
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    jobs = [
        (k, s, model, skel, ref, acfg, physopt, params, args.allow_untrained)
        for k, s in enumerate(sample_seeds(seed, acfg.k_samples))
    ]
    if args.jobs == 1:
        results = [_augment_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_augment_one, jobs))
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs, checks, timings = [], {}, {}
    for r in sorted(results, key=lambda r: r["k"]):
        name = f"sample_{r['k']:03d}"
        path = outdir / f"{name}.motion.json"
        save_motion(r["final"], path)
        outputs.append(path)
        timings[name] = r["timings"]
        if physopt:
            vae_path = outdir / "stage_vae" / f"{name}.motion.json"
            save_motion(r["vae"], vae_path)
            f_path, t_path = outdir / f"{name}.forces.csv", outdir / f"{name}.torques.csv"
            r["trace"].write_force_csv(r["rbm"], f_path)
            r["trace"].write_torque_csv(t_path)
            outputs += [vae_path, f_path, t_path]
            checks[name] = _constraint_summary(r["trace"], params)
    payload = {
        "model": str(args.model), "input": str(args.input), "augment": asdict(acfg), "physopt": physopt,
        "physopt_params": asdict(params) if physopt else None,
    }
    timings["total"] = time.perf_counter() - t0
    _write_manifest(outdir / "run_manifest.json", "augment", payload, timings, outputs,
                    {"constraint_checks": checks} if physopt else None)
    if physopt and not all(c["checks_passed"] for c in checks.values()):
        log.error("constraint post-checks failed: %s", checks)
        return EXIT_FAILED
    log.info("wrote %d samples to %s", acfg.k_samples, outdir)
    return EXIT_OK


def cmd_optimize(args, cfg) -> int:
    t0 = time.perf_counter()
    skel = _skeleton(args, cfg)
    ref = load_motion(_existing(args.input, "motion file"), skel)
    if len(ref) < 2:
        raise UsageError("reference motion needs at least 2 frames")
    params = _phys_params(cfg)
    rbm = RigidBodyModel(skel)
    out_seq, trace = optimize_sequence(rbm, ref, params)
    out = Path(args.output)
    save_motion(out_seq, out)
    stem = out.name.split(".")[0]
    f_path = Path(args.forces) if args.forces else out.with_name(stem + ".forces.csv")
    t_path = Path(args.torques) if args.torques else out.with_name(stem + ".torques.csv")
    trace.write_force_csv(rbm, f_path)
    trace.write_torque_csv(t_path)
    summary = _constraint_summary(trace, params)
    _write_manifest(_manifest_for_file(out), "optimize", {"input": str(args.input), "physopt": asdict(params)},
                    {"total": time.perf_counter() - t0}, [out, f_path, t_path], {"constraint_checks": summary})
    log.info("optimized %d frames (%d fallback)", len(ref), summary["fallback_frames"])
    return EXIT_OK if summary["checks_passed"] else EXIT_FAILED


def cmd_synth_imu(args, cfg) -> int:
    t0 = time.perf_counter()
    skel = _skeleton(args, cfg)
    seq = load_motion(_existing(args.input, "motion file"), skel)
    values = _section(cfg, "imu")
    if args.sites:
        try:
            values["sites"] = tuple(int(s) for s in args.sites.split(","))
        except ValueError as exc:
            raise UsageError("--sites expects comma-separated joint indices") from exc
    if args.with_gravity:
        values["with_gravity"] = True
    icfg = _build(ImuConfig, values, "imu")
    if len(seq) < 3:
        raise UsageError("IMU synthesis needs at least 3 frames")
    imu = synthesize(skel, seq, icfg)
    out = Path(args.output)
    save_imu(imu, out)
    _write_manifest(_manifest_for_file(out), "synth-imu", {"input": str(args.input), "imu": asdict(icfg)},
                    {"total": time.perf_counter() - t0}, [out])
    return EXIT_OK


def cmd_eval(args, cfg) -> int:
    t0 = time.perf_counter()
    skel = _skeleton(args, cfg)
    gt = load_motion(_existing(args.gt, "ground-truth motion"), skel)
    aug_paths = []
    for a in args.aug:
        p = _existing(a, "augmented motion path")
        aug_paths += sorted(p.glob("*.motion.json")) if p.is_dir() else [p]
    if not aug_paths:
        raise UsageError("no augmented motion files found")
    augs = [load_motion(p, skel) for p in aug_paths]
    for p, a in zip(aug_paths, augs):
        if len(a) != len(gt) or a.fps != gt.fps:
            raise UsageError(f"{p}: length/fps differ from ground truth")
    report = fidelity(skel, gt, augs).as_dict()
    report["jitter_gt"] = jitter(skel, gt) if len(gt) >= 4 else None
    report["jitter_aug"] = [jitter(skel, a) for a in augs] if len(gt) >= 4 else None
    report["samples"] = [str(p) for p in aug_paths]
    out = Path(args.output)
    write_json(report, out)
    outputs = [out]
    if args.csv:
        from .metrics import FidelityReport
        FidelityReport(**{k: report[k] for k in (f.name for f in fields(FidelityReport))}).write_csv(args.csv)
        outputs.append(Path(args.csv))
    _write_manifest(_manifest_for_file(out), "eval", {"gt": str(args.gt), "aug": [str(a) for a in args.aug]},
                    {"total": time.perf_counter() - t0}, outputs)
    log.info("e_pos %.3f cm, e_rot %.3f deg, d_pos %s", report["e_pos"], report["e_rot"], report["d_pos"])
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--skeleton", help="skeleton JSON file (default: built-in SMPL skeleton)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="motionaug", description="Motion-data augmentation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-synthetic", parents=[common], help="generate a synthetic motion file")
    p.add_argument("--kind", choices=KINDS, help="motion kind (default walk)")
    p.add_argument("--seconds", type=float, help="duration in seconds (default 2)")
    p.add_argument("--seed", type=int, help="random seed (required here or in the config)")
    p.add_argument("-o", "--output", required=True, help="output motion file")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("train-vae", parents=[common], help="train the motion VAE")
    p.add_argument("--input", nargs="+", help="training motion files")
    p.add_argument("--profile", choices=("desk", "full"), help="training profile (default desk)")
    p.add_argument("--stages", help="epochs of the three sampling stages, e.g. 5,15,20")
    p.add_argument("--warmup-epochs", dest="warmup_epochs", type=int, help="warm-up epochs")
    p.add_argument("--batch-size", dest="batch_size", type=int, help="minibatch size")
    p.add_argument("--lr-start", dest="lr_start", type=float, help="learning rate at the start of warm-up")
    p.add_argument("--lr-peak", dest="lr_peak", type=float, help="learning rate after warm-up")
    p.add_argument("--window", type=int, help="prediction steps per training window")
    p.add_argument("--beta", type=float, help="KL weight")
    p.add_argument("--hidden", type=int, help="hidden layer width")
    p.add_argument("--seed", type=int, help="random seed (required here or in the config)")
    p.add_argument("--history", help="loss history CSV (default: next to the model)")
    p.add_argument("-o", "--output", required=True, help="output model file")
    p.set_defaults(func=cmd_train_vae)

    p = sub.add_parser("augment", parents=[common], help="generate augmented variants of a motion")
    p.add_argument("--model", required=True, help="trained VAE model file")
    p.add_argument("--input", required=True, help="reference motion file")
    p.add_argument("--n", type=int, help="number of augmented samples (default 4)")
    p.add_argument("--best-of", dest="best_of", type=int, help="candidates per frame (default 2)")
    p.add_argument("--d-p", dest="d_p", type=float, help="position clamp radius in metres (default 0.15)")
    p.add_argument("--d-v", dest="d_v", type=float, help="velocity ratio clamp (default 2.0)")
    p.add_argument("--physopt", action="store_true", help="run the physics optimizer on every sample")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes (default 1)")
    p.add_argument("--allow-untrained", action="store_true", help="permit an untrained model (testing only)")
    p.add_argument("--seed", type=int, help="random seed (required here or in the config)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("optimize", parents=[common], help="physically optimize a motion")
    p.add_argument("--input", required=True, help="reference motion file")
    p.add_argument("--forces", help="reaction force CSV (default: next to the output)")
    p.add_argument("--torques", help="joint torque CSV (default: next to the output)")
    p.add_argument("-o", "--output", required=True, help="output motion file")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("synth-imu", parents=[common], help="synthesize virtual IMU data")
    p.add_argument("--input", required=True, help="motion file")
    p.add_argument("--sites", help="six comma-separated joint indices (default 0,15,20,21,4,5)")
    p.add_argument("--with-gravity", action="store_true", help="add +g along the up axis to accelerations")
    p.add_argument("-o", "--output", required=True, help="output IMU file")
    p.set_defaults(func=cmd_synth_imu)

    p = sub.add_parser("eval", parents=[common], help="fidelity, diversity and jitter metrics")
    p.add_argument("--gt", required=True, help="ground-truth motion file")
    p.add_argument("--aug", nargs="+", required=True, help="augmented motion files or directories")
    p.add_argument("--csv", help="also write a per-joint CSV report")
    p.add_argument("-o", "--output", required=True, help="output JSON report")
    p.set_defaults(func=cmd_eval)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except (UsageError, FormatError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UntrainedModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001  any other failure is a runtime error
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
