import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionaug import rotmath as rm
from motionaug.metrics import MetricError, fidelity, fidelity_from_global, jitter, jitter_from_positions
from motionaug.motion import fk_sequence, gen_synthetic_motion, get_skeleton
from motionaug.motion.sequence import random_sequence


@pytest.fixture(scope="module")
def walk():
    return gen_synthetic_motion("walk", 1.0, 6)


def test_identity_sample_has_zero_error(skel, walk):
    r = fidelity(skel, walk, [walk])
    assert r.e_pos == r.e_rot == r.e_sip == 0.0
    assert r.d_pos is None and r.d_rot is None


def test_identical_copies_have_zero_spread(skel, walk):
    other = random_sequence(np.random.default_rng(0), len(walk))
    r = fidelity(skel, walk, [other, other])
    assert r.d_pos == pytest.approx(0.0, abs=1e-12)
    assert r.d_rot == pytest.approx(0.0, abs=1e-5)
    assert r.e_pos > 0


def test_three_centimetre_offset_on_one_joint():
    rng = np.random.default_rng(1)
    pos = rng.normal(size=(5, 24, 3))
    rot = np.tile(np.eye(3), (5, 24, 1, 1))
    shifted = pos.copy()
    shifted[:, 7] += [0.03, 0, 0]
    r = fidelity_from_global(pos, rot, np.stack([pos, shifted]), np.stack([rot, rot]))
    assert r.per_joint_e_pos[7] == pytest.approx(1.5, abs=1e-9)
    assert r.per_joint_d_pos[7] == pytest.approx(1.5, abs=1e-9)
    assert r.e_pos == pytest.approx(1.5 / 24, abs=1e-9)


def test_rotation_error_in_degrees():
    pos = np.zeros((2, 24, 3))
    rot = np.tile(np.eye(3), (2, 24, 1, 1))
    turned = rot.copy()
    turned[:, 16] = rm.euler_to_rot([0, 0, np.pi / 2])
    r = fidelity_from_global(pos, rot, pos[None], turned[None])
    assert r.per_joint_e_rot[16] == pytest.approx(90.0, abs=1e-9)
    assert r.e_sip == pytest.approx(90.0 / 4, abs=1e-9)


def test_mismatched_inputs(skel, walk):
    with pytest.raises(MetricError):
        fidelity(skel, walk, [])
    short = gen_synthetic_motion("walk", 0.5, 6)
    with pytest.raises(MetricError):
        fidelity(skel, walk, [short])


def test_jitter_of_polynomials():
    t = np.arange(30) / 60.0
    lin = np.stack([t, 2 * t, -t], axis=1)[:, None, :]
    quad = np.stack([t * t, 0 * t, 3 * t * t], axis=1)[:, None, :]
    assert jitter_from_positions(np.ones((10, 2, 3)), 60) == 0.0
    assert jitter_from_positions(lin, 60) == pytest.approx(0.0, abs=1e-9)
    assert jitter_from_positions(quad, 60) == pytest.approx(0.0, abs=1e-9)
    cubic = (t ** 3)[:, None, None] * np.array([1.0, 0, 0])
    assert jitter_from_positions(cubic, 60) == pytest.approx(6.0 / 100.0, rel=1e-6)
    with pytest.raises(MetricError):
        jitter_from_positions(np.zeros((3, 1, 3)), 60)


def test_jitter_positive_for_motion(skel, walk):
    assert jitter(skel, walk) > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_property_permutation_invariance(seed):
    skel = get_skeleton(None)
    rng = np.random.default_rng(seed)
    gt = random_sequence(rng, 4, scale=0.2)
    samples = [random_sequence(rng, 4, scale=0.2) for _ in range(3)]
    a = fidelity(skel, gt, samples)
    b = fidelity(skel, gt, samples[::-1])
    for key in ("e_pos", "e_rot", "e_sip", "d_pos", "d_rot"):
        assert getattr(a, key) == pytest.approx(getattr(b, key), rel=1e-12, abs=1e-12)


def test_linear_scaling_with_skeleton(skel):
    rng = np.random.default_rng(3)
    gt = random_sequence(rng, 5, scale=0.2)
    samples = [random_sequence(rng, 5, scale=0.2) for _ in range(2)]
    for s in samples:
        s.p_root[:] = gt.p_root
    big = skel.scaled(2.0)
    gt2 = gt.copy()
    gt2.p_root *= 2
    samples2 = [s.copy() for s in samples]
    for s in samples2:
        s.p_root *= 2
    a, b = fidelity(skel, gt, samples), fidelity(big, gt2, samples2)
    assert b.e_pos == pytest.approx(2 * a.e_pos, rel=1e-12)
    assert b.d_pos == pytest.approx(2 * a.d_pos, rel=1e-12)
    assert b.e_rot == pytest.approx(a.e_rot, rel=1e-12)


def test_report_files(skel, walk, tmp_path):
    other = random_sequence(np.random.default_rng(4), len(walk))
    r = fidelity(skel, walk, [walk, other])
    r.write_json(tmp_path / "r.json")
    r.write_csv(tmp_path / "r.csv")
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "joint,e_pos_cm,e_rot_deg,d_pos_cm,d_rot_deg"
    assert len(rows) == 26
    pos, _ = fk_sequence(skel, walk)
    assert pos.shape == (60, 24, 3)
