import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionaug import tensornet as tn


def test_sum_of_squares_gradient():
    x = np.array([[1.0, -2.0, 0.5]])
    xt = tn.Tensor(x, requires_grad=True)
    tn.backward(tn.total(tn.square(xt)))
    np.testing.assert_array_equal(xt.grad, 2 * x)


def test_zero_weighted_loss_gives_zero_gradient():
    xt = tn.Tensor(np.ones((2, 3)), requires_grad=True)
    tn.backward(tn.mul_scalar(tn.total(tn.exp(xt)), 0.0))
    np.testing.assert_array_equal(xt.grad, np.zeros((2, 3)))


def test_adam_zero_gradient_leaves_params():
    store = tn.ParamStore()
    store.add("w", np.array([1.0, 2.0]))
    tn.adam_step(store, tn.AdamState(), 0.1, grads={"w": np.zeros(2)})
    np.testing.assert_array_equal(store["w"].value, [1.0, 2.0])


def test_adam_converges_on_quadratic():
    store = tn.ParamStore()
    store.add("x", np.array([1.0]))
    state = tn.AdamState()
    for _ in range(500):
        store.zero_grad()
        tn.backward(tn.total(tn.square(store["x"])))
        tn.adam_step(store, state, 0.05)
    assert abs(store["x"].value[0]) < 1e-3


def test_grad_check_quadratic_mlp_and_softmax_ce():
    rng = np.random.default_rng(0)
    assert tn.grad_check(lambda t: tn.total(tn.square(t)), rng.normal(size=(2, 3))) < 1e-9
    W1, b1, W2 = rng.normal(size=(4, 5)), rng.normal(size=5), rng.normal(size=(5, 2))

    def mlp(x):
        h = tn.elu(tn.affine(x, tn.Tensor(W1), tn.Tensor(b1)))
        return tn.mean(tn.square(tn.affine(h, tn.Tensor(W2), tn.Tensor(np.zeros(2)))))
    assert tn.grad_check(mlp, rng.normal(size=(3, 4))) < 1e-6
    onehot = np.eye(4)[[0, 2, 3]]

    def ce(x):
        return tn.mul_scalar(tn.total(tn.mul(tn.Tensor(onehot), tn.log(tn.softmax(x)))), -1.0 / 3)
    assert tn.grad_check(ce, rng.normal(size=(3, 4))) < 1e-6


def test_shape_errors():
    with pytest.raises(tn.ShapeError):
        tn.Tensor(np.zeros((2, 2, 2)))
    with pytest.raises(tn.ShapeError):
        tn.add(tn.Tensor(np.zeros((2, 3))), tn.Tensor(np.zeros((3, 2))))


def test_weights_round_trip_and_version(tmp_path):
    store = tn.ParamStore()
    store.add("a.W", tn.glorot_uniform(tn.make_rng(1), 3, 4))
    store.add("a.b", np.zeros(4))
    tn.save_params(store, tmp_path / "w.json", {"note": "x"})
    back, meta = tn.load_params(tmp_path / "w.json")
    np.testing.assert_array_equal(back.flat(), store.flat())
    assert back.count() == 16 and meta == {"note": "x"}
    data = tn.params_to_dict(store)
    data["version"] = 99
    with pytest.raises(tn.WeightsFormatError, match="version"):
        tn.params_from_dict(data)


def test_glorot_bounds_and_determinism():
    a = tn.glorot_uniform(tn.make_rng(5), 10, 20)
    b = tn.glorot_uniform(tn.make_rng(5), 10, 20)
    np.testing.assert_array_equal(a, b)
    assert np.abs(a).max() <= np.sqrt(6 / 30)


OPS = ["elu", "exp", "square", "softmax", "affine", "mul", "add", "sub", "concat", "columns"]


def _apply(op, h, c):
    if op == "elu":
        return tn.elu(h)
    if op == "exp":
        return tn.exp(tn.mul_scalar(h, 0.3))
    if op == "square":
        return tn.square(h)
    if op == "softmax":
        return tn.softmax(h)
    if op == "affine":
        return tn.affine(h, tn.Tensor(c), tn.Tensor(c[0]))
    if op == "mul":
        return tn.mul(h, tn.Tensor(c))
    if op == "add":
        return tn.add(h, h)
    if op == "sub":
        return tn.sub(h, tn.Tensor(c))
    if op == "concat":
        return tn.columns(tn.concat(h, tn.Tensor(c)), 1, 4)
    return tn.concat(tn.columns(h, 0, 2), tn.columns(h, 2, 3))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.sampled_from(OPS), min_size=1, max_size=5))
def test_property_random_graph_gradients(seed, ops):
    rng = np.random.default_rng(seed)
    consts = [rng.normal(size=(3, 3)) * 0.5 for _ in ops]

    def f(x):
        h = x
        for op, c in zip(ops, consts):
            h = _apply(op, h, c)
        return tn.mean(tn.square(h))
    assert tn.grad_check(f, rng.normal(size=(3, 3)), h=1e-6) < 1e-6


def test_forward_is_deterministic():
    rng = np.random.default_rng(3)
    x, W = rng.normal(size=(64, 32)), rng.normal(size=(32, 16))
    a = tn.affine(tn.Tensor(x), tn.Tensor(W), tn.Tensor(np.zeros(16))).value
    b = tn.affine(tn.Tensor(x), tn.Tensor(W), tn.Tensor(np.zeros(16))).value
    assert a.tobytes() == b.tobytes()
