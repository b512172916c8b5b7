import math
import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wlasl_pose import tensor as T
from wlasl_pose.gradcheck import check_gradients
from wlasl_pose.tensor import ShapeError, Value

from conftest import FD_TOL, max_rel_err


def leaf(x):
    return Value(x, requires_grad=True)


# ---------------------------------------------------------------- matmul


def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(T.matmul(np.eye(2), a).data, a)


def test_matmul_hand_computed():
    out = T.matmul([[1.0, 2.0], [3.0, 4.0]], [[5.0], [6.0]])
    np.testing.assert_array_equal(out.data, [[17.0], [39.0]])


def test_matmul_keypoint_shapes():
    out = T.matmul(np.ones((55, 55)), np.ones((55, 100)))
    assert out.shape == (55, 100)


def test_matmul_mismatch_names_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        T.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_backward_rule(rng):
    a, b = leaf(rng.normal(size=(3, 4))), leaf(rng.normal(size=(4, 2)))
    T.backward(T.sum_all(T.matmul(a, b)))
    g = np.ones((3, 2))
    np.testing.assert_allclose(a.grad, g @ b.data.T)
    np.testing.assert_allclose(b.grad, a.data.T @ g)


def test_matmul_associative(rng):
    a, b, c = (rng.normal(size=(8, 8)) for _ in range(3))
    left = T.matmul(T.matmul(a, b), c).data
    right = T.matmul(a, T.matmul(b, c)).data
    assert np.max(np.abs(left - right)) <= 1e-9 * np.max(np.abs(left))


def test_batched_matmul_broadcasts_leading_dims(rng):
    a = rng.normal(size=(3, 3))
    h = rng.normal(size=(4, 3, 5))
    np.testing.assert_allclose(T.matmul(a, h).data, np.stack([a @ x for x in h]))


# ---------------------------------------------------------------- elementwise


def test_tanh_values():
    np.testing.assert_array_equal(T.tanh(np.zeros((2, 3))).data, np.zeros((2, 3)))
    assert T.tanh(1.0).item() == pytest.approx(0.7615941559557649, abs=1e-15)


def test_tanh_gradient_at_zero():
    x = leaf([0.0])
    T.backward(T.tanh(x))
    assert x.grad[0] == 1.0


def test_sigmoid_values_and_saturation():
    assert T.sigmoid(0.0).item() == 0.5
    assert abs(T.sigmoid(50.0).item() - 1.0) <= 1e-15
    assert T.sigmoid(-800.0).item() == 0.0  # no overflow warning path


def test_sigmoid_gradient_at_zero():
    x = leaf([0.0])
    T.backward(T.sigmoid(x))
    assert x.grad[0] == 0.25


def test_add_zero_and_rows():
    x = np.array([[1.0, -2.0]])
    np.testing.assert_array_equal(T.add(x, 0.0).data, x)
    np.testing.assert_array_equal(T.add([[1.0, 2.0]], [[3.0, 4.0]]).data, [[4.0, 6.0]])


def test_row_bias_broadcast_matches_tiling(rng):
    m = rng.normal(size=(5, 3))
    bias = rng.normal(size=3)
    np.testing.assert_array_equal(T.add(m, bias).data, m + np.tile(bias, (5, 1)))
    b = leaf(bias)
    T.backward(T.sum_all(T.mul(T.add(m, b), m)))
    # d/d bias of sum((m + tile(b)) * m) = column sums of m
    np.testing.assert_allclose(b.grad, m.sum(axis=0))


def test_incompatible_shapes():
    with pytest.raises(ShapeError):
        T.add(np.ones((2, 3)), np.ones((3, 2)))


# ---------------------------------------------------------------- reductions


def test_mean_over_axis():
    np.testing.assert_array_equal(T.mean_over_axis(np.full((3, 4), 2.5), 0).data, np.full(4, 2.5))
    np.testing.assert_array_equal(T.mean_over_axis([[1.0, 3.0], [5.0, 7.0]], 1).data, [2.0, 6.0])


def test_mean_gradient_spreads():
    x = leaf(np.ones((2, 5)))
    T.backward(T.sum_all(T.mean_over_axis(x, 1)))
    np.testing.assert_allclose(x.grad, np.full((2, 5), 1 / 5))


def test_mean_axis_out_of_range():
    with pytest.raises(ShapeError):
        T.mean_over_axis(np.ones((2, 2)), 2)


# ---------------------------------------------------------------- cross-entropy


def test_uniform_logits_loss():
    assert T.softmax_cross_entropy(np.zeros((3, 4)), [0, 1, 3]).item() == pytest.approx(math.log(4), abs=1e-12)


def test_confident_logits_loss():
    assert T.softmax_cross_entropy([[10.0, 0.0, 0.0]], [0]).item() <= 1e-4


def test_cross_entropy_gradient_rows_sum_to_zero(rng):
    x = leaf(rng.normal(size=(6, 5)))
    T.backward(T.softmax_cross_entropy(x, rng.integers(0, 5, size=6)))
    np.testing.assert_allclose(x.grad.sum(axis=1), 0.0, atol=1e-15)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(ValueError, match="label 4"):
        T.softmax_cross_entropy(np.zeros((1, 4)), [4])


@given(hnp.arrays(np.float64, (3, 7), elements=st.floats(-50, 50)))
def test_softmax_rows_sum_to_one(logits):
    np.testing.assert_allclose(T.softmax(logits).sum(axis=1), 1.0, atol=1e-12)


def test_cross_entropy_is_stable_for_huge_logits():
    loss = T.softmax_cross_entropy([[1000.0, 0.0]], [1]).item()
    assert loss == pytest.approx(1000.0)


# ---------------------------------------------------------------- backward


def test_backward_sum_gives_ones():
    x = leaf(np.arange(6.0).reshape(2, 3))
    T.backward(T.sum_all(x))
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_quadratic_form(rng):
    v = rng.normal(size=(4, 1))
    x = leaf(v)
    T.backward(T.matmul(T.reshape(x, (1, 4)), x))
    np.testing.assert_allclose(x.grad, 2 * v)


def test_backward_rejects_non_scalar():
    with pytest.raises(ShapeError):
        T.backward(T.tanh(leaf(np.ones(3))))


def test_backward_accumulates_and_resets(rng):
    x = leaf(rng.normal(size=(3, 3)))

    def loss():
        return T.sum_all(T.tanh(T.matmul(x, x)))

    T.backward(loss())
    first = x.grad.copy()
    T.backward(loss())
    np.testing.assert_allclose(x.grad, 2 * first)
    x.zero_grad()
    assert not x.grad.any()
    T.backward(loss())
    assert np.array_equal(x.grad, first)  # bitwise


def test_tape_visits_each_node_once(rng):
    x = leaf(rng.normal(size=(2, 2)))
    h = T.tanh(x)
    loss = T.sum_all(T.add(T.mul(h, h), h))  # h is shared by three consumers
    tape = T.backward(loss)
    assert len({id(n) for n in tape}) == len(tape) == 5
    positions = {id(n): i for i, n in enumerate(tape)}
    for node in tape:
        for p in node._parents:
            if id(p) in positions:
                assert positions[id(p)] < positions[id(node)]


def test_data_is_read_only():
    v = Value([1.0, 2.0])
    with pytest.raises(ValueError):
        v.data[0] = 5.0


def test_long_chain_does_not_recurse():
    x = leaf([0.1])
    y = x
    for _ in range(5000):
        y = T.add(y, 0.0)
    T.backward(T.sum_all(y))
    assert x.grad[0] == 1.0


# ---------------------------------------------------------------- finite differences per primitive


def _fd_case(name):
    return {
        "matmul": (lambda v: T.sum_all(T.tanh(T.matmul(v["a"], v["b"]))), {"a": (3, 4), "b": (4, 2)}),
        "add": (lambda v: T.sum_all(T.mul(T.add(v["a"], v["b"]), v["a"])), {"a": (3, 4), "b": (4,)}),
        "sub": (lambda v: T.sum_all(T.mul(T.sub(v["a"], v["b"]), v["a"])), {"a": (2, 3, 4), "b": (3, 4)}),
        "mul": (lambda v: T.sum_all(T.mul(v["a"], v["b"])), {"a": (3, 4), "b": (1, 4)}),
        "tanh": (lambda v: T.sum_all(T.mul(T.tanh(v["a"]), v["b"])), {"a": (3, 4), "b": (3, 4)}),
        "sigmoid": (lambda v: T.sum_all(T.mul(T.sigmoid(v["a"]), v["b"])), {"a": (3, 4), "b": (3, 4)}),
        "mean": (lambda v: T.sum_all(T.mul(T.mean_over_axis(v["a"], 1), v["b"])), {"a": (3, 4, 2), "b": (3, 2)}),
        "xent": (lambda v: T.softmax_cross_entropy(v["a"], [0, 2, 1]), {"a": (3, 4)}),
        "reshape": (lambda v: T.sum_all(T.mul(T.reshape(v["a"], (6, 2)), v["b"])), {"a": (3, 4), "b": (6, 2)}),
        "stack": (lambda v: T.sum_all(T.mul(T.stack([v["a"], v["b"]], 1), T.stack([v["b"], v["a"]], 1))), {"a": (3, 2), "b": (3, 2)}),
        "take": (lambda v: T.sum_all(T.mul(T.take(v["a"], 1), v["b"])), {"a": (3, 2, 2), "b": (2, 2)}),
        "neg": (lambda v: T.sum_all(T.mul(T.neg(v["a"]), v["a"])), {"a": (2, 2)}),
    }[name]


@pytest.mark.parametrize(
    "name", ["matmul", "add", "sub", "mul", "tanh", "sigmoid", "mean", "xent", "reshape", "stack", "take", "neg"]
)
def test_primitive_matches_finite_differences(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    fn, shapes = _fd_case(name)
    arrays = {k: rng.uniform(-2, 2, size=s) for k, s in shapes.items()}
    assert check_gradients(fn, arrays).max_rel_error <= FD_TOL


@pytest.mark.parametrize("seed", range(20))
def test_composite_graph_matches_finite_differences(seed):
    # uniform draws, not hypothesis: near-zero inputs make every gradient
    # smaller than the finite-difference roundoff and the check meaningless
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-2, 2, size=(2, 3)), rng.uniform(-2, 2, size=(3, 2))

    def fn(v):
        h = T.tanh(T.matmul(v["a"], v["b"]))
        return T.softmax_cross_entropy(T.add(h, T.mul(T.sigmoid(h), h)), [1, 0])

    assert check_gradients(fn, {"a": a, "b": b}).max_rel_error <= FD_TOL


def test_gradcheck_helper_agrees_with_plain_fd(rng):
    from conftest import fd_grad

    a0 = rng.uniform(-2, 2, size=(3, 3))
    a = leaf(a0)
    T.backward(T.sum_all(T.tanh(T.matmul(a, a))))
    fd = fd_grad(lambda x: float(np.tanh(x @ x).sum()), a0)
    assert max_rel_err(a.grad, fd) <= FD_TOL
