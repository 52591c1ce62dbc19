import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capam import numcore as nc
from capam.numcore.checkpoint import CheckpointError, load_checkpoint, save_checkpoint


def leaf(a):
    return nc.Tensor(np.array(a, dtype=float), requires_grad=True)


def central_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + h
        up = f()
        x[i] = old - h
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * h)
    return g


def backprop(loss_fn, *leaves):
    for t in leaves:
        t.grad = None
    with nc.Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    return [t.grad for t in leaves]


# --- matmul ---------------------------------------------------------------

def test_matmul_identity_and_selector():
    m = nc.Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(nc.matmul(nc.Tensor(np.eye(2)), m).data, m.data)
    assert np.array_equal(nc.matmul(nc.Tensor([[1.0, 0.0]]), nc.Tensor([[5.0], [7.0]])).data, [[5.0]])


def test_matmul_gradient_of_sum():
    rng = np.random.default_rng(0)
    a, b = leaf(rng.normal(size=(3, 4))), leaf(rng.normal(size=(4, 2)))
    (ga,) = backprop(lambda: nc.tsum(nc.matmul(a, b)), a)
    assert np.allclose(ga, np.ones((3, 2)) @ b.data.T, rtol=0, atol=1e-14)
    fd = central_diff(lambda: (a.data @ b.data).sum(), a.data)
    assert np.max(np.abs(fd - ga) / np.maximum(np.abs(ga), 1e-12)) < 1e-6


def test_matmul_shape_error_names_shapes():
    with pytest.raises(nc.DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        nc.matmul(nc.Tensor(np.zeros((2, 3))), nc.Tensor(np.zeros((2, 3))))


# --- elementwise power ------------------------------------------------------

def test_power_values():
    a = nc.Tensor([[2.0, -3.0]])
    assert nc.elementwise_power(a, 1) is a
    assert np.array_equal(nc.elementwise_power(a, 2).data, [[4.0, 9.0]])


def test_power_cube_gradient_at_two():
    x = leaf([[2.0]])
    (g,) = backprop(lambda: nc.tsum(nc.elementwise_power(x, 3)), x)
    fd = central_diff(lambda: float(x.data[0, 0] ** 3), x.data)
    assert fd[0, 0] == pytest.approx(12.0, rel=1e-8)
    assert g[0, 0] == pytest.approx(12.0, abs=1e-12)


def test_power_zero_rejected():
    with pytest.raises(ValueError):
        nc.elementwise_power(nc.Tensor([1.0]), 0)


# --- softmax ----------------------------------------------------------------

def test_softmax_symmetric():
    assert np.allclose(nc.softmax(nc.Tensor([0.0, 0.0])).data, [0.5, 0.5])


def test_softmax_masking_contract():
    p = nc.softmax(nc.Tensor([5.0, 1.0, 7.0]), [True, True, False]).data
    assert p[2] == 0.0
    e = np.exp([5.0, 1.0])
    assert np.allclose(p[:2], e / e.sum(), atol=1e-15)


def test_softmax_stable_for_large_logits():
    p = nc.softmax(nc.Tensor([1000.0, 0.0])).data
    assert np.all(np.isfinite(p))
    assert p[0] == pytest.approx(1.0) and p[1] < 1e-300 + 1e-12


def test_softmax_all_masked():
    with pytest.raises(nc.NoFeasibleActionError):
        nc.softmax(nc.Tensor([1.0, 2.0]), [False, False])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.data())
def test_softmax_mask_property(logits, data):
    mask = data.draw(st.lists(st.booleans(), min_size=len(logits), max_size=len(logits)))
    if not any(mask):
        mask[0] = True
    p = nc.softmax(nc.Tensor(logits), mask).data
    m = np.array(mask)
    assert np.all(p[~m] == 0.0)
    assert np.all(p[m] >= 0.0)
    assert abs(p[m].sum() - 1.0) < 1e-12


# --- linear / batch norm ------------------------------------------------------

def test_linear_identity_and_bias_broadcast():
    x = nc.Tensor(np.arange(6.0).reshape(2, 3))
    assert np.array_equal(nc.linear(x, nc.Tensor(np.eye(3)), nc.Tensor(np.zeros(3))).data, x.data)
    b = nc.Tensor([1.0, -2.0])
    out = nc.linear(nc.Tensor(np.zeros((3, 4))), nc.Tensor(np.ones((4, 2))), b)
    assert np.array_equal(out.data, np.tile(b.data, (3, 1)))


def test_linear_dimension_mismatch():
    with pytest.raises(nc.DimensionError):
        nc.linear(nc.Tensor(np.zeros((2, 3))), nc.Tensor(np.zeros((4, 2))))


def test_linear_gradient():
    rng = np.random.default_rng(1)
    x, W, b = leaf(rng.uniform(-1, 1, (4, 3))), leaf(rng.uniform(-1, 1, (3, 2))), leaf(rng.uniform(-1, 1, 2))
    err = nc.grad_check(lambda: nc.tsum(nc.tanh(nc.linear(x, W, b))), {"x": x, "W": W, "b": b})
    assert err < 1e-6


def test_batch_norm_constant_column_and_zero_gamma():
    x = nc.Tensor(np.column_stack([np.full(4, 3.0), np.arange(4.0)]))
    out = nc.batch_norm(x, nc.Tensor(np.ones(2)), nc.Tensor(np.zeros(2)), "train").data
    assert np.allclose(out[:, 0], 0.0)
    beta = nc.Tensor([0.5, -1.5])
    out = nc.batch_norm(x, nc.Tensor(np.zeros(2)), beta, "train").data
    assert np.array_equal(out, np.tile(beta.data, (4, 1)))


def test_batch_norm_running_stats_and_eval():
    rng = np.random.default_rng(2)
    x = nc.Tensor(rng.normal(3.0, 2.0, size=(50, 3)))
    stats = nc.RunningStats(3)
    nc.batch_norm(x, nc.Tensor(np.ones(3)), nc.Tensor(np.zeros(3)), "train", stats)
    assert np.allclose(stats.mean, 0.1 * x.data.mean(axis=0))
    assert np.allclose(stats.var, 0.9 + 0.1 * x.data.var(axis=0, ddof=1))
    out = nc.batch_norm(x, nc.Tensor(np.ones(3)), nc.Tensor(np.zeros(3)), "eval", stats).data
    assert np.allclose(out, (x.data - stats.mean) / np.sqrt(stats.var + 1e-5))
    with pytest.raises(ValueError):
        nc.batch_norm(x, nc.Tensor(np.ones(3)), nc.Tensor(np.zeros(3)), "eval")


def test_batch_norm_gradient():
    rng = np.random.default_rng(3)
    x, g, b = leaf(rng.uniform(-1, 1, (6, 3))), leaf(rng.uniform(0.5, 1.5, 3)), leaf(rng.uniform(-1, 1, 3))
    w = nc.Tensor(rng.uniform(-1, 1, (6, 3)))
    err = nc.grad_check(lambda: nc.tsum(nc.mul(nc.batch_norm(x, g, b, "train"), w)), {"x": x, "g": g, "b": b})
    assert err < 1e-6


# --- every op against finite differences -------------------------------------

def _op_cases(rng):
    u = lambda *s: leaf(rng.uniform(-1, 1, s))  # noqa: E731
    a, b, c = u(3, 4), u(4, 2), u(3, 4)
    v = u(4)
    q, k = u(2, 3, 2), u(5, 3, 2)
    mask = rng.random((3, 4)) < 0.7
    mask[:, 0] = True
    w = nc.Tensor(rng.uniform(-1, 1, (3, 4)))
    return {
        "add": (lambda: nc.tsum(nc.tanh(nc.add(a, c))), [a, c]),
        "add_row": (lambda: nc.tsum(nc.tanh(nc.add(a, v))), [a, v]),
        "sub": (lambda: nc.tsum(nc.tanh(nc.sub(a, c))), [a, c]),
        "mul": (lambda: nc.tsum(nc.mul(a, c)), [a, c]),
        "scale": (lambda: nc.tsum(nc.tanh(nc.scale(a, -2.5))), [a]),
        "matmul": (lambda: nc.tsum(nc.tanh(nc.matmul(a, b))), [a, b]),
        "matmul_vec": (lambda: nc.tsum(nc.tanh(nc.matmul(v, b))), [v, b]),
        "einsum": (lambda: nc.tsum(nc.tanh(nc.einsum("thd,nhd->thn", q, k))), [q, k]),
        "power": (lambda: nc.tsum(nc.elementwise_power(a, 3)), [a]),
        "relu": (lambda: nc.tsum(nc.mul(nc.relu(a), w)), [a]),
        "tanh": (lambda: nc.tsum(nc.tanh(a)), [a]),
        "exp": (lambda: nc.tsum(nc.exp(a)), [a]),
        "log": (lambda: nc.tsum(nc.log(nc.add(nc.exp(a), nc.Tensor(np.ones((3, 4)))))), [a]),
        "mean": (lambda: nc.mean(nc.tanh(a)), [a]),
        "reshape": (lambda: nc.tsum(nc.mul(nc.reshape(nc.transpose(a), (3, 4)), w)), [a]),
        "concat": (lambda: nc.tsum(nc.tanh(nc.concat([a, c], axis=1))), [a, c]),
        "take": (lambda: nc.tsum(nc.tanh(nc.take(a, (np.array([0, 2, 2]), np.array([1, 3, 3]))))), [a]),
        "softmax": (lambda: nc.tsum(nc.mul(nc.softmax(a, mask), w)), [a]),
        "log_softmax": (lambda: nc.tsum(nc.take(nc.log_softmax(a, mask), (np.arange(3), np.zeros(3, int)))), [a]),
    }


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("op", sorted(_op_cases(np.random.default_rng(0))))
def test_op_gradients_match_finite_differences(op, seed):
    f, leaves = _op_cases(np.random.default_rng(seed))[op]
    err = nc.grad_check(f, {str(i): t for i, t in enumerate(leaves)})
    assert err < 1e-4


def test_three_op_chain_equals_chain_rule_product():
    x = leaf([0.3])
    w = nc.Tensor([[1.7]])
    (g,) = backprop(lambda: nc.tsum(nc.elementwise_power(nc.tanh(nc.matmul(x, w)), 2)), x)
    u = 0.3 * 1.7
    expected = 2 * np.tanh(u) * (1 - np.tanh(u) ** 2) * 1.7
    assert g[0] == pytest.approx(expected, rel=1e-14)


def test_tape_is_topologically_ordered_and_visits_once():
    x = leaf([[1.0, 2.0]])
    with nc.Tape() as tape:
        y = nc.tanh(x)
        z = nc.add(y, y)
        loss = nc.tsum(nc.mul(z, y))
    seen = {x.node_id}
    for rec in tape.records:
        assert all(i.node_id in seen or not i.requires_grad for i in rec.inputs)
        seen.add(rec.output.node_id)
    calls = []
    for rec in tape.records:
        inner = rec.backward
        rec.backward = lambda g, inner=inner, rec=rec: (calls.append(rec), inner(g))[1]
    tape.backward(loss)
    assert len(calls) == len(tape.records) == len(set(map(id, calls)))
    t = np.tanh(x.data)
    assert np.allclose(x.grad, 4 * t * (1 - t ** 2))


def test_no_recording_outside_tape():
    x = leaf([1.0])
    y = nc.tanh(x)
    assert not y.requires_grad


# --- adam / clipping -------------------------------------------------------------

def test_adam_zero_gradient_is_noop():
    rng = np.random.default_rng(4)
    p = {"w": leaf(rng.normal(size=(3, 2)))}
    before = p["w"].data.copy()
    state = nc.AdamState()
    nc.adam_step(p, {"w": np.zeros((3, 2))}, state)
    assert np.array_equal(p["w"].data, before)
    assert state.step == 1
    nc.adam_step(p, {"w": np.zeros((3, 2))}, state)
    assert state.step == 2


def test_adam_first_step_moves_by_lr():
    # m = 0.1, v = 0.001 -> bias corrected 1 and 1 -> step lr * 1 / (1 + eps)
    p = {"w": leaf([0.5])}
    nc.adam_step(p, {"w": np.array([1.0])}, nc.AdamState(lr=1e-4))
    assert p["w"].data[0] == pytest.approx(0.5 - 1e-4 / (1 + 1e-8), abs=1e-15)


def test_adam_rejects_non_finite():
    p = {"w": leaf([0.5]), "v": leaf([1.0])}
    with pytest.raises(nc.NonFiniteGradientError, match="'v'"):
        nc.adam_step(p, {"w": np.array([1.0]), "v": np.array([np.nan])}, nc.AdamState())
    assert p["w"].data[0] == 0.5


def test_clip_grad_norm():
    g = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert nc.clip_grad_norm(g, 1.0) == pytest.approx(5.0)
    assert nc.global_grad_norm(g) == pytest.approx(1.0)


# --- grad_check ---------------------------------------------------------------------

def test_grad_check_constant_function():
    x = leaf([1.0, 2.0])
    assert nc.grad_check(lambda: nc.Tensor(3.0), {"x": x}) == 0.0


# --- checkpoints ---------------------------------------------------------------------

def test_checkpoint_round_trip_and_validation(tmp_path):
    arrays = {"w": np.arange(6.0).reshape(2, 3) / 7, "b": np.array([np.pi])}
    path = tmp_path / "ck.json"
    save_checkpoint(path, {"h_l": 8}, arrays)
    header, loaded = load_checkpoint(path, {"w": (2, 3), "b": (1,)})
    assert header["h_l"] == 8 and header["format_version"] == 1
    assert all(np.array_equal(loaded[k], arrays[k]) for k in arrays)
    with pytest.raises(CheckpointError):
        load_checkpoint(path, {"w": (3, 2), "b": (1,)})
    path.write_text(path.read_text()[:40])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
