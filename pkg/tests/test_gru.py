import math

import numpy as np
import pytest

from temporalvqa.errors import CacheError, DimensionError, EmptySequenceError
from temporalvqa.gradcheck import check_cell, check_stack
from temporalvqa.gru import (GruLayerParams, GruStack, gru_cell_backward,
                             gru_cell_forward, init_layer, init_stack,
                             stack_backward, stack_forward)
from temporalvqa.mathops import uniform_init
from temporalvqa.rng import Rng


def zero_layer(din=3, hidden=2):
    z = lambda r, c: np.zeros((r, c))
    return GruLayerParams(z(hidden, din), z(hidden, hidden), z(hidden, din),
                          z(hidden, hidden), z(hidden, din), z(hidden, hidden))


def seeded_layer(seed=42, din=3, hidden=2, scale=0.05):
    rng = Rng(seed)
    shapes = [(hidden, din), (hidden, hidden)] * 3
    return GruLayerParams(*(uniform_init(r, c, -scale, scale, rng) for r, c in shapes))


def scalar_cell_reference(params, x, h_prev):
    """Straight-line recomputation of one GRU step in pure Python."""
    hidden = params.hidden_size
    dot = lambda row, v: sum(a * b for a, b in zip(row, v))
    sig = lambda a: 1.0 / (1.0 + math.exp(-a))
    r = [sig(dot(params.w_x_reset[i], x) + dot(params.w_h_reset[i], h_prev))
         for i in range(hidden)]
    z = [sig(dot(params.w_x_update[i], x) + dot(params.w_h_update[i], h_prev))
         for i in range(hidden)]
    gated = [r[i] * h_prev[i] for i in range(hidden)]
    c = [math.tanh(dot(params.w_x_cand[i], x) + dot(params.w_h_cand[i], gated))
         for i in range(hidden)]
    return np.array([(1 - z[i]) * h_prev[i] + z[i] * c[i] for i in range(hidden)])


# --- cell forward ---------------------------------------------------------

def test_zero_weights_halve_previous_state():
    h, cache = gru_cell_forward(zero_layer(), np.array([9.0, -2.0, 3.0]),
                                np.array([0.2, -0.4]))
    assert np.array_equal(cache.reset, [0.5, 0.5])
    assert np.array_equal(cache.update, [0.5, 0.5])
    assert np.array_equal(cache.cand, [0.0, 0.0])
    assert np.array_equal(h, [0.1, -0.2])


def test_zero_weights_zero_state_is_fixed_point():
    h, _ = gru_cell_forward(zero_layer(), np.array([1.0, 1.0, 1.0]), np.zeros(2))
    assert np.array_equal(h, np.zeros(2))


def test_cell_forward_golden_and_scalar_oracle():
    params = seeded_layer(42)
    x = np.array([1.0, 0.0, -1.0])
    h_prev = np.array([0.1, 0.1])
    h, _ = gru_cell_forward(params, x, h_prev)
    # frozen from the pure-Python recomputation below
    golden = np.array([0.04472612637046297, 0.014136087186697455])
    assert np.allclose(h, golden, atol=1e-15)
    assert np.allclose(h, scalar_cell_reference(params, x, h_prev), atol=1e-13)


def test_cell_forward_dimension_errors():
    params = seeded_layer()
    with pytest.raises(DimensionError):
        gru_cell_forward(params, np.zeros(4), np.zeros(2))
    with pytest.raises(DimensionError):
        gru_cell_forward(params, np.zeros(3), np.zeros(3))


def test_gate_ranges_on_random_cells():
    rng = Rng(8)
    for _ in range(10):
        params = seeded_layer(rng.integer(10_000), din=4, hidden=3, scale=1.5)
        x = rng.uniform(-2, 2, (4,))
        h_prev = rng.uniform(-0.9, 0.9, (3,))
        _, cache = gru_cell_forward(params, x, h_prev)
        assert np.all((cache.reset > 0) & (cache.reset < 1))
        assert np.all((cache.update > 0) & (cache.update < 1))
        assert np.all((cache.cand > -1) & (cache.cand < 1))


# --- cell backward --------------------------------------------------------

def test_cell_backward_zero_upstream_gives_zero_grads():
    params = seeded_layer()
    _, cache = gru_cell_forward(params, np.array([1.0, 2.0, 3.0]), np.array([0.3, -0.2]))
    dx, dh_prev, grads = gru_cell_backward(params, cache, np.zeros(2))
    assert np.array_equal(dx, np.zeros(3))
    assert np.array_equal(dh_prev, np.zeros(2))
    assert all(np.array_equal(g, np.zeros_like(g)) for g in grads.named("g").values())


def test_cell_backward_zero_weight_structure():
    params = zero_layer()
    x = np.array([1.0, -1.0, 2.0])
    h_prev = np.array([0.3, -0.5])
    _, cache = gru_cell_forward(params, x, h_prev)
    dh = np.array([1.0, 2.0])
    dx, dh_prev, grads = gru_cell_backward(params, cache, dh)
    # h = 0.5*h_prev + 0.5*tanh(0): direct path carries 0.5*dh, x path is dead
    assert np.allclose(dh_prev, 0.5 * dh, atol=1e-15)
    assert np.array_equal(dx, np.zeros(3))
    assert np.any(grads.w_x_update != 0)
    assert np.any(grads.w_h_update != 0)


def test_cell_backward_matches_finite_differences():
    assert max(check_cell(seed) for seed in range(5)) < 1e-4


def test_cell_backward_cache_mismatch():
    params = seeded_layer()
    other = seeded_layer(din=4, hidden=2)
    _, cache = gru_cell_forward(other, np.zeros(4), np.zeros(2))
    with pytest.raises(CacheError):
        gru_cell_backward(params, cache, np.zeros(2))


# --- stack ----------------------------------------------------------------

def test_stack_rejects_empty_sequence():
    stack = init_stack(3, 2, Rng(1))
    with pytest.raises(EmptySequenceError):
        stack_forward(stack, np.zeros((0, 3)))


def test_stack_eval_mode_is_deterministic():
    stack = init_stack(3, 4, Rng(2))
    x = Rng(3).uniform(-1, 1, (5, 3))
    a, _ = stack_forward(stack, x, train=False)
    b, _ = stack_forward(stack, x, train=False)
    assert np.array_equal(a, b)


def test_stack_train_mode_same_seed_same_masks():
    stack = init_stack(3, 4, Rng(2))
    x = Rng(3).uniform(-1, 1, (5, 3))
    a, ca = stack_forward(stack, x, train=True, rng=Rng(11))
    b, cb = stack_forward(stack, x, train=True, rng=Rng(11))
    assert np.array_equal(a, b)
    assert np.array_equal(ca.masks[0], cb.masks[0])


def test_single_step_stack_equals_chained_cells():
    stack = init_stack(4, 3, Rng(5))
    x = Rng(6).uniform(-1, 1, (1, 4))
    top, cache = stack_forward(stack, x, train=False)
    u = stack.w_proj @ x[0]
    h1, _ = gru_cell_forward(stack.layers[0], u, np.zeros(3))
    h2, _ = gru_cell_forward(stack.layers[1], h1, np.zeros(3))
    assert np.allclose(top[0], h2, atol=1e-15)
    assert np.allclose(cache.h_seqs[0][0], h1, atol=1e-15)


def test_all_ones_dropout_mask_doubles_layer_two_input():
    stack = init_stack(3, 2, Rng(4))
    x = Rng(5).uniform(-1, 1, (2, 3))
    seed = next(s for s in range(2000)
                if np.all(Rng(s).random((2, 2)) >= 0.5))
    _, train_cache = stack_forward(stack, x, train=True, rng=Rng(seed))
    _, eval_cache = stack_forward(stack, x, train=False)
    assert np.array_equal(train_cache.masks[0], np.full((2, 2), 2.0))
    assert np.allclose(train_cache.layer_inputs[1],
                       2.0 * eval_cache.layer_inputs[1], atol=1e-15)


def test_zero_weight_recurrence_halves_each_step():
    stack = init_stack(3, 2, Rng(1), dropout=0.0)
    for w in stack.named("s").values():
        w[:] = 0.0
    h0 = [np.array([0.2, -0.4]), np.array([1.0, 0.25])]
    x = Rng(2).uniform(-5, 5, (7, 3))
    _, cache = stack_forward(stack, x, h0s=h0)
    for t in range(7):
        for layer in range(2):
            assert np.array_equal(cache.h_seqs[layer][t], 0.5 ** (t + 1) * h0[layer])


def test_states_bounded_from_zero_start():
    stack = init_stack(4, 3, Rng(9), dropout=0.0)
    for w in stack.named("s").values():
        w *= 40.0   # drive the gates hard
    x = Rng(10).uniform(-3, 3, (20, 4))
    top, cache = stack_forward(stack, x)
    for h_seq in cache.h_seqs:
        assert np.all(np.abs(h_seq) < 1.0)


def test_stack_backward_zero_upstream_gives_zero_grads():
    stack = init_stack(3, 2, Rng(7))
    x = Rng(8).uniform(-1, 1, (4, 3))
    top, cache = stack_forward(stack, x, train=True, rng=Rng(1))
    grads, dh0s = stack_backward(stack, cache, np.zeros_like(top))
    assert all(np.array_equal(g, np.zeros_like(g)) for g in grads.named("s").values())
    assert all(np.array_equal(d, np.zeros_like(d)) for d in dh0s)


def test_stack_backward_single_step_matches_cell_composition():
    stack = init_stack(4, 3, Rng(12), dropout=0.0)
    x = Rng(13).uniform(-1, 1, (1, 4))
    dh = Rng(14).uniform(-1, 1, (1, 3))
    top, cache = stack_forward(stack, x, train=False)
    grads, dh0s = stack_backward(stack, cache, dh)

    u = stack.w_proj @ x[0]
    h1, c1 = gru_cell_forward(stack.layers[0], u, np.zeros(3))
    _, c2 = gru_cell_forward(stack.layers[1], h1, np.zeros(3))
    dx2, dh0_l2, g2 = gru_cell_backward(stack.layers[1], c2, dh[0])
    du, dh0_l1, g1 = gru_cell_backward(stack.layers[0], c1, dx2)
    assert np.allclose(grads.layers[1].w_x_cand, g2.w_x_cand, atol=1e-14)
    assert np.allclose(grads.layers[0].w_x_cand, g1.w_x_cand, atol=1e-14)
    assert np.allclose(grads.w_proj, np.outer(du, x[0]), atol=1e-14)
    assert np.allclose(dh0s[0], dh0_l1, atol=1e-14)
    assert np.allclose(dh0s[1], dh0_l2, atol=1e-14)


def test_stack_backward_matches_finite_differences():
    assert max(check_stack(seed) for seed in range(5)) < 1e-4


def test_stack_backward_rejects_wrong_shape():
    stack = init_stack(3, 2, Rng(1))
    x = Rng(2).uniform(-1, 1, (4, 3))
    _, cache = stack_forward(stack, x, train=False)
    with pytest.raises(CacheError):
        stack_backward(stack, cache, np.zeros((3, 2)))


def test_stack_shape_validation():
    with pytest.raises(DimensionError):
        GruStack(w_proj=np.zeros((3, 4)), layers=[init_layer(2, 2, Rng(0))])
    stack = init_stack(3, 2, Rng(1))
    with pytest.raises(DimensionError):
        stack_forward(stack, np.zeros((2, 5)))
    with pytest.raises(DimensionError):
        stack_forward(stack, np.zeros((2, 3)), h0s=[np.zeros(2)])
