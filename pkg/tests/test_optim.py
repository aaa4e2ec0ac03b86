import numpy as np
import pytest

from temporalvqa.errors import DimensionError
from temporalvqa.optim import RmsProp, SgdMomentum, rmsprop_step, sgd_momentum_step
from temporalvqa.rng import Rng


def test_rmsprop_hand_evaluated_step():
    p, c = rmsprop_step(np.array([1.0]), np.array([1.0]), np.array([0.0]),
                        lr=1e-3, rho=0.95, eps=1e-8)
    assert np.isclose(c[0], 0.05, atol=1e-12)
    # 1 - 1e-3 / sqrt(0.05 + 1e-8)
    assert np.isclose(p[0], 0.9955279207979065, atol=1e-12)
    assert np.isclose(p[0], 0.9955279, atol=1e-7)


def test_rmsprop_zero_gradient_decays_cache_only():
    p, c = rmsprop_step(np.array([2.0, -3.0]), np.zeros(2), np.array([0.4, 0.1]),
                        rho=0.95)
    assert np.array_equal(p, [2.0, -3.0])
    assert np.allclose(c, [0.38, 0.095], atol=1e-15)


def test_rmsprop_cache_climbs_toward_squared_gradient():
    p = np.array([0.0])
    c = np.array([0.0])
    g = np.array([0.5])
    prev = 0.0
    for _ in range(6):
        p, c = rmsprop_step(p, g, c)
        assert prev < c[0] < g[0] ** 2
        prev = c[0]


def test_rmsprop_cache_nonnegative_under_random_gradients():
    rng = Rng(13)
    p = np.zeros((3, 2))
    c = np.zeros((3, 2))
    for _ in range(50):
        g = rng.uniform(-2.0, 2.0, (3, 2))
        p, c = rmsprop_step(p, g, c)
        assert np.all(c >= 0.0)
        assert np.all(np.isfinite(p))


def test_rmsprop_shape_mismatch():
    with pytest.raises(DimensionError):
        rmsprop_step(np.zeros(3), np.zeros(2), np.zeros(3))


def test_momentum_no_gradient_no_velocity_is_identity():
    p, v = sgd_momentum_step(np.array([1.5]), np.array([0.0]), np.array([0.0]))
    assert p[0] == 1.5 and v[0] == 0.0


def test_momentum_first_step_is_plain_sgd():
    p, v = sgd_momentum_step(np.array([1.0]), np.array([1.0]), np.array([0.0]),
                             lr=0.01, momentum=0.9)
    assert np.isclose(v[0], -0.01, atol=1e-15)
    assert np.isclose(p[0], 0.99, atol=1e-15)


def test_momentum_coasts_after_gradient_stops():
    p, v = sgd_momentum_step(np.array([1.0]), np.array([0.0]), np.array([-0.01]),
                             lr=0.01, momentum=0.9)
    assert np.isclose(v[0], -0.009, atol=1e-15)
    assert np.isclose(p[0], 1.0 - 0.009, atol=1e-15)


def test_momentum_shape_mismatch():
    with pytest.raises(DimensionError):
        sgd_momentum_step(np.zeros(2), np.zeros(3), np.zeros(2))


def test_class_steppers_match_functional_forms():
    params = {"w": np.array([[1.0, -2.0]])}
    grads = {"w": np.array([[0.3, 0.7]])}
    opt = RmsProp(lr=1e-3, rho=0.95, eps=1e-8)
    expect, cache = rmsprop_step(params["w"].copy(), grads["w"], np.zeros((1, 2)))
    opt.step(params, grads)
    assert np.allclose(params["w"], expect, atol=1e-15)
    assert np.allclose(opt.cache["w"], cache, atol=1e-15)

    params = {"w": np.array([[1.0, -2.0]])}
    opt2 = SgdMomentum(lr=0.01, momentum=0.9)
    expect2, vel = sgd_momentum_step(params["w"].copy(), grads["w"], np.zeros((1, 2)))
    opt2.step(params, grads)
    assert np.allclose(params["w"], expect2, atol=1e-15)
    assert np.allclose(opt2.velocity["w"], vel, atol=1e-15)


def test_class_stepper_shape_mismatch():
    opt = RmsProp()
    with pytest.raises(DimensionError):
        opt.step({"w": np.zeros((2, 2))}, {"w": np.zeros((2, 3))})
