"""The two optimizers used in training.

RMSprop drives autoencoder pretraining; SGD with momentum drives the
ranking model. Both keep one accumulator per named parameter and update
parameters in place. Callers are responsible for gradient clipping.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def rmsprop_step(param, grad, cache, lr=1e-3, rho=0.95, eps=1e-8):
    """One update on a single array; returns (new_param, new_cache)."""
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    cache = np.asarray(cache, dtype=np.float64)
    if param.shape != grad.shape or param.shape != cache.shape:
        raise DimensionError(
            f"rmsprop shapes differ: param {param.shape}, grad {grad.shape}, cache {cache.shape}"
        )
    cache = rho * cache + (1.0 - rho) * grad * grad
    param = param - lr * grad / np.sqrt(cache + eps)
    return param, cache


def sgd_momentum_step(param, grad, velocity, lr=0.01, momentum=0.9):
    """One update on a single array; returns (new_param, new_velocity)."""
    param = np.asarray(param, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    if param.shape != grad.shape or param.shape != velocity.shape:
        raise DimensionError(
            f"sgd shapes differ: param {param.shape}, grad {grad.shape}, velocity {velocity.shape}"
        )
    velocity = momentum * velocity - lr * grad
    return param + velocity, velocity


class RmsProp:
    """Per-parameter squared-gradient running average, keyed by name."""

    def __init__(self, lr: float = 1e-3, rho: float = 0.95, eps: float = 1e-8):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.cache: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            g = grads[name]
            if name not in self.cache:
                self.cache[name] = np.zeros_like(p)
            if g.shape != p.shape:
                raise DimensionError(f"grad shape {g.shape} != param shape {p.shape} for {name}")
            c = self.cache[name]
            c *= self.rho
            c += (1.0 - self.rho) * g * g
            p -= self.lr * g / np.sqrt(c + self.eps)


class SgdMomentum:
    """Classic momentum: v <- mu*v - lr*g; p <- p + v."""

    def __init__(self, lr: float = 0.01, momentum: float = 0.9):
        self.lr = lr
        self.momentum = momentum
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            g = grads[name]
            if name not in self.velocity:
                self.velocity[name] = np.zeros_like(p)
            if g.shape != p.shape:
                raise DimensionError(f"grad shape {g.shape} != param shape {p.shape} for {name}")
            v = self.velocity[name]
            v *= self.momentum
            v -= self.lr * g
            p += v
