"""Two-layer GRU stack with input projection, exact backward pass, and
inter-layer inverted dropout.

The recurrence is bias-free:

    reset  = sigmoid(Wxr x + Whr h)
    update = sigmoid(Wxz x + Whz h)
    cand   = tanh(Wxh x + Whh (reset*h))
    h'     = (1-update)*h + update*cand

Layer 1 consumes the projected input (w_proj @ x); in train mode each
non-top layer's output is masked with inverted dropout before feeding the
layer above. Hot loops live in the selected kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import CacheError, DimensionError, EmptySequenceError
from .mathops import uniform_init
from .rng import Rng

PROJ_INIT_RANGE = 0.01
RECURRENT_INIT_RANGE = 0.05


@dataclass
class GruLayerParams:
    """The six weight matrices of one GRU layer: W[xh]* are (H, Din), W[hh]* (H, H)."""

    w_x_reset: np.ndarray
    w_h_reset: np.ndarray
    w_x_update: np.ndarray
    w_h_update: np.ndarray
    w_x_cand: np.ndarray
    w_h_cand: np.ndarray

    def __post_init__(self):
        h, din = self.w_x_reset.shape
        for name in ("w_x_reset", "w_x_update", "w_x_cand"):
            if getattr(self, name).shape != (h, din):
                raise DimensionError(f"{name} must be ({h}, {din})")
        for name in ("w_h_reset", "w_h_update", "w_h_cand"):
            if getattr(self, name).shape != (h, h):
                raise DimensionError(f"{name} must be ({h}, {h})")

    @property
    def hidden_size(self) -> int:
        return self.w_x_reset.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_x_reset.shape[1]

    def as_tuple(self):
        return (self.w_x_reset, self.w_h_reset, self.w_x_update, self.w_h_update,
                self.w_x_cand, self.w_h_cand)

    def named(self, prefix: str) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.w_x_reset": self.w_x_reset,
            f"{prefix}.w_h_reset": self.w_h_reset,
            f"{prefix}.w_x_update": self.w_x_update,
            f"{prefix}.w_h_update": self.w_h_update,
            f"{prefix}.w_x_cand": self.w_x_cand,
            f"{prefix}.w_h_cand": self.w_h_cand,
        }


@dataclass
class GruStack:
    """Input projection plus N stacked GRU layers (default 2)."""

    w_proj: np.ndarray
    layers: list[GruLayerParams]
    dropout: float = 0.5

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("stack needs at least one GRU layer")
        if self.w_proj.shape[0] != self.layers[0].input_size:
            raise DimensionError("projection output dim must match layer-1 input dim")
        for lower, upper in zip(self.layers, self.layers[1:]):
            if upper.input_size != lower.hidden_size:
                raise DimensionError("stacked layer input dim must match lower hidden dim")
        if not 0.0 <= self.dropout < 1.0:
            raise DimensionError(f"dropout rate must be in [0, 1), got {self.dropout}")

    @property
    def feature_dim(self) -> int:
        return self.w_proj.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.layers[-1].hidden_size

    def named(self, prefix: str) -> dict[str, np.ndarray]:
        out = {f"{prefix}.w_proj": self.w_proj}
        for i, layer in enumerate(self.layers):
            out.update(layer.named(f"{prefix}.l{i}"))
        return out


def init_layer(input_size: int, hidden: int, rng: Rng,
               scale: float = RECURRENT_INIT_RANGE) -> GruLayerParams:
    u = lambda r, c: uniform_init(r, c, -scale, scale, rng)
    return GruLayerParams(
        w_x_reset=u(hidden, input_size), w_h_reset=u(hidden, hidden),
        w_x_update=u(hidden, input_size), w_h_update=u(hidden, hidden),
        w_x_cand=u(hidden, input_size), w_h_cand=u(hidden, hidden),
    )


def init_stack(feature_dim: int, hidden: int, rng: Rng, n_layers: int = 2,
               dropout: float = 0.5) -> GruStack:
    w_proj = uniform_init(hidden, feature_dim, -PROJ_INIT_RANGE, PROJ_INIT_RANGE, rng)
    layers = [init_layer(hidden, hidden, rng) for _ in range(n_layers)]
    return GruStack(w_proj=w_proj, layers=layers, dropout=dropout)


@dataclass
class StepCache:
    """Activations of one cell step, kept for the backward pass."""

    x: np.ndarray
    h_prev: np.ndarray
    reset: np.ndarray
    update: np.ndarray
    cand: np.ndarray
    h: np.ndarray


@dataclass
class GruLayerGrads:
    w_x_reset: np.ndarray
    w_h_reset: np.ndarray
    w_x_update: np.ndarray
    w_h_update: np.ndarray
    w_x_cand: np.ndarray
    w_h_cand: np.ndarray

    def named(self, prefix: str) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.w_x_reset": self.w_x_reset,
            f"{prefix}.w_h_reset": self.w_h_reset,
            f"{prefix}.w_x_update": self.w_x_update,
            f"{prefix}.w_h_update": self.w_h_update,
            f"{prefix}.w_x_cand": self.w_x_cand,
            f"{prefix}.w_h_cand": self.w_h_cand,
        }


def _as_c64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def gru_cell_forward(params: GruLayerParams, x: np.ndarray,
                     h_prev: np.ndarray) -> tuple[np.ndarray, StepCache]:
    x = _as_c64(x)
    h_prev = _as_c64(h_prev)
    if x.shape != (params.input_size,):
        raise DimensionError(f"x must have dim {params.input_size}, got {x.shape}")
    if h_prev.shape != (params.hidden_size,):
        raise DimensionError(f"h_prev must have dim {params.hidden_size}, got {h_prev.shape}")
    h_seq, reset, update, cand = backend.layer_forward(
        *(_as_c64(w) for w in params.as_tuple()), x[None, :], h_prev)
    cache = StepCache(x=x, h_prev=h_prev, reset=reset[0], update=update[0],
                      cand=cand[0], h=h_seq[0])
    return h_seq[0], cache


def gru_cell_backward(params: GruLayerParams, cache: StepCache,
                      dh: np.ndarray) -> tuple[np.ndarray, np.ndarray, GruLayerGrads]:
    dh = _as_c64(dh)
    if cache.x.shape != (params.input_size,) or cache.h.shape != (params.hidden_size,):
        raise CacheError("cache does not match these layer parameters")
    if dh.shape != (params.hidden_size,):
        raise DimensionError(f"dh must have dim {params.hidden_size}, got {dh.shape}")
    zeros = np.zeros_like(dh)
    dx_seq, dh0, *wgrads = backend.layer_backward(
        *(_as_c64(w) for w in params.as_tuple()),
        cache.x[None, :], cache.h_prev,
        cache.h[None, :], cache.reset[None, :], cache.update[None, :], cache.cand[None, :],
        dh[None, :], zeros)
    return dx_seq[0], dh0, GruLayerGrads(*wgrads)


@dataclass
class StackCache:
    x_seq: np.ndarray
    h0s: list[np.ndarray]
    layer_inputs: list[np.ndarray]        # input fed to each layer, after dropout
    h_seqs: list[np.ndarray]
    resets: list[np.ndarray]
    updates: list[np.ndarray]
    cands: list[np.ndarray]
    masks: list[np.ndarray | None]        # dropout masks between layer i and i+1
    train: bool = False


@dataclass
class StackGrads:
    w_proj: np.ndarray
    layers: list[GruLayerGrads]
    dx_seq: np.ndarray = field(default=None, repr=False)

    def named(self, prefix: str) -> dict[str, np.ndarray]:
        out = {f"{prefix}.w_proj": self.w_proj}
        for i, layer in enumerate(self.layers):
            out.update(layer.named(f"{prefix}.l{i}"))
        return out


def stack_forward(stack: GruStack, x_seq: np.ndarray, h0s: list[np.ndarray] | None = None,
                  train: bool = False, rng: Rng | None = None
                  ) -> tuple[np.ndarray, StackCache]:
    """Run the stack over x_seq (T, feature_dim); returns top-layer states (T, H).

    h0s defaults to zeros for every layer. Train mode needs an rng for the
    dropout masks; masks use inverted scaling so eval needs no rescale.
    """
    x_seq = _as_c64(np.atleast_2d(x_seq))
    if x_seq.shape[0] == 0:
        raise EmptySequenceError("cannot run the stack on an empty sequence")
    if x_seq.shape[1] != stack.feature_dim:
        raise DimensionError(f"expected feature dim {stack.feature_dim}, got {x_seq.shape[1]}")
    if train and stack.dropout > 0.0 and rng is None:
        raise DimensionError("train-mode forward with dropout needs an rng")
    if h0s is None:
        h0s = [np.zeros(layer.hidden_size) for layer in stack.layers]
    if len(h0s) != len(stack.layers):
        raise DimensionError("need one initial state per layer")

    inputs = x_seq @ stack.w_proj.T
    cache = StackCache(x_seq=x_seq, h0s=[_as_c64(h) for h in h0s], layer_inputs=[],
                       h_seqs=[], resets=[], updates=[], cands=[], masks=[], train=train)
    for i, layer in enumerate(stack.layers):
        inputs = _as_c64(inputs)
        cache.layer_inputs.append(inputs)
        h_seq, reset, update, cand = backend.layer_forward(
            *(_as_c64(w) for w in layer.as_tuple()), inputs, cache.h0s[i])
        cache.h_seqs.append(h_seq)
        cache.resets.append(reset)
        cache.updates.append(update)
        cache.cands.append(cand)
        if i < len(stack.layers) - 1:
            if train and stack.dropout > 0.0:
                keep = rng.random(h_seq.shape) >= stack.dropout
                mask = keep / (1.0 - stack.dropout)
                cache.masks.append(mask)
                inputs = h_seq * mask
            else:
                cache.masks.append(None)
                inputs = h_seq
    return cache.h_seqs[-1], cache


def stack_backward(stack: GruStack, cache: StackCache, d_top: np.ndarray,
                   d_last: list[np.ndarray] | None = None
                   ) -> tuple[StackGrads, list[np.ndarray]]:
    """Backpropagate through time over the whole stack.

    d_top is (T, H): gradients on the top layer's per-step states. d_last
    optionally adds one gradient per layer on that layer's final state.
    Returns the parameter gradients and dh0 per layer.
    """
    d_top = _as_c64(d_top)
    n_layers = len(stack.layers)
    if len(cache.h_seqs) != n_layers:
        raise CacheError("cache layer count does not match the stack")
    t_len = cache.x_seq.shape[0]
    if d_top.shape != cache.h_seqs[-1].shape:
        raise CacheError(f"d_top shape {d_top.shape} does not match cached states")
    if d_last is None:
        d_last = [np.zeros(layer.hidden_size) for layer in stack.layers]

    layer_grads: list[GruLayerGrads] = [None] * n_layers
    dh0s: list[np.ndarray] = [None] * n_layers
    d_states = d_top
    for i in range(n_layers - 1, -1, -1):
        layer = stack.layers[i]
        dx_seq, dh0, *wgrads = backend.layer_backward(
            *(_as_c64(w) for w in layer.as_tuple()),
            cache.layer_inputs[i], cache.h0s[i],
            cache.h_seqs[i], cache.resets[i], cache.updates[i], cache.cands[i],
            _as_c64(d_states), _as_c64(d_last[i]))
        layer_grads[i] = GruLayerGrads(*wgrads)
        dh0s[i] = dh0
        if i > 0:
            mask = cache.masks[i - 1]
            d_states = dx_seq if mask is None else dx_seq * mask
        else:
            d_proj_out = dx_seq
    dw_proj = d_proj_out.T @ cache.x_seq
    dx_raw = d_proj_out @ stack.w_proj
    return StackGrads(w_proj=dw_proj, layers=layer_grads, dx_seq=dx_raw), dh0s
