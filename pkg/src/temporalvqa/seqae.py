"""GRU encoder-decoder models that learn clip representations by reconstruction.

Three variants share one architecture and differ only in their target
window: the present model reconstructs its own input reversed, the future
model predicts the following window, and the past model recovers the
preceding window in forward order. Encoder and decoder are independent
stacks (weights never shared); the decoder is teacher-forced on target
frames and starts from the encoder's final per-layer states. At inference
only the encoder runs: the clip representation is the time-average of its
top-layer states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError, DimensionError, EmptySequenceError, WindowError
from .gru import GruStack, init_stack, stack_backward, stack_forward, StackCache
from .mathops import clip_elementwise, uniform_init
from .optim import RmsProp
from .rng import Rng

READOUT_INIT_RANGE = 0.01


class Variant(str, enum.Enum):
    PRESENT = "present"
    PAST = "past"
    FUTURE = "future"


@dataclass
class SeqAeModel:
    variant: Variant
    encoder: GruStack
    decoder: GruStack
    w_readout: np.ndarray         # (feature_dim, hidden)
    enc_len: int

    def __post_init__(self):
        if self.w_readout.shape != (self.encoder.feature_dim, self.decoder.hidden_size):
            raise DimensionError("readout must map decoder hidden to feature space")
        if self.enc_len < 1:
            raise DimensionError("enc_len must be at least 1")

    @property
    def hidden_size(self) -> int:
        return self.encoder.hidden_size

    @property
    def feature_dim(self) -> int:
        return self.encoder.feature_dim

    def params(self) -> dict[str, np.ndarray]:
        out = self.encoder.named("enc")
        out.update(self.decoder.named("dec"))
        out["w_readout"] = self.w_readout
        return out


def init_seqae(variant: Variant, feature_dim: int, hidden: int, enc_len: int,
               rng: Rng, n_layers: int = 2, dropout: float = 0.5) -> SeqAeModel:
    encoder = init_stack(feature_dim, hidden, rng, n_layers=n_layers, dropout=dropout)
    decoder = init_stack(feature_dim, hidden, rng, n_layers=n_layers, dropout=dropout)
    w_readout = uniform_init(feature_dim, hidden, -READOUT_INIT_RANGE, READOUT_INIT_RANGE, rng)
    return SeqAeModel(variant=Variant(variant), encoder=encoder, decoder=decoder,
                      w_readout=w_readout, enc_len=enc_len)


def build_targets(variant: Variant, clip: np.ndarray, position: int,
                  enc_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Slice (input_window, target_window) for one training example.

    Input is always frames [position, position+enc_len). Targets: present
    reconstructs the input reversed; future predicts the next enc_len
    frames; past recovers the previous enc_len frames in forward order.
    """
    variant = Variant(variant)
    n = clip.shape[0]
    t = enc_len
    if position < 0 or position + t > n:
        raise WindowError(f"input window [{position}, {position + t}) outside clip of {n} frames")
    inp = clip[position:position + t]
    if variant is Variant.PRESENT:
        tgt = inp[::-1]
    elif variant is Variant.FUTURE:
        if position + 2 * t > n:
            raise WindowError(f"future window [{position + t}, {position + 2 * t}) outside clip of {n} frames")
        tgt = clip[position + t:position + 2 * t]
    else:
        if position - t < 0:
            raise WindowError(f"past window [{position - t}, {position}) starts before frame 0")
        tgt = clip[position - t:position]
    return np.array(inp, dtype=np.float64), np.array(tgt, dtype=np.float64)


def valid_positions(variant: Variant, n_frames: int, enc_len: int) -> range:
    """Positions where build_targets succeeds; may be empty."""
    variant = Variant(variant)
    if variant is Variant.PRESENT:
        return range(0, n_frames - enc_len + 1)
    if variant is Variant.FUTURE:
        return range(0, n_frames - 2 * enc_len + 1)
    return range(enc_len, n_frames - enc_len + 1)


@dataclass
class ReconCache:
    inp: np.ndarray
    tgt: np.ndarray
    enc_cache: StackCache
    dec_cache: StackCache
    preds: np.ndarray
    normalize: bool


def forward_reconstruct(model: SeqAeModel, inp: np.ndarray, tgt: np.ndarray,
                        train: bool = False, rng: Rng | None = None,
                        normalize: bool = True) -> tuple[float, ReconCache]:
    """Encoder over the input window, teacher-forced decoder over the target.

    Decoder input at step t is target frame t-1 (zeros at t=0); prediction
    is w_readout @ h_top. Loss is the summed squared error, divided by the
    number of steps unless normalize=False.
    """
    inp = np.asarray(inp, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    if inp.ndim != 2 or tgt.ndim != 2 or tgt.shape[1] != inp.shape[1]:
        raise DimensionError("input and target windows must be (T, D) with equal D")
    if inp.shape[1] != model.feature_dim:
        raise DimensionError(f"expected feature dim {model.feature_dim}, got {inp.shape[1]}")
    _, enc_cache = stack_forward(model.encoder, inp, train=train, rng=rng)
    h0s = [h_seq[-1] for h_seq in enc_cache.h_seqs]
    dec_inputs = np.vstack([np.zeros((1, tgt.shape[1])), tgt[:-1]])
    dec_top, dec_cache = stack_forward(model.decoder, dec_inputs, h0s=h0s,
                                       train=train, rng=rng)
    preds = dec_top @ model.w_readout.T
    err = preds - tgt
    loss = float((err * err).sum())
    if normalize:
        loss /= tgt.shape[0]
    return loss, ReconCache(inp=inp, tgt=tgt, enc_cache=enc_cache, dec_cache=dec_cache,
                            preds=preds, normalize=normalize)


def backward_reconstruct(model: SeqAeModel, cache: ReconCache) -> dict[str, np.ndarray]:
    """Gradients of the reconstruction loss for every parameter in the model."""
    t_len = cache.tgt.shape[0]
    d_preds = 2.0 * (cache.preds - cache.tgt)
    if cache.normalize:
        d_preds = d_preds / t_len
    dw_readout = d_preds.T @ cache.dec_cache.h_seqs[-1]
    d_dec_top = d_preds @ model.w_readout
    dec_grads, dec_dh0 = stack_backward(model.decoder, cache.dec_cache, d_dec_top)
    zeros_top = np.zeros_like(cache.enc_cache.h_seqs[-1])
    enc_grads, _ = stack_backward(model.encoder, cache.enc_cache, zeros_top, d_last=dec_dh0)
    grads = enc_grads.named("enc")
    grads.update(dec_grads.named("dec"))
    grads["w_readout"] = dw_readout
    return grads


def reconstruction_grads(model: SeqAeModel, inp, tgt, train=True, rng=None,
                         normalize=True) -> tuple[float, dict[str, np.ndarray]]:
    loss, cache = forward_reconstruct(model, inp, tgt, train=train, rng=rng,
                                      normalize=normalize)
    return loss, backward_reconstruct(model, cache)


@dataclass
class TrainConfig:
    # lr 5e-3 rather than 1e-3: with the 1e-4 element-wise clip, 1e-3 cannot
    # escape the memoryless-predictor plateau within a 500-iteration budget
    epochs: int
    batch_size: int = 64
    clip: float = 1e-4
    lr: float = 5e-3
    rho: float = 0.95
    eps: float = 1e-8
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise DimensionError("batch_size must be at least 1")
        if self.clip <= 0:
            raise DimensionError("clip threshold must be positive")


def pretrain(model: SeqAeModel, clips: list[np.ndarray],
             config: TrainConfig) -> list[float]:
    """Train by reconstruction with RMSprop; returns per-epoch mean loss.

    Windows are sampled uniformly over (clip, valid position) pairs with the
    run seed; gradients are averaged over the mini-batch and clipped
    element-wise before the optimizer step.
    """
    if not clips:
        raise DatasetError("empty clip list")
    usable = []
    for idx, clip in enumerate(clips):
        positions = valid_positions(model.variant, clip.shape[0], model.enc_len)
        if len(positions) > 0:
            usable.append((idx, positions))
    if not usable:
        raise DatasetError("no clip yields a valid training window")

    rng = Rng(config.seed)
    opt = RmsProp(lr=config.lr, rho=config.rho, eps=config.eps)
    params = model.params()
    batches_per_epoch = max(1, len(clips) // config.batch_size)
    curve: list[float] = []
    for _ in range(config.epochs):
        epoch_losses = []
        for _ in range(batches_per_epoch):
            grad_sum: dict[str, np.ndarray] = {k: np.zeros_like(v) for k, v in params.items()}
            loss_sum = 0.0
            for _ in range(config.batch_size):
                idx, positions = usable[rng.integer(len(usable))]
                pos = positions[rng.integer(len(positions))]
                inp, tgt = build_targets(model.variant, clips[idx], pos, model.enc_len)
                loss, grads = reconstruction_grads(model, inp, tgt, train=True, rng=rng,
                                                   normalize=config.normalize)
                loss_sum += loss
                for k, g in grads.items():
                    grad_sum[k] += g
            scale = 1.0 / config.batch_size
            clipped = {k: clip_elementwise(g * scale, config.clip) for k, g in grad_sum.items()}
            opt.step(params, clipped)
            epoch_losses.append(loss_sum * scale)
        curve.append(float(np.mean(epoch_losses)))
    return curve


def represent(model: SeqAeModel, clip: np.ndarray) -> np.ndarray:
    """Clip representation: eval-mode encoder from zeros, mean of top-layer states."""
    clip = np.asarray(clip, dtype=np.float64)
    if clip.ndim != 2 or clip.shape[0] == 0:
        raise EmptySequenceError("representation needs at least one frame")
    top, _ = stack_forward(model.encoder, clip, train=False)
    return top.mean(axis=0)


def mean_pool(clip: np.ndarray) -> np.ndarray:
    """Order-blind baseline representation: the mean frame."""
    clip = np.asarray(clip, dtype=np.float64)
    if clip.ndim != 2 or clip.shape[0] == 0:
        raise EmptySequenceError("mean pooling needs at least one frame")
    return clip.mean(axis=0)


def evaluate_mse(model: SeqAeModel, clips: list[np.ndarray], seed: int = 0,
                 max_windows: int | None = None) -> float:
    """Mean eval-mode reconstruction loss over every valid window (or a sample)."""
    jobs = []
    for idx, clip in enumerate(clips):
        for pos in valid_positions(model.variant, clip.shape[0], model.enc_len):
            jobs.append((idx, pos))
    if not jobs:
        raise DatasetError("no valid evaluation windows")
    if max_windows is not None and len(jobs) > max_windows:
        rng = Rng(seed)
        jobs = [jobs[i] for i in sorted(rng.sample(range(len(jobs)), max_windows))]
    total = 0.0
    for idx, pos in jobs:
        inp, tgt = build_targets(model.variant, clips[idx], pos, model.enc_len)
        loss, _ = forward_reconstruct(model, inp, tgt, train=False)
        total += loss
    return total / len(jobs)
