"""Finite-difference verification of every hand-derived gradient.

Each suite builds small random instances (T <= 5, D <= 6, H <= 4), compares
analytic gradients against central differences (eps = 1e-5) and reports the
maximum relative error with the denominator floored at 1e-8. Instances are
built so the loss magnitude stays small: central differences on a loss of
size L cannot resolve gradients below about ulp(L)/eps, so a small L keeps
the difference quotient trustworthy down to the 1e-8 floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gru import (GruLayerParams, gru_cell_backward, gru_cell_forward, init_stack,
                  stack_backward, stack_forward)
from .rank import Candidate, RankModel, dual_loss, dual_loss_grads, margin_residuals
from .rng import Rng
from .seqae import Variant, backward_reconstruct, forward_reconstruct, init_seqae

EPS = 1e-5
REL_FLOOR = 1e-8
TOLERANCE = 1e-4


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray,
                  floor: float = REL_FLOOR) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))


def central_diff(loss_fn, arrays: dict[str, np.ndarray],
                 eps: float = EPS) -> dict[str, np.ndarray]:
    """Numeric gradient of loss_fn() w.r.t. every entry of the given arrays.

    loss_fn must re-read the arrays on each call (they are perturbed in place
    and restored)."""
    grads = {}
    for name, arr in arrays.items():
        flat = arr.ravel()
        out = np.empty_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_fn()
            flat[i] = orig - eps
            lo = loss_fn()
            flat[i] = orig
            out[i] = (hi - lo) / (2.0 * eps)
        grads[name] = out.reshape(arr.shape)
    return grads


def _signed_uniform(rng: Rng, lo: float, hi: float, shape) -> np.ndarray:
    """Magnitudes in [lo, hi] with random signs; keeps entries away from zero."""
    mags = rng.uniform(lo, hi, shape)
    signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return mags * signs


def check_cell(seed: int) -> float:
    rng = Rng(seed)
    din = 2 + rng.integer(5)
    hidden = 2 + rng.integer(3)
    params = GruLayerParams(*(_signed_uniform(rng, 0.05, 0.3, s) for s in
                              [(hidden, din), (hidden, hidden)] * 3))
    x = _signed_uniform(rng, 0.3, 1.0, (din,))
    h_prev = _signed_uniform(rng, 0.2, 0.6, (hidden,))
    coeff = _signed_uniform(rng, 0.01, 0.05, (hidden,))

    arrays = params.named("cell")
    arrays["x"] = x
    arrays["h_prev"] = h_prev

    def loss():
        h, _ = gru_cell_forward(params, x, h_prev)
        return float(coeff @ h)

    loss()
    _, cache = gru_cell_forward(params, x, h_prev)
    dx, dh_prev, wgrads = gru_cell_backward(params, cache, coeff)
    analytic = wgrads.named("cell")
    analytic["x"] = dx
    analytic["h_prev"] = dh_prev
    numeric = central_diff(loss, arrays)
    return max(max_rel_error(analytic[k], numeric[k]) for k in arrays)


def check_stack(seed: int) -> float:
    rng = Rng(seed)
    feat = 2 + rng.integer(5)
    hidden = 2 + rng.integer(3)
    t_len = 2 + rng.integer(4)
    stack = init_stack(feat, hidden, rng, n_layers=2, dropout=0.5)
    for name, w in stack.named("s").items():
        w *= 10.0 if name.endswith("w_proj") else 4.0
    x_seq = _signed_uniform(rng, 0.3, 1.0, (t_len, feat))
    c_top = _signed_uniform(rng, 0.01, 0.04, (t_len, hidden))
    d_last = [_signed_uniform(rng, 0.01, 0.04, (hidden,)) for _ in range(2)]
    mask_seed = seed + 7919

    def loss():
        top, cache = stack_forward(stack, x_seq, train=True, rng=Rng(mask_seed))
        value = float((top * c_top).sum())
        for i in range(2):
            value += float(cache.h_seqs[i][-1] @ d_last[i])
        return value

    _, cache = stack_forward(stack, x_seq, train=True, rng=Rng(mask_seed))
    grads, _ = stack_backward(stack, cache, c_top, d_last=d_last)
    analytic = grads.named("s")
    numeric = central_diff(loss, stack.named("s"))
    return max(max_rel_error(analytic[k], numeric[k]) for k in numeric)


def check_seqae(seed: int) -> float:
    rng = Rng(seed)
    feat = 3 + rng.integer(4)
    hidden = 2 + rng.integer(3)
    enc_len = 2 + rng.integer(2)
    model = init_seqae(Variant.PRESENT, feat, hidden, enc_len, rng)
    for name, w in model.params().items():
        w *= 10.0 if ("w_proj" in name or "w_readout" in name) else 4.0
    inp = _signed_uniform(rng, 0.02, 0.06, (enc_len, feat))
    tgt = _signed_uniform(rng, 0.02, 0.06, (enc_len, feat))
    mask_seed = seed + 104729

    def loss():
        value, _ = forward_reconstruct(model, inp, tgt, train=True, rng=Rng(mask_seed))
        return value

    _, cache = forward_reconstruct(model, inp, tgt, train=True, rng=Rng(mask_seed))
    analytic = backward_reconstruct(model, cache)
    numeric = central_diff(loss, model.params())
    return max(max_rel_error(analytic[k], numeric[k]) for k in numeric)


def _rank_instance(seed: int):
    rng = Rng(seed)
    dv = 4 + rng.integer(3)
    dw = 4 + rng.integer(3)
    ds = 4 + rng.integer(3)
    ew = 3 + rng.integer(3)
    es = 3 + rng.integer(3)
    k = 3 + rng.integer(3)
    model = RankModel(
        w_vis_word=_signed_uniform(rng, 0.02, 0.15, (ew, dv)),
        w_vis_sent=_signed_uniform(rng, 0.02, 0.15, (es, dv)),
        w_word=_signed_uniform(rng, 0.02, 0.15, (ew, dw)),
        w_sent=_signed_uniform(rng, 0.02, 0.15, (es, ds)),
        lam=0.3 + 0.1 * rng.integer(5))
    v = _signed_uniform(rng, 0.2, 1.0, (dv,))
    candidates = [Candidate(text=f"c{j}",
                            word_vec=_signed_uniform(rng, 0.2, 1.0, (dw,)),
                            sent_vec=_signed_uniform(rng, 0.2, 1.0, (ds,)))
                  for j in range(k)]
    return model, v, candidates, rng.integer(k)


def check_rank(seed: int) -> float:
    # resample until every hinge is comfortably away from its kink
    attempt = seed
    for _ in range(64):
        model, v, candidates, correct = _rank_instance(attempt)
        residuals = margin_residuals(model, v, candidates, correct)
        if all(abs(r) >= 1e-3 for pair in residuals for r in pair):
            break
        attempt += 1000003
    else:
        raise RuntimeError("could not find a kink-free ranking instance")

    def loss():
        return dual_loss(model, v, candidates, correct)

    _, analytic = dual_loss_grads(model, v, candidates, correct)
    numeric = central_diff(loss, model.params())
    return max(max_rel_error(analytic[k], numeric[k]) for k in numeric)


@dataclass
class SuiteResult:
    name: str
    max_rel_err: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.max_rel_err < TOLERANCE


_SUITES = (("gru-cell", check_cell), ("gru-stack", check_stack),
           ("seq-autoencoder", check_seqae), ("dual-rank", check_rank))


def run_all(seed: int = 0, trials: int = 20) -> list[SuiteResult]:
    results = []
    for name, fn in _SUITES:
        worst = max(fn(seed * 1009 + t) for t in range(trials))
        results.append(SuiteResult(name=name, max_rel_err=worst, trials=trials))
    return results
