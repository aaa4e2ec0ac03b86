"""Dual-channel learning-to-rank for multiple-choice fill-in-the-blank answers.

Four linear maps embed a clip vector and each candidate's word/sentence
vectors into two shared spaces. Training is a hinge ranking loss mixed
across the channels by lam (lam=1 word channel only, lam=0 sentence
only); the answer is the candidate with the highest mixed dot-product
score. Raw input vectors are always l2-normalized before embedding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, IntegrityError
from .mathops import l2_normalize, uniform_init
from .optim import SgdMomentum
from .rng import Rng

MAP_INIT_RANGE = 0.01
DEFAULT_WORD_SPACE = 300
DEFAULT_SENT_SPACE = 500


@dataclass
class Candidate:
    """One answer option: display text plus its two embedding vectors."""

    text: str
    word_vec: np.ndarray
    sent_vec: np.ndarray


@dataclass
class Question:
    """A fill-in-the-blank item ready for scoring."""

    qid: str
    clip_id: str
    task: str
    difficulty: str
    category: str
    text: str
    candidates: list[Candidate]
    correct_idx: int

    def __post_init__(self):
        k = len(self.candidates)
        if k < 2:
            raise IntegrityError(f"question {self.qid} has {k} candidates, need at least 2")
        if not 0 <= self.correct_idx < k:
            raise IntegrityError(f"correct_idx {self.correct_idx} out of range for K={k}")


@dataclass
class RankModel:
    """The four embedding maps plus margins and channel weight."""

    w_vis_word: np.ndarray    # (word_space, visual_dim)
    w_vis_sent: np.ndarray    # (sent_space, visual_dim)
    w_word: np.ndarray        # (word_space, word_dim)
    w_sent: np.ndarray        # (sent_space, sent_dim)
    alpha: float = 0.2
    beta: float = 0.2
    lam: float = 0.5

    def __post_init__(self):
        if self.w_vis_word.shape[0] != self.w_word.shape[0]:
            raise DimensionError("visual->word and word maps must share the word space dim")
        if self.w_vis_sent.shape[0] != self.w_sent.shape[0]:
            raise DimensionError("visual->sent and sent maps must share the sentence space dim")
        if self.w_vis_word.shape[1] != self.w_vis_sent.shape[1]:
            raise DimensionError("both visual maps must consume the same visual dim")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0, 1], got {self.lam}")

    def params(self) -> dict[str, np.ndarray]:
        return {"w_vis_word": self.w_vis_word, "w_vis_sent": self.w_vis_sent,
                "w_word": self.w_word, "w_sent": self.w_sent}

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params().items()}


def init_rank_model(visual_dim: int, word_dim: int, sent_dim: int, rng: Rng,
                    word_space: int = DEFAULT_WORD_SPACE,
                    sent_space: int = DEFAULT_SENT_SPACE,
                    alpha: float = 0.2, beta: float = 0.2,
                    lam: float = 0.5) -> RankModel:
    return RankModel(
        w_vis_word=uniform_init(word_space, visual_dim, -MAP_INIT_RANGE, MAP_INIT_RANGE, rng),
        w_vis_sent=uniform_init(sent_space, visual_dim, -MAP_INIT_RANGE, MAP_INIT_RANGE, rng),
        w_word=uniform_init(word_space, word_dim, -MAP_INIT_RANGE, MAP_INIT_RANGE, rng),
        w_sent=uniform_init(sent_space, sent_dim, -MAP_INIT_RANGE, MAP_INIT_RANGE, rng),
        alpha=alpha, beta=beta, lam=lam)


def embed_channels(model: RankModel, v: np.ndarray, cand: Candidate):
    """Normalize the raw vectors, then map: returns (v_word, v_sent, p, s)."""
    v_unit = l2_normalize(v)
    y_unit = l2_normalize(cand.word_vec)
    z_unit = l2_normalize(cand.sent_vec)
    return (model.w_vis_word @ v_unit, model.w_vis_sent @ v_unit,
            model.w_word @ y_unit, model.w_sent @ z_unit)


def _channel_dots(model: RankModel, v: np.ndarray, candidates: list[Candidate]):
    """Word and sentence dot products of every candidate against the clip."""
    v_unit = l2_normalize(v)
    v_word = model.w_vis_word @ v_unit
    v_sent = model.w_vis_sent @ v_unit
    word = np.array([v_word @ (model.w_word @ l2_normalize(c.word_vec)) for c in candidates])
    sent = np.array([v_sent @ (model.w_sent @ l2_normalize(c.sent_vec)) for c in candidates])
    return word, sent


def dual_loss(model: RankModel, v: np.ndarray, candidates: list[Candidate],
              correct_idx: int) -> float:
    """Full hinge sum over all negatives, both channels mixed by lam."""
    if not 0 <= correct_idx < len(candidates):
        raise IndexError(f"correct_idx {correct_idx} out of range")
    word, sent = _channel_dots(model, v, candidates)
    loss = 0.0
    for j in range(len(candidates)):
        if j == correct_idx:
            continue
        loss += model.lam * max(0.0, model.alpha - word[correct_idx] + word[j])
        loss += (1.0 - model.lam) * max(0.0, model.beta - sent[correct_idx] + sent[j])
    return float(loss)


def _hinge_grads(model: RankModel, v_unit, cand_pos: Candidate, cand_neg: Candidate,
                 grads: dict[str, np.ndarray], word_weight: float, sent_weight: float):
    """Accumulate gradients of the two hinge terms for one (positive, negative) pair.

    word_weight / sent_weight carry both the channel mix and the active/inactive
    state of each hinge (zero drops the term).
    """
    if word_weight != 0.0:
        y_pos = l2_normalize(cand_pos.word_vec)
        y_neg = l2_normalize(cand_neg.word_vec)
        v_word = model.w_vis_word @ v_unit
        grads["w_vis_word"] += word_weight * np.outer(
            model.w_word @ (y_neg - y_pos), v_unit)
        grads["w_word"] += word_weight * np.outer(v_word, y_neg - y_pos)
    if sent_weight != 0.0:
        z_pos = l2_normalize(cand_pos.sent_vec)
        z_neg = l2_normalize(cand_neg.sent_vec)
        v_sent = model.w_vis_sent @ v_unit
        grads["w_vis_sent"] += sent_weight * np.outer(
            model.w_sent @ (z_neg - z_pos), v_unit)
        grads["w_sent"] += sent_weight * np.outer(v_sent, z_neg - z_pos)


def dual_loss_grads(model: RankModel, v, candidates, correct_idx):
    """(loss, grads) for the full-sum loss; used by the gradient checker."""
    if not 0 <= correct_idx < len(candidates):
        raise IndexError(f"correct_idx {correct_idx} out of range")
    word, sent = _channel_dots(model, v, candidates)
    v_unit = l2_normalize(v)
    grads = model.zero_grads()
    loss = 0.0
    pos = candidates[correct_idx]
    for j, neg in enumerate(candidates):
        if j == correct_idx:
            continue
        word_resid = model.alpha - word[correct_idx] + word[j]
        sent_resid = model.beta - sent[correct_idx] + sent[j]
        loss += model.lam * max(0.0, word_resid) + (1.0 - model.lam) * max(0.0, sent_resid)
        _hinge_grads(model, v_unit, pos, neg, grads,
                     model.lam if word_resid > 0 else 0.0,
                     (1.0 - model.lam) if sent_resid > 0 else 0.0)
    return float(loss), grads


def margin_residuals(model: RankModel, v, candidates, correct_idx):
    """Hinge arguments per negative and channel; >0 means the margin is violated."""
    word, sent = _channel_dots(model, v, candidates)
    out = []
    for j in range(len(candidates)):
        if j == correct_idx:
            continue
        out.append((model.alpha - word[correct_idx] + word[j],
                    model.beta - sent[correct_idx] + sent[j]))
    return out


def train_step(model: RankModel, v, candidates, correct_idx, opt: SgdMomentum,
               rng: Rng) -> tuple[int | None, int | None]:
    """One SGD step: per channel, only the first margin-violating negative
    (in a fresh seeded scan order per channel) contributes a gradient.

    Returns the chosen negative index per channel (None if no violation).
    The optimizer always runs, so momentum keeps decaying on quiet steps.
    """
    if not 0 <= correct_idx < len(candidates):
        raise IndexError(f"correct_idx {correct_idx} out of range")
    word, sent = _channel_dots(model, v, candidates)
    v_unit = l2_normalize(v)
    negatives = [j for j in range(len(candidates)) if j != correct_idx]

    word_order = list(negatives)
    rng.shuffle(word_order)
    sent_order = list(negatives)
    rng.shuffle(sent_order)
    word_pick = next((j for j in word_order
                      if model.alpha - word[correct_idx] + word[j] > 0), None)
    sent_pick = next((j for j in sent_order
                      if model.beta - sent[correct_idx] + sent[j] > 0), None)

    grads = model.zero_grads()
    pos = candidates[correct_idx]
    if word_pick is not None:
        _hinge_grads(model, v_unit, pos, candidates[word_pick], grads, model.lam, 0.0)
    if sent_pick is not None:
        _hinge_grads(model, v_unit, pos, candidates[sent_pick], grads, 0.0, 1.0 - model.lam)
    opt.step(model.params(), grads)
    return word_pick, sent_pick


def score(model: RankModel, v, cand: Candidate, lam: float | None = None) -> float:
    """lam * word-channel dot + (1 - lam) * sentence-channel dot."""
    lam = model.lam if lam is None else lam
    v_word, v_sent, p, s = embed_channels(model, v, cand)
    return float(lam * (v_word @ p) + (1.0 - lam) * (v_sent @ s))


def answer(model: RankModel, v, question: Question, lam: float | None = None) -> int:
    """Index of the highest-scoring candidate; ties go to the lowest index."""
    lam = model.lam if lam is None else lam
    word, sent = _channel_dots(model, v, question.candidates)
    scores = lam * word + (1.0 - lam) * sent
    return int(np.argmax(scores))


def evaluate(model: RankModel, questions: list[Question], visual_fn,
             lam: float | None = None) -> float:
    """Fraction of questions answered correctly; visual_fn maps clip_id -> vector."""
    if not questions:
        raise ConfigError("cannot evaluate on an empty question list")
    hits = sum(answer(model, visual_fn(q.clip_id), q, lam=lam) == q.correct_idx
               for q in questions)
    return hits / len(questions)


def select_lambda(model: RankModel, questions: list[Question], visual_fn,
                  grid: list[float] | None = None) -> float:
    """Grid value maximizing validation accuracy; ties break to the smaller lam."""
    if grid is None:
        grid = [round(0.1 * i, 1) for i in range(11)]
    if not grid:
        raise ConfigError("lambda grid is empty")
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise ConfigError("lambda grid values must lie in [0, 1]")
    best_lam, best_acc = None, -1.0
    for lam in sorted(grid):
        acc = evaluate(model, questions, visual_fn, lam=lam)
        if acc > best_acc:
            best_lam, best_acc = lam, acc
    return best_lam


@dataclass
class RankTrainConfig:
    epochs: int
    lr: float = 0.01
    momentum: float = 0.9
    seed: int = 0


def train_rank(model: RankModel, questions: list[Question], visual_fn,
               config: RankTrainConfig) -> list[float]:
    """SGD-momentum over shuffled question passes; returns per-epoch mean loss."""
    if not questions:
        raise ConfigError("cannot train on an empty question list")
    rng = Rng(config.seed)
    opt = SgdMomentum(lr=config.lr, momentum=config.momentum)
    curve = []
    for _ in range(config.epochs):
        order = list(range(len(questions)))
        rng.shuffle(order)
        losses = []
        for qi in order:
            q = questions[qi]
            v = visual_fn(q.clip_id)
            losses.append(dual_loss(model, v, q.candidates, q.correct_idx))
            train_step(model, v, q.candidates, q.correct_idx, opt, rng)
        curve.append(float(np.mean(losses)))
    return curve
