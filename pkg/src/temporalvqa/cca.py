"""Regularized linear CCA and the two-embedding late-fusion answerer.

Fitting whitens each view with (Cov + r*I)^(-1/2) and takes the SVD of the
whitened cross-covariance; the singular values are the canonical
correlations. Candidate scoring is a correlation-weighted cosine in
canonical space, and the fusion model mixes a visual<->word and a
visual<->sentence CCA with a weight chosen on validation data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RankError, SampleCountError, ZeroNormError
from .rank import Question

_EIG_FLOOR = 1e-12


@dataclass
class CcaModel:
    """Paired projections (rows are canonical directions) and their correlations."""

    a: np.ndarray            # (k, dx)
    b: np.ndarray            # (k, dy)
    rho: np.ndarray          # (k,), non-increasing in [0, 1 + eps]
    mean_x: np.ndarray
    mean_y: np.ndarray
    reg: float

    def project_x(self, x: np.ndarray) -> np.ndarray:
        return self.a @ (np.asarray(x, dtype=np.float64) - self.mean_x)

    def project_y(self, y: np.ndarray) -> np.ndarray:
        return self.b @ (np.asarray(y, dtype=np.float64) - self.mean_y)


def _inv_sqrt(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, _EIG_FLOOR)
    return (vecs / np.sqrt(vals)) @ vecs.T


def default_reg(cov: np.ndarray) -> float:
    """Shrinkage scaled to the data: 1e-4 * trace(Cov) / D."""
    d = cov.shape[0]
    return 1e-4 * float(np.trace(cov)) / d


def fit_cca(x: np.ndarray, y: np.ndarray, reg: float | None = None,
            k: int | None = None) -> CcaModel:
    """Fit on paired rows of x (n, dx) and y (n, dy).

    reg=None picks default_reg per view. The SVD sign is fixed by making the
    first nonzero component of each canonical x-direction positive, so fits
    are deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise SampleCountError("x and y must be 2-D with the same number of rows")
    n, dx = x.shape
    dy = y.shape[1]
    if n < 2:
        raise SampleCountError(f"need at least 2 samples, got {n}")
    k_max = min(dx, dy)
    if k is None:
        k = k_max
    if k < 1 or k > k_max:
        raise RankError(f"k={k} outside [1, {k_max}]")

    mean_x = x.mean(axis=0)
    mean_y = y.mean(axis=0)
    xc = x - mean_x
    yc = y - mean_y
    cxx = xc.T @ xc / (n - 1)
    cyy = yc.T @ yc / (n - 1)
    cxy = xc.T @ yc / (n - 1)
    rx = default_reg(cxx) if reg is None else float(reg)
    ry = default_reg(cyy) if reg is None else float(reg)
    wx = _inv_sqrt(cxx + rx * np.eye(dx))
    wy = _inv_sqrt(cyy + ry * np.eye(dy))
    u, s, vt = np.linalg.svd(wx @ cxy @ wy)

    a = u[:, :k].T @ wx
    b = vt[:k] @ wy
    for i in range(k):
        col = u[:, i]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0:
            a[i] = -a[i]
            b[i] = -b[i]
    return CcaModel(a=a, b=b, rho=s[:k].copy(), mean_x=mean_x, mean_y=mean_y,
                    reg=rx)


def cca_score(model: CcaModel, x: np.ndarray, y: np.ndarray) -> float:
    """Correlation-weighted cosine of the two canonical projections."""
    u = model.project_x(x)
    w = model.project_y(y)
    nu = float(np.linalg.norm(u))
    nw = float(np.linalg.norm(w))
    if nu <= 1e-12 or nw <= 1e-12:
        raise ZeroNormError("canonical projection has (near-)zero norm")
    return float(np.sum(model.rho * u * w) / (nu * nw))


@dataclass
class CcaFusion:
    """Late fusion of the word-view and sentence-view CCA models."""

    cca_word: CcaModel
    cca_sent: CcaModel
    weight: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigError(f"fusion weight must lie in [0, 1], got {self.weight}")


def fusion_scores(fusion: CcaFusion, v, question: Question,
                  weight: float | None = None) -> np.ndarray:
    w = fusion.weight if weight is None else weight
    return np.array([
        w * cca_score(fusion.cca_word, v, cand.word_vec)
        + (1.0 - w) * cca_score(fusion.cca_sent, v, cand.sent_vec)
        for cand in question.candidates])


def cca_answer(fusion: CcaFusion, question: Question, v,
               weight: float | None = None) -> int:
    """Highest fused score wins; ties go to the lowest index."""
    return int(np.argmax(fusion_scores(fusion, v, question, weight=weight)))


def evaluate_fusion(fusion: CcaFusion, questions: list[Question], visual_fn,
                    weight: float | None = None) -> float:
    if not questions:
        raise ConfigError("cannot evaluate on an empty question list")
    hits = sum(cca_answer(fusion, q, visual_fn(q.clip_id), weight=weight) == q.correct_idx
               for q in questions)
    return hits / len(questions)


def select_fusion_weight(fusion: CcaFusion, questions: list[Question], visual_fn,
                         grid: list[float] | None = None) -> float:
    """Grid value maximizing validation accuracy; ties break to the smaller weight."""
    if grid is None:
        grid = [round(0.1 * i, 1) for i in range(11)]
    if not grid:
        raise ConfigError("fusion weight grid is empty")
    best_w, best_acc = None, -1.0
    for w in sorted(grid):
        acc = evaluate_fusion(fusion, questions, visual_fn, weight=w)
        if acc > best_acc:
            best_w, best_acc = w, acc
    return best_w
