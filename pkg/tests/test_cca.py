import numpy as np
import pytest

from temporalvqa.cca import (CcaFusion, CcaModel, cca_answer, cca_score,
                             evaluate_fusion, fit_cca, fusion_scores,
                             select_fusion_weight)
from temporalvqa.errors import ConfigError, RankError, SampleCountError, ZeroNormError
from temporalvqa.rank import Candidate, Question
from temporalvqa.rng import Rng


def gaussian(rng, n, d):
    return rng.normal((n, d))


def test_self_correlation_is_one():
    x = gaussian(Rng(1), 300, 5)
    model = fit_cca(x, x.copy(), reg=1e-8)
    assert np.all(np.abs(model.rho - 1.0) < 1e-6)


def test_orthogonal_rotation_preserves_full_correlation():
    rng = Rng(2)
    x = gaussian(rng, 400, 6)
    q, _ = np.linalg.qr(rng.normal((6, 6)))
    model = fit_cca(x, x @ q.T, reg=1e-8)
    assert np.all(np.abs(model.rho - 1.0) < 1e-6)


def test_invertible_transform_of_one_view_changes_nothing():
    rng = Rng(3)
    x = gaussian(rng, 2000, 4)
    y = x @ rng.normal((4, 4)) + 0.5 * gaussian(rng, 2000, 4)
    base = fit_cca(x, y, reg=1e-8)
    mixed = fit_cca(x @ (np.eye(4) + 0.3 * rng.normal((4, 4))), y, reg=1e-8)
    assert np.max(np.abs(base.rho - mixed.rho)) < 1e-6


def test_independent_views_have_low_correlation():
    rng = Rng(4)
    x = gaussian(rng, 10_000, 5)
    y = gaussian(rng, 10_000, 5)
    model = fit_cca(x, y, reg=1e-8)
    assert model.rho.max() < 0.1


def test_correlations_sorted_within_unit_interval():
    rng = Rng(5)
    x = gaussian(rng, 500, 6)
    y = x @ rng.normal((6, 4)) + gaussian(rng, 500, 4)
    model = fit_cca(x, y)
    assert np.all(np.diff(model.rho) <= 1e-12)
    assert np.all(model.rho >= 0.0)
    assert np.all(model.rho <= 1.0 + 1e-8)


def test_fit_is_deterministic():
    rng = Rng(6)
    x = gaussian(rng, 200, 4)
    y = x @ rng.normal((4, 3)) + gaussian(rng, 200, 3)
    a = fit_cca(x, y)
    b = fit_cca(x.copy(), y.copy())
    assert np.array_equal(a.a, b.a)
    assert np.array_equal(a.b, b.b)
    assert np.array_equal(a.rho, b.rho)


def test_training_projections_correlate_as_reported():
    rng = Rng(7)
    x = gaussian(rng, 3000, 4)
    y = x @ rng.normal((4, 4)) + 0.3 * gaussian(rng, 3000, 4)
    model = fit_cca(x, y, reg=1e-8)
    u = (x - model.mean_x) @ model.a.T
    w = (y - model.mean_y) @ model.b.T
    for i in range(len(model.rho)):
        corr = np.corrcoef(u[:, i], w[:, i])[0, 1]
        assert abs(corr - model.rho[i]) < 1e-6


def test_sample_and_rank_errors():
    with pytest.raises(SampleCountError):
        fit_cca(np.zeros((1, 3)), np.zeros((1, 3)))
    with pytest.raises(SampleCountError):
        fit_cca(np.zeros((4, 3)), np.zeros((5, 3)))
    x = gaussian(Rng(8), 50, 3)
    with pytest.raises(RankError):
        fit_cca(x, x, k=4)


# --- scoring ----------------------------------------------------------------

def diag_model(rho, d):
    return CcaModel(a=np.eye(d), b=np.eye(d), rho=np.asarray(rho, dtype=float),
                    mean_x=np.zeros(d), mean_y=np.zeros(d), reg=0.0)


def test_identical_unit_projections_score_one():
    model = diag_model([1.0, 1.0], 2)
    assert np.isclose(cca_score(model, [1.0, 0.0], [1.0, 0.0]), 1.0, atol=1e-12)


def test_orthogonal_projections_score_zero():
    model = diag_model([1.0, 1.0], 2)
    assert np.isclose(cca_score(model, [1.0, 0.0], [0.0, 1.0]), 0.0, atol=1e-12)


def test_score_matches_scalar_reimplementation():
    rng = Rng(9)
    x_all = gaussian(rng, 200, 4)
    y_all = x_all @ rng.normal((4, 3)) + gaussian(rng, 200, 3)
    model = fit_cca(x_all, y_all)
    x = rng.normal((4,))
    y = rng.normal((3,))
    u = [sum(model.a[i][j] * (x[j] - model.mean_x[j]) for j in range(4))
         for i in range(model.a.shape[0])]
    w = [sum(model.b[i][j] * (y[j] - model.mean_y[j]) for j in range(3))
         for i in range(model.b.shape[0])]
    nu = sum(val * val for val in u) ** 0.5
    nw = sum(val * val for val in w) ** 0.5
    expected = sum(r * a * b for r, a, b in zip(model.rho, u, w)) / (nu * nw)
    assert abs(cca_score(model, x, y) - expected) < 1e-10


def test_zero_projection_rejected():
    model = diag_model([1.0, 1.0], 2)
    with pytest.raises(ZeroNormError):
        cca_score(model, [0.0, 0.0], [1.0, 0.0])


# --- fusion -------------------------------------------------------------

def unit(*values):
    v = np.array(values, dtype=float)
    return v / np.linalg.norm(v)


def make_question(cands, correct=0):
    return Question(qid="q", clip_id="clip", task="present", difficulty="easy",
                    category="noun", text="the ___", candidates=cands,
                    correct_idx=correct)


def test_word_only_fusion_matches_word_cca_decision():
    fusion = CcaFusion(diag_model([1.0, 1.0], 2), diag_model([1.0, 1.0], 2), weight=1.0)
    v = np.array([1.0, 0.0])
    cands = [Candidate("a", unit(0.2, 1.0), unit(1, 0)),
             Candidate("b", unit(1.0, 0.1), unit(0, 1))]
    q = make_question(cands)
    word_only = int(np.argmax([cca_score(fusion.cca_word, v, c.word_vec) for c in cands]))
    assert cca_answer(fusion, q, v) == word_only == 1


def test_identical_candidates_tie_to_index_zero():
    fusion = CcaFusion(diag_model([1.0], 2), diag_model([1.0], 2), weight=0.5)
    cand = Candidate("same", unit(1, 1), unit(1, 1))
    q = make_question([cand, cand, cand], correct=2)
    assert cca_answer(fusion, q, np.array([1.0, 0.0])) == 0


def test_fusion_answer_agrees_with_brute_force():
    rng = Rng(10)
    x = gaussian(rng, 300, 4)
    yw = x @ rng.normal((4, 3)) + 0.2 * gaussian(rng, 300, 3)
    ys = x @ rng.normal((4, 5)) + 0.2 * gaussian(rng, 300, 5)
    fusion = CcaFusion(fit_cca(x, yw), fit_cca(x, ys), weight=0.4)
    v = rng.normal((4,))
    cands = [Candidate(f"c{j}", rng.normal((3,)), rng.normal((5,))) for j in range(4)]
    q = make_question(cands)
    brute = [0.4 * cca_score(fusion.cca_word, v, c.word_vec)
             + 0.6 * cca_score(fusion.cca_sent, v, c.sent_vec) for c in cands]
    assert cca_answer(fusion, q, v) == int(np.argmax(brute))
    assert np.allclose(fusion_scores(fusion, v, q), brute, atol=1e-12)


def test_select_weight_prefers_smaller_on_ties():
    fusion = CcaFusion(diag_model([1.0, 1.0], 2), diag_model([1.0, 1.0], 2))
    # both channels agree, so every weight scores 1.0 and ties break low
    cands = [Candidate("a", unit(1, 0), unit(1, 0)), Candidate("b", unit(0, 1), unit(0, 1))]
    qs = [make_question(cands)]
    w = select_fusion_weight(fusion, qs, lambda cid: np.array([1.0, 0.0]))
    assert w == 0.0
    with pytest.raises(ConfigError):
        select_fusion_weight(fusion, qs, lambda cid: np.array([1.0, 0.0]), grid=[])
    with pytest.raises(ConfigError):
        evaluate_fusion(fusion, [], lambda cid: np.array([1.0, 0.0]))
