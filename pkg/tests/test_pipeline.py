import numpy as np
import pytest

from temporalvqa.dataio import FeatureSequence, QuestionRecord, SplitSpec, SynthSpec, synth_dataset
from temporalvqa.errors import SchemaError
from temporalvqa.pipeline import (attach_all, attach_embeddings, build_visuals,
                                  grouped_accuracy, split_questions)
from temporalvqa.rng import Rng
from temporalvqa.seqae import Variant, init_seqae


def test_attach_resolves_both_channels():
    record = QuestionRecord(qid="q", clip_id="c", task="present", difficulty="easy",
                            category="noun", question_text="a ___ rolls",
                            candidates=["ball", "cube"], correct_idx=0)
    words = {"ball": np.array([1.0, 0.0]), "cube": np.array([0.0, 1.0])}
    sents = {"a ball rolls": np.array([1.0, 1.0]), "a cube rolls": np.array([1.0, -1.0])}
    q = attach_embeddings(record, words, sents)
    assert q.candidates[0].text == "ball"
    assert np.array_equal(q.candidates[0].word_vec, words["ball"])
    assert np.array_equal(q.candidates[1].sent_vec, sents["a cube rolls"])


def test_attach_missing_sentence_embedding_rejected():
    record = QuestionRecord(qid="q", clip_id="c", task="present", difficulty="easy",
                            category="noun", question_text="a ___ rolls",
                            candidates=["ball", "cube"], correct_idx=0)
    words = {"ball": np.array([1.0, 0.0]), "cube": np.array([0.0, 1.0])}
    with pytest.raises(SchemaError):
        attach_embeddings(record, words, {"a ball rolls": np.ones(2)})


def test_visual_sources():
    features = {"c": FeatureSequence("c", np.array([[1.0, 3.0], [3.0, 5.0]]))}
    means = build_visuals(features, "mean")
    assert np.array_equal(means["c"], [2.0, 4.0])
    model = init_seqae(Variant.PRESENT, 2, 3, 2, Rng(1))
    reps = build_visuals(features, "gru", model=model)
    assert reps["c"].shape == (3,)
    with pytest.raises(SchemaError):
        build_visuals(features, "gru")
    with pytest.raises(SchemaError):
        build_visuals(features, "median")


def test_split_filter_and_grouping():
    spec = SynthSpec(n_clips=20, t_frames=4, dim=16,
                     dynamics="complementary-channels", seed=1, k=4)
    data = synth_dataset(spec)
    questions = attach_all(data.questions, data.word_table, data.sent_table)
    train = split_questions(questions, data.splits, "train")
    test = split_questions(questions, data.splits, "test")
    assert len(train) + len(test) < len(questions)  # validation exists too
    rows = grouped_accuracy(test, lambda q: q.correct_idx, method="oracle", split="test")
    assert len(rows) == 1
    assert rows[0].accuracy == 1.0
    assert rows[0].n == len(test)
    rows0 = grouped_accuracy(test, lambda q: 0, method="first", split="test")
    assert rows0[0].accuracy <= 0.5
