"""Glue between stored datasets and the scoring models.

Serialized questions carry candidate texts only; this module attaches the
word/sentence vectors from the embedding tables, builds the clip -> visual
vector map (mean-pooled frames or an encoder representation), and turns
per-question hits into grouped metric rows.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .dataio import FeatureSequence, MetricRow, QuestionRecord, SplitSpec
from .errors import SchemaError
from .qagen import fill_blank, phrase_embed
from .rank import Candidate, Question
from .seqae import SeqAeModel, mean_pool, represent


def attach_embeddings(record: QuestionRecord, word_table: dict[str, np.ndarray],
                      sent_table: dict[str, np.ndarray]) -> Question:
    """Resolve candidate texts into scored Candidates."""
    candidates = []
    for text in record.candidates:
        word_vec = phrase_embed(text, word_table)
        sentence = fill_blank(record.question_text, text)
        if sentence not in sent_table:
            raise SchemaError(f"no sentence embedding for {sentence!r}")
        candidates.append(Candidate(text=text, word_vec=word_vec,
                                    sent_vec=sent_table[sentence]))
    return Question(qid=record.qid, clip_id=record.clip_id, task=record.task,
                    difficulty=record.difficulty, category=record.category,
                    text=record.question_text, candidates=candidates,
                    correct_idx=record.correct_idx)


def attach_all(records: list[QuestionRecord], word_table, sent_table) -> list[Question]:
    return [attach_embeddings(r, word_table, sent_table) for r in records]


def build_visuals(features: dict[str, FeatureSequence], source: str = "mean",
                  model: SeqAeModel | None = None) -> dict[str, np.ndarray]:
    """clip_id -> visual vector; source is 'mean' or 'gru' (encoder average)."""
    if source == "mean":
        return {cid: mean_pool(seq.data) for cid, seq in features.items()}
    if source == "gru":
        if model is None:
            raise SchemaError("visual source 'gru' needs a trained encoder model")
        return {cid: represent(model, seq.data) for cid, seq in features.items()}
    raise SchemaError(f"unknown visual source {source!r}")


def split_questions(questions: list[Question], splits: SplitSpec,
                    split: str) -> list[Question]:
    wanted = set(splits.ids(split))
    return [q for q in questions if q.clip_id in wanted]


def grouped_accuracy(questions: list[Question], predict, method: str,
                     split: str) -> list[MetricRow]:
    """Metric rows per (task, difficulty) group; predict maps Question -> index."""
    hits: dict[tuple[str, str], list[bool]] = defaultdict(list)
    for q in questions:
        hits[(q.task, q.difficulty)].append(predict(q) == q.correct_idx)
    rows = []
    for (task, difficulty) in sorted(hits):
        outcomes = hits[(task, difficulty)]
        rows.append(MetricRow(task=task, difficulty=difficulty, method=method,
                              split=split, accuracy=sum(outcomes) / len(outcomes),
                              n=len(outcomes)))
    return rows
