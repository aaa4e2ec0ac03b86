"""Candidate-answer generation from pre-parsed annotation records.

Easy distractors are uniform draws from same-category vocabulary entries
(stopwords and rare tokens excluded); hard distractors are the cosine-nearest
pool phrases after dropping near-duplicates of the answer. Generation is a
pure function of (records, vocab/pool, thresholds, seed).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .dataio import QuestionRecord
from .errors import (IntegrityError, PoolExhaustedError, SchemaError,
                     UnknownPhraseError, ZeroNormError)
from .rng import Rng

BLANK = "___"
MIN_FREQUENCY = 10
DEFAULT_TAU_HIGH = 0.85
HARD_K = 10
EASY_DISTRACTORS = 3

_ARTICLE_BLANK = re.compile(r"\b([Aa])/[Aa]n\s+" + re.escape(BLANK))
_VOWELS = set("aeiou")


@dataclass
class AnnotationRecord:
    """One pre-parsed description with a blanked-out answer span."""

    clip_id: str
    text: str
    blank_start: int
    blank_end: int
    answer: str
    category: str

    def __post_init__(self):
        if not (0 <= self.blank_start < self.blank_end <= len(self.text)):
            raise SchemaError(
                f"blank span [{self.blank_start}, {self.blank_end}) invalid for text "
                f"of length {len(self.text)}")
        if not self.answer:
            raise SchemaError("record answer must be non-empty")

    def template(self) -> str:
        """The description with the answer span replaced by the blank marker."""
        return self.text[:self.blank_start] + BLANK + self.text[self.blank_end:]


@dataclass
class Vocab:
    """token -> (category, frequency) plus the stopword list."""

    entries: dict[str, tuple[str, int]]
    stopwords: set[str] = field(default_factory=set)

    def __post_init__(self):
        for token, (_, freq) in self.entries.items():
            if freq < 1:
                raise SchemaError(f"vocab frequency must be >= 1, got {freq} for {token!r}")

    def eligible(self, category: str, min_freq: int = MIN_FREQUENCY) -> list[str]:
        """Sorted tokens of the category that pass the stopword/frequency filters."""
        return sorted(t for t, (cat, freq) in self.entries.items()
                      if cat == category and freq >= min_freq and t not in self.stopwords)


def phrase_embed(phrase: str, table: dict[str, np.ndarray]) -> np.ndarray:
    """Mean of the in-table token vectors; unknown tokens are skipped."""
    vecs = [table[tok] for tok in phrase.split() if tok in table]
    if not vecs:
        raise UnknownPhraseError(f"no token of {phrase!r} found in the embedding table")
    return np.mean(np.asarray(vecs, dtype=np.float64), axis=0)


@dataclass
class PhrasePool:
    """Distractor phrases with precomputed mean word vectors."""

    phrases: list[str]
    vectors: np.ndarray      # (n, d)

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.phrases):
            raise SchemaError("pool phrases and vectors disagree in length")


def build_pool(phrases: list[str], table: dict[str, np.ndarray]) -> PhrasePool:
    """Embed each phrase; phrases with no known tokens or a zero vector are dropped."""
    kept, vecs = [], []
    for phrase in phrases:
        try:
            vec = phrase_embed(phrase, table)
        except UnknownPhraseError:
            continue
        if np.linalg.norm(vec) <= 1e-12 or not np.all(np.isfinite(vec)):
            continue
        kept.append(phrase)
        vecs.append(vec)
    if not kept:
        raise PoolExhaustedError("no phrase in the pool could be embedded")
    return PhrasePool(phrases=kept, vectors=np.asarray(vecs))


def gen_easy(record: AnnotationRecord, vocab: Vocab, rng: Rng,
             n_distractors: int = EASY_DISTRACTORS,
             min_freq: int = MIN_FREQUENCY) -> list[str]:
    """n distinct same-category tokens, never the answer, drawn uniformly."""
    pool = [t for t in vocab.eligible(record.category, min_freq=min_freq)
            if t != record.answer]
    if len(pool) < n_distractors:
        raise PoolExhaustedError(
            f"category {record.category!r} has {len(pool)} eligible distractors, "
            f"need {n_distractors}")
    return rng.sample(pool, n_distractors)


def gen_hard(record: AnnotationRecord, pool: PhrasePool, table: dict[str, np.ndarray],
             rng: Rng, tau_high: float = DEFAULT_TAU_HIGH, k: int = HARD_K) -> list[str]:
    """k candidates (answer included), the distractors being the nearest pool
    phrases by cosine similarity after dropping near-duplicates (> tau_high).

    The returned list is shuffled with the run seed.
    """
    answer_vec = phrase_embed(record.answer, table)
    norm = np.linalg.norm(answer_vec)
    if norm <= 1e-12:
        raise ZeroNormError(f"answer {record.answer!r} embeds to a zero vector")
    pool_norms = np.linalg.norm(pool.vectors, axis=1)
    sims = (pool.vectors @ answer_vec) / (pool_norms * norm)
    order = np.argsort(-sims, kind="stable")
    distractors = []
    taken = {record.answer}
    for idx in order:
        if len(distractors) == k - 1:
            break
        phrase = pool.phrases[idx]
        if phrase in taken or sims[idx] > tau_high:
            continue
        distractors.append(phrase)
        taken.add(phrase)
    if len(distractors) < k - 1:
        raise PoolExhaustedError(
            f"only {len(distractors)} pool phrases survive the filters, need {k - 1}")
    candidates = distractors + [record.answer]
    rng.shuffle(candidates)
    return candidates


def fill_blank(template: str, candidate: str) -> str:
    """Fill the blank; an 'A/An ___' template resolves its article by vowel."""
    match = _ARTICLE_BLANK.search(template)
    if match:
        article = match.group(1) + ("n" if candidate[:1].lower() in _VOWELS else "")
        return template[:match.start()] + article + " " + candidate + template[match.end():]
    return template.replace(BLANK, candidate, 1)


def build_question(record: AnnotationRecord, candidates: list[str], qid: str,
                   difficulty: str = "easy", task: str = "present") -> QuestionRecord:
    """Assemble the serializable question; the answer must appear exactly once."""
    hits = [i for i, c in enumerate(candidates) if c == record.answer]
    if len(hits) != 1:
        raise IntegrityError(
            f"answer {record.answer!r} appears {len(hits)} times in the candidate list")
    return QuestionRecord(
        qid=qid, clip_id=record.clip_id, task=task, difficulty=difficulty,
        category=record.category, question_text=record.template(),
        candidates=list(candidates), correct_idx=hits[0])


def generate_questions(records: list[AnnotationRecord], mode: str, seed: int,
                       vocab: Vocab | None = None, pool: PhrasePool | None = None,
                       table: dict[str, np.ndarray] | None = None,
                       tau_high: float = DEFAULT_TAU_HIGH,
                       k: int = HARD_K) -> list[QuestionRecord]:
    """Run the full easy or hard pipeline over the records."""
    if mode not in ("easy", "hard"):
        raise IntegrityError(f"mode must be easy or hard, got {mode!r}")
    rng = Rng(seed)
    out = []
    for i, record in enumerate(records):
        if mode == "easy":
            candidates = gen_easy(record, vocab, rng) + [record.answer]
            rng.shuffle(candidates)
        else:
            candidates = gen_hard(record, pool, table, rng, tau_high=tau_high, k=k)
        out.append(build_question(record, candidates, qid=f"q{i:06d}", difficulty=mode))
    return out
