"""File formats, dataset splits, synthetic data generation, and metrics output.

Binary containers (all little-endian):

  FEAT1  magic "VQAF", version u32=1, D u32, T u32, then T*D float32
         row-major. Storage is 32-bit; everything computes in 64-bit.
  MODEL1 magic "VQAM", version u32=1, tensor count u32, then per tensor:
         name length u32, name bytes (utf-8), rows u32, cols u32,
         row-major float64.

Text formats: QAJSONL (one question object per line), EMB-TSV
(token TAB float*D), splits JSON, metrics CSV.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError, IntegrityError, SchemaError
from .rng import Rng

FEAT_MAGIC = b"VQAF"
MODEL_MAGIC = b"VQAM"
FORMAT_VERSION = 1

DYNAMICS = ("sinusoid", "markov-noninvertible", "complementary-channels")


# ---------------------------------------------------------------------------
# FEAT1

@dataclass
class FeatureSequence:
    """Per-frame feature vectors of one clip, (T, D) float64, T >= 1."""

    clip_id: str
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise FormatError(f"feature data must be (T>=1, D>=1), got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise FormatError(f"clip {self.clip_id} has non-finite features")


def write_feat(path, seq: FeatureSequence) -> None:
    t, d = seq.data.shape
    payload = seq.data.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(FEAT_MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, d, t))
        fh.write(payload)


def read_feat(path) -> FeatureSequence:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16:
        raise FormatError(f"{path.name}: truncated header")
    if blob[:4] != FEAT_MAGIC:
        raise FormatError(f"{path.name}: bad magic {blob[:4]!r}")
    version, d, t = struct.unpack("<III", blob[4:16])
    if version != FORMAT_VERSION:
        raise FormatError(f"{path.name}: unsupported version {version}")
    if d == 0 or t == 0:
        raise FormatError(f"{path.name}: zero dimension (T={t}, D={d})")
    expected = 16 + 4 * t * d
    if len(blob) != expected:
        raise FormatError(f"{path.name}: expected {expected} bytes, found {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4", offset=16).astype(np.float64).reshape(t, d)
    return FeatureSequence(clip_id=path.stem, data=data)


def load_features_dir(dirpath) -> dict[str, FeatureSequence]:
    out = {}
    for path in sorted(Path(dirpath).glob("*.feat")):
        seq = read_feat(path)
        out[seq.clip_id] = seq
    return out


# ---------------------------------------------------------------------------
# MODEL1

def write_model(path, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(tensors)))
        for name, tensor in tensors.items():
            tensor = np.atleast_2d(np.asarray(tensor, dtype=np.float64))
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<II", tensor.shape[0], tensor.shape[1]))
            fh.write(tensor.astype("<f8").tobytes(order="C"))


def read_model(path) -> dict[str, np.ndarray]:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 12:
        raise FormatError(f"{path.name}: truncated header")
    if blob[:4] != MODEL_MAGIC:
        raise FormatError(f"{path.name}: bad magic {blob[:4]!r}")
    version, count = struct.unpack("<II", blob[4:12])
    if version != FORMAT_VERSION:
        raise FormatError(f"{path.name}: unsupported version {version}")
    offset = 12
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 4 > len(blob):
            raise FormatError(f"{path.name}: truncated tensor header")
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if offset + name_len + 8 > len(blob):
            raise FormatError(f"{path.name}: truncated tensor record")
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        rows, cols = struct.unpack_from("<II", blob, offset)
        offset += 8
        if rows == 0 or cols == 0:
            raise FormatError(f"{path.name}: zero-sized tensor {name!r}")
        nbytes = 8 * rows * cols
        if offset + nbytes > len(blob):
            raise FormatError(f"{path.name}: truncated payload for {name!r}")
        tensors[name] = np.frombuffer(blob, dtype="<f8", count=rows * cols,
                                      offset=offset).reshape(rows, cols).copy()
        offset += nbytes
    if offset != len(blob):
        raise FormatError(f"{path.name}: {len(blob) - offset} trailing bytes")
    return tensors


# ---------------------------------------------------------------------------
# QAJSONL

@dataclass
class QuestionRecord:
    """Serialized question: candidate texts only, embeddings attached later."""

    qid: str
    clip_id: str
    task: str
    difficulty: str
    category: str
    question_text: str
    candidates: list[str]
    correct_idx: int

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise SchemaError(f"question {self.qid} needs at least 2 candidates")
        if not 0 <= self.correct_idx < len(self.candidates):
            raise SchemaError(f"question {self.qid}: correct_idx {self.correct_idx} "
                              f"out of range for K={len(self.candidates)}")


_QUESTION_FIELDS = ("id", "clip_id", "task", "difficulty", "category",
                    "question_text", "candidates", "correct_idx")


def question_to_json(record: QuestionRecord) -> str:
    return json.dumps({
        "id": record.qid,
        "clip_id": record.clip_id,
        "task": record.task,
        "difficulty": record.difficulty,
        "category": record.category,
        "question_text": record.question_text,
        "candidates": [{"text": c} for c in record.candidates],
        "correct_idx": record.correct_idx,
    })


def question_from_json(line: str) -> QuestionRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    missing = [f for f in _QUESTION_FIELDS if f not in obj]
    if missing:
        raise SchemaError(f"question object missing fields: {', '.join(missing)}")
    candidates = obj["candidates"]
    if (not isinstance(candidates, list)
            or any(not isinstance(c, dict) or "text" not in c for c in candidates)):
        raise SchemaError("candidates must be a list of objects with a text field")
    return QuestionRecord(
        qid=str(obj["id"]), clip_id=str(obj["clip_id"]), task=str(obj["task"]),
        difficulty=str(obj["difficulty"]), category=str(obj["category"]),
        question_text=str(obj["question_text"]),
        candidates=[str(c["text"]) for c in candidates],
        correct_idx=int(obj["correct_idx"]))


def write_questions(path, records: list[QuestionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(question_to_json(record))
            fh.write("\n")


def load_questions(path) -> list[QuestionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(question_from_json(line))
    return out


# ---------------------------------------------------------------------------
# EMB-TSV

def write_embeddings(path, table: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token, vec in table.items():
            if "\t" in token or "\n" in token:
                raise SchemaError(f"token {token!r} contains a tab or newline")
            vec = np.asarray(vec, dtype=np.float64)
            fh.write(token)
            for value in vec:
                fh.write("\t")
                fh.write(repr(float(value)))
            fh.write("\n")


def load_embeddings(path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise SchemaError(f"line {lineno}: no embedding values")
            token = parts[0]
            try:
                vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: non-numeric value") from exc
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise SchemaError(f"line {lineno}: ragged row ({vec.size} values, "
                                  f"expected {dim})")
            table[token] = vec
    return table


# ---------------------------------------------------------------------------
# Splits

@dataclass
class SplitSpec:
    train: list[str]
    validation: list[str]
    test: list[str]

    def __post_init__(self):
        seen: set[str] = set()
        for name in ("train", "validation", "test"):
            ids = getattr(self, name)
            overlap = seen.intersection(ids)
            if overlap:
                raise IntegrityError(f"split overlap on {sorted(overlap)[:3]}")
            if len(set(ids)) != len(ids):
                raise IntegrityError(f"duplicate clip ids inside {name} split")
            seen.update(ids)

    def ids(self, split: str) -> list[str]:
        if split not in ("train", "validation", "test"):
            raise ConfigError(f"unknown split {split!r}")
        return getattr(self, split)


def write_splits(path, splits: SplitSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"train": splits.train, "validation": splits.validation,
                   "test": splits.test}, fh, indent=0)
        fh.write("\n")


def load_splits(path) -> SplitSpec:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    missing = [f for f in ("train", "validation", "test") if f not in obj]
    if missing:
        raise SchemaError(f"splits file missing: {', '.join(missing)}")
    return SplitSpec(train=[str(i) for i in obj["train"]],
                     validation=[str(i) for i in obj["validation"]],
                     test=[str(i) for i in obj["test"]])


# ---------------------------------------------------------------------------
# Metrics CSV

METRICS_HEADER = "task,difficulty,method,split,accuracy,n"


@dataclass
class MetricRow:
    task: str
    difficulty: str
    method: str
    split: str
    accuracy: float
    n: int

    def as_line(self) -> str:
        return (f"{self.task},{self.difficulty},{self.method},{self.split},"
                f"{repr(float(self.accuracy))},{self.n}")


def format_metrics(rows: list[MetricRow]) -> str:
    return "\n".join([METRICS_HEADER] + [r.as_line() for r in rows]) + "\n"


def write_metrics(rows: list[MetricRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_metrics(rows))


# ---------------------------------------------------------------------------
# Synthetic datasets

@dataclass
class SynthSpec:
    """Configuration of one synthetic dataset run."""

    n_clips: int
    t_frames: int
    dim: int
    dynamics: str
    seed: int
    questions_per_clip: int = 1
    k: int | None = None          # candidates per question; per-dynamics default
    noise: float = 0.02
    word_dim: int = 16
    sent_dim: int = 16

    def __post_init__(self):
        if self.dynamics not in DYNAMICS:
            raise ConfigError(f"dynamics must be one of {DYNAMICS}, got {self.dynamics!r}")
        if self.n_clips < 8:
            raise ConfigError(f"need at least 8 clips, got {self.n_clips}")
        if self.t_frames < 1 or self.dim < 2:
            raise ConfigError("t_frames must be >= 1 and dim >= 2")
        if self.questions_per_clip < 1:
            raise ConfigError("questions_per_clip must be >= 1")
        if self.k is not None and self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0")


@dataclass
class SynthData:
    features: list[FeatureSequence]
    word_table: dict[str, np.ndarray]
    sent_table: dict[str, np.ndarray]
    questions: list[QuestionRecord]
    splits: SplitSpec


def _split_of(index: int) -> str:
    residue = index % 10
    if residue < 6:
        return "train"
    if residue < 8:
        return "validation"
    return "test"


def _make_splits(clip_ids: list[str]) -> SplitSpec:
    buckets = {"train": [], "validation": [], "test": []}
    for i, cid in enumerate(clip_ids):
        buckets[_split_of(i)].append(cid)
    return SplitSpec(**buckets)


def _orthonormal(n_vectors: int, dim: int, rng: Rng) -> np.ndarray:
    """(n_vectors, dim) with orthonormal rows."""
    if n_vectors > dim:
        raise ConfigError(f"cannot fit {n_vectors} orthonormal vectors in dim {dim}")
    gauss = rng.normal((dim, n_vectors))
    q, _ = np.linalg.qr(gauss)
    return q.T[:n_vectors]


class _PositionBalancer:
    """Cycles the correct-candidate position per (split, group) so that
    position-blind strategies score exactly 1/K on every slice."""

    def __init__(self):
        self.counters: dict[tuple, int] = {}

    def next(self, key: tuple, k: int) -> int:
        pos = self.counters.get(key, 0) % k
        self.counters[key] = self.counters.get(key, 0) + 1
        return pos


def _place_correct(distractors: list[str], answer: str, position: int,
                   rng: Rng) -> tuple[list[str], int]:
    order = list(distractors)
    rng.shuffle(order)
    order.insert(position, answer)
    return order, position


def _storage_round_trip(data: np.ndarray) -> np.ndarray:
    # features are stored as float32; keep memory and disk identical
    return data.astype(np.float32).astype(np.float64)


def _synth_circle(spec: SynthSpec, doubling: bool):
    """Shared generator for the two trajectory-on-a-circle dynamics.

    Sinusoid clips rotate at a class-specific speed and direction; their
    features mix the two circle coordinates, so over whole periods the frame
    mean vanishes and only the frame order carries the class.

    Doubling clips follow theta -> 2*theta (mod 2pi), which is deterministic
    forward and two-to-one backward. Features mix the first two harmonics:
    one step ahead is then mostly linear in the current frame, while one step
    back leaves the first harmonic with two equally likely signs, an
    irreducible ambiguity no model can beat.
    """
    rng = Rng(spec.seed)
    feat_rng = rng.spawn(1)
    q_rng = rng.spawn(2)
    emb_rng = rng.spawn(3)

    n_channels = 4 if doubling else 2
    if spec.dim < n_channels:
        raise ConfigError(f"{spec.dynamics} needs dim >= {n_channels}")
    mix = _orthonormal(n_channels, spec.dim, emb_rng)
    if doubling:
        tokens = ["north", "east", "south", "west"]
        template = "clip {cid} ends pointing ___"
    else:
        tokens = ["spinning", "swaying", "bouncing", "flickering"]
        template = "clip {cid} shows a ___ motion"
    k = 4 if spec.k is None else spec.k
    if k != 4:
        raise ConfigError(f"{spec.dynamics} questions are 4-way, got k={k}")
    word_vecs = _orthonormal(len(tokens), spec.word_dim, emb_rng)
    sent_vecs = _orthonormal(len(tokens), spec.sent_dim, emb_rng)
    word_table = {tok: word_vecs[i] for i, tok in enumerate(tokens)}
    sent_table: dict[str, np.ndarray] = {}

    features: list[FeatureSequence] = []
    questions: list[QuestionRecord] = []
    clip_ids = [f"clip{i:04d}" for i in range(spec.n_clips)]
    balancer = _PositionBalancer()
    two_pi = 2.0 * np.pi
    for i, cid in enumerate(clip_ids):
        phase = feat_rng.uniform(0.0, two_pi)
        if doubling:
            theta = np.empty(spec.t_frames)
            theta[0] = phase
            for t in range(1, spec.t_frames):
                theta[t] = (2.0 * theta[t - 1]) % two_pi
            label = int(theta[-1] // (np.pi / 2.0)) % 4
            frames = (np.cos(theta)[:, None] * mix[0] + np.sin(theta)[:, None] * mix[1]
                      + np.cos(2 * theta)[:, None] * mix[2]
                      + np.sin(2 * theta)[:, None] * mix[3])
        else:
            label = feat_rng.integer(4)
            direction = 1.0 if label % 2 == 0 else -1.0
            cycles = 1 if label < 2 else 2
            steps = np.arange(spec.t_frames)
            theta = phase + direction * two_pi * cycles * steps / spec.t_frames
            frames = np.cos(theta)[:, None] * mix[0] + np.sin(theta)[:, None] * mix[1]
        if spec.noise > 0:
            frames = frames + spec.noise * feat_rng.normal(frames.shape)
        features.append(FeatureSequence(cid, _storage_round_trip(frames)))

        answer = tokens[label]
        split = _split_of(i)
        for qn in range(spec.questions_per_clip):
            distractors = [t for t in tokens if t != answer]
            pos = balancer.next((split,), k)
            cands, correct = _place_correct(distractors, answer, pos, q_rng)
            text = template.format(cid=cid)
            questions.append(QuestionRecord(
                qid=f"q{len(questions):05d}", clip_id=cid, task="present",
                difficulty="easy", category="verb", question_text=text,
                candidates=cands, correct_idx=correct))
            for cand in cands:
                sent_table.setdefault(text.replace("___", cand),
                                      sent_vecs[tokens.index(cand)])
    return SynthData(features=features, word_table=word_table, sent_table=sent_table,
                     questions=questions, splits=_make_splits(clip_ids))


def _synth_complementary(spec: SynthSpec):
    """Half the questions are decidable only via word vectors, half only via
    sentence vectors: the silent channel carries equal embeddings for every
    candidate of the question, so it cannot separate them at any weight."""
    rng = Rng(spec.seed)
    feat_rng = rng.spawn(1)
    q_rng = rng.spawn(2)
    emb_rng = rng.spawn(3)

    k = 10 if spec.k is None else spec.k
    n_concepts = k + 2
    if n_concepts > min(spec.dim, spec.word_dim, spec.sent_dim):
        raise ConfigError(
            f"complementary-channels with k={k} needs dim/word_dim/sent_dim >= {n_concepts}")
    concept_tokens = [f"concept{c:02d}" for c in range(n_concepts)]
    neutral_tokens = [f"filler{c:02d}" for c in range(max(16, k + 4))]
    visual_vecs = _orthonormal(n_concepts, spec.dim, emb_rng)
    word_vecs = _orthonormal(n_concepts, spec.word_dim, emb_rng)
    sent_vecs = _orthonormal(n_concepts, spec.sent_dim, emb_rng)
    neutral_word = emb_rng.normal((spec.word_dim,))
    neutral_word /= np.linalg.norm(neutral_word)

    word_table = {tok: word_vecs[i] for i, tok in enumerate(concept_tokens)}
    for tok in neutral_tokens:
        word_table[tok] = neutral_word
    sent_table: dict[str, np.ndarray] = {}

    features: list[FeatureSequence] = []
    questions: list[QuestionRecord] = []
    clip_ids = [f"clip{i:04d}" for i in range(spec.n_clips)]
    balancer = _PositionBalancer()
    for i, cid in enumerate(clip_ids):
        concept = feat_rng.integer(n_concepts)
        frames = np.tile(visual_vecs[concept], (spec.t_frames, 1))
        if spec.noise > 0:
            frames = frames + spec.noise * feat_rng.normal(frames.shape)
        features.append(FeatureSequence(cid, _storage_round_trip(frames)))

        split = _split_of(i)
        word_half = i % 2 == 0
        for qn in range(spec.questions_per_clip):
            # the item number keeps filled sentences unique across a clip's questions
            text = f"clip {cid} item {qn} mainly involves ___"
            pos = balancer.next((split, word_half), k)
            if word_half:
                answer = concept_tokens[concept]
                others = [t for t in concept_tokens if t != answer]
                distractors = q_rng.sample(others, k - 1)
                cands, correct = _place_correct(distractors, answer, pos, q_rng)
                # sentence channel is silent: one shared vector per question
                silent = feat_rng.normal((spec.sent_dim,))
                silent /= np.linalg.norm(silent)
                for cand in cands:
                    sent_table[text.replace("___", cand)] = silent
            else:
                cands_tokens = q_rng.sample(neutral_tokens, k)
                answer = cands_tokens[0]
                cands, correct = _place_correct(cands_tokens[1:], answer, pos, q_rng)
                wrong_concepts = q_rng.sample(
                    [c for c in range(n_concepts) if c != concept], k - 1)
                wrong_iter = iter(wrong_concepts)
                for idx, cand in enumerate(cands):
                    sentence = text.replace("___", cand)
                    if idx == correct:
                        sent_table[sentence] = sent_vecs[concept]
                    else:
                        sent_table[sentence] = sent_vecs[next(wrong_iter)]
            questions.append(QuestionRecord(
                qid=f"q{len(questions):05d}", clip_id=cid, task="present",
                difficulty="hard" if k >= 10 else "easy", category="noun",
                question_text=text, candidates=cands, correct_idx=correct))
    return SynthData(features=features, word_table=word_table, sent_table=sent_table,
                     questions=questions, splits=_make_splits(clip_ids))


def synth_dataset(spec: SynthSpec) -> SynthData:
    """Deterministic desk-scale dataset for the given dynamics and seed."""
    if spec.dynamics == "sinusoid":
        return _synth_circle(spec, doubling=False)
    if spec.dynamics == "markov-noninvertible":
        return _synth_circle(spec, doubling=True)
    return _synth_complementary(spec)


def write_dataset(data: SynthData, outdir) -> None:
    outdir = Path(outdir)
    (outdir / "features").mkdir(parents=True, exist_ok=True)
    for seq in data.features:
        write_feat(outdir / "features" / f"{seq.clip_id}.feat", seq)
    write_embeddings(outdir / "words.tsv", data.word_table)
    write_embeddings(outdir / "sentences.tsv", data.sent_table)
    write_questions(outdir / "questions.jsonl", data.questions)
    write_splits(outdir / "splits.json", data.splits)


def load_dataset(dirpath):
    """(features, word_table, sent_table, questions, splits) from a dataset dir."""
    dirpath = Path(dirpath)
    return (load_features_dir(dirpath / "features"),
            load_embeddings(dirpath / "words.tsv"),
            load_embeddings(dirpath / "sentences.tsv"),
            load_questions(dirpath / "questions.jsonl"),
            load_splits(dirpath / "splits.json"))
