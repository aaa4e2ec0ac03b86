"""Command-line front end: every stage of the pipeline as one subcommand.

All runs are seed-pinned (--seed, falling back to the VQA_SEED environment
variable) and every command that writes files also writes a JSON echo of its
resolved configuration next to the outputs, so any published number can be
reproduced from a single recorded command line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import backend, cca, dataio, gradcheck, pipeline, qagen, rank, seqae, store
from .errors import ConfigError, VqaError
from .rng import Rng


def _default_seed() -> int:
    return int(os.environ.get("VQA_SEED", "0"))


def _echo_config(args: argparse.Namespace, anchor: Path) -> None:
    """Write the resolved run configuration next to the command's outputs."""
    resolved = {k: (str(v) if isinstance(v, Path) else v)
                for k, v in sorted(vars(args).items()) if k != "func"}
    resolved["backend"] = backend.BACKEND
    path = anchor / "config.json" if anchor.is_dir() else anchor.with_suffix(
        anchor.suffix + ".config.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_variant_clips(data_dir: Path, splits: dataio.SplitSpec,
                        split: str) -> list[np.ndarray]:
    features = dataio.load_features_dir(data_dir / "features")
    return [features[cid].data for cid in splits.ids(split) if cid in features]


def cmd_synth(args) -> int:
    spec = dataio.SynthSpec(
        n_clips=args.clips, t_frames=args.frames, dim=args.dim,
        dynamics=args.dynamics, seed=args.seed,
        questions_per_clip=args.questions_per_clip, k=args.candidates,
        noise=args.noise, word_dim=args.word_dim, sent_dim=args.sent_dim)
    data = dataio.synth_dataset(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_dataset(data, out)
    _echo_config(args, out)
    print(f"wrote {len(data.features)} clips, {len(data.questions)} questions to {out}")
    return 0


def cmd_pretrain(args) -> int:
    data_dir = Path(args.data)
    splits = dataio.load_splits(data_dir / "splits.json")
    clips = _load_variant_clips(data_dir, splits, "train")
    model = seqae.init_seqae(seqae.Variant(args.variant), feature_dim=args.dim or
                             clips[0].shape[1], hidden=args.hidden,
                             enc_len=args.enc_len, rng=Rng(args.seed),
                             n_layers=args.layers, dropout=args.dropout)
    config = seqae.TrainConfig(epochs=args.epochs, batch_size=args.batch,
                               clip=args.clip, lr=args.lr, rho=args.rho,
                               eps=args.eps, seed=args.seed)
    curve = seqae.pretrain(model, clips, config)
    store.save_seqae(Path(args.out), model)
    _echo_config(args, Path(args.out))
    if args.curve:
        with open(args.curve, "w", encoding="utf-8") as fh:
            fh.write("epoch,mean_loss\n")
            for epoch, loss in enumerate(curve):
                fh.write(f"{epoch},{repr(loss)}\n")
    first = curve[0] if curve else float("nan")
    last = curve[-1] if curve else float("nan")
    print(f"pretrained {args.variant} model: epochs={len(curve)} "
          f"first_loss={first:.6f} last_loss={last:.6f}")
    return 0


def cmd_represent(args) -> int:
    model = store.load_seqae(Path(args.model))
    features = dataio.load_features_dir(Path(args.data) / "features")
    table = {cid: seqae.represent(model, seq.data) for cid, seq in features.items()}
    dataio.write_embeddings(Path(args.out), table)
    _echo_config(args, Path(args.out))
    print(f"wrote {len(table)} representations to {args.out}")
    return 0


def _visuals_for(args, features) -> dict[str, np.ndarray]:
    model = store.load_seqae(Path(args.ae_model)) if args.visual == "gru" else None
    return pipeline.build_visuals(features, source=args.visual, model=model)


def cmd_train_rank(args) -> int:
    features, words, sents, records, splits = dataio.load_dataset(Path(args.data))
    questions = pipeline.attach_all(records, words, sents)
    visuals = _visuals_for(args, features)
    train_qs = pipeline.split_questions(questions, splits, "train")
    if not train_qs:
        raise ConfigError("no training questions in the dataset")
    sample = train_qs[0]
    model = rank.init_rank_model(
        visual_dim=len(visuals[sample.clip_id]),
        word_dim=len(sample.candidates[0].word_vec),
        sent_dim=len(sample.candidates[0].sent_vec),
        rng=Rng(args.seed), word_space=args.word_space, sent_space=args.sent_space,
        alpha=args.alpha, beta=args.beta, lam=args.lam)
    config = rank.RankTrainConfig(epochs=args.epochs, lr=args.lr,
                                  momentum=args.momentum, seed=args.seed)
    curve = rank.train_rank(model, train_qs, lambda cid: visuals[cid], config)
    store.save_rank(Path(args.out), model)
    _echo_config(args, Path(args.out))
    print(f"trained ranker on {len(train_qs)} questions: "
          f"first_loss={curve[0]:.4f} last_loss={curve[-1]:.4f}")
    return 0


def cmd_cca(args) -> int:
    features, words, sents, records, splits = dataio.load_dataset(Path(args.data))
    questions = pipeline.attach_all(records, words, sents)
    visuals = _visuals_for(args, features)
    train_qs = pipeline.split_questions(questions, splits, "train")
    if not train_qs:
        raise ConfigError("no training questions in the dataset")
    fusion = fit_fusion_from_questions(train_qs, visuals, reg=args.reg, k=args.k)
    val_qs = pipeline.split_questions(questions, splits, "validation")
    if val_qs:
        fusion.weight = cca.select_fusion_weight(fusion, val_qs,
                                                 lambda cid: visuals[cid])
    store.save_fusion(Path(args.out), fusion)
    _echo_config(args, Path(args.out))
    print(f"fitted CCA fusion on {len(train_qs)} questions, weight={fusion.weight}")
    return 0


def fit_fusion_from_questions(questions: list[rank.Question],
                              visuals: dict[str, np.ndarray],
                              reg: float | None = None,
                              k: int | None = None) -> cca.CcaFusion:
    """Full-batch CCA on (visual, correct-answer embedding) training pairs.

    Inputs are l2-normalized first, matching what the ranking path feeds its
    linear maps."""
    from .mathops import l2_normalize

    xs, ys, zs = [], [], []
    for q in questions:
        correct = q.candidates[q.correct_idx]
        xs.append(l2_normalize(visuals[q.clip_id]))
        ys.append(l2_normalize(correct.word_vec))
        zs.append(l2_normalize(correct.sent_vec))
    x = np.asarray(xs)
    cca_word = cca.fit_cca(x, np.asarray(ys), reg=reg, k=k)
    cca_sent = cca.fit_cca(x, np.asarray(zs), reg=reg, k=k)
    return cca.CcaFusion(cca_word=cca_word, cca_sent=cca_sent, weight=0.5)


def cmd_eval(args) -> int:
    features, words, sents, records, splits = dataio.load_dataset(Path(args.data))
    questions = pipeline.attach_all(records, words, sents)
    visuals = _visuals_for(args, features)
    visual_fn = lambda cid: visuals[cid]
    eval_qs = pipeline.split_questions(questions, splits, args.split)
    if not eval_qs:
        raise ConfigError(f"no questions in split {args.split!r}")

    if args.method == "rank":
        model = store.load_rank(Path(args.model))
        if args.select_lambda:
            val_qs = pipeline.split_questions(questions, splits, "validation")
            if not val_qs:
                raise ConfigError("--select-lambda needs a validation split")
            model.lam = rank.select_lambda(model, val_qs, visual_fn)
        predict = lambda q: rank.answer(model, visual_fn(q.clip_id), q)
        method = "dual-rank"
    else:
        fusion = store.load_fusion(Path(args.model))
        if args.select_weight:
            val_qs = pipeline.split_questions(questions, splits, "validation")
            if not val_qs:
                raise ConfigError("--select-weight needs a validation split")
            fusion.weight = cca.select_fusion_weight(fusion, val_qs, visual_fn)
        predict = lambda q: cca.cca_answer(fusion, q, visual_fn(q.clip_id))
        method = "cca"

    rows = pipeline.grouped_accuracy(eval_qs, predict, method=method, split=args.split)
    text = dataio.format_metrics(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _echo_config(args, Path(args.out))
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_qa(args) -> int:
    records = _load_records(Path(args.records))
    table = dataio.load_embeddings(Path(args.embeddings)) if args.embeddings else None
    if args.difficulty == "easy":
        vocab = _load_vocab(Path(args.vocab), Path(args.stopwords) if args.stopwords else None)
        questions = qagen.generate_questions(records, "easy", args.seed, vocab=vocab)
    else:
        if table is None or not args.pool:
            raise ConfigError("hard generation needs --embeddings and --pool")
        phrases = [line.strip() for line in Path(args.pool).read_text(encoding="utf-8")
                   .splitlines() if line.strip()]
        pool = qagen.build_pool(phrases, table)
        questions = qagen.generate_questions(records, "hard", args.seed, pool=pool,
                                             table=table, tau_high=args.tau_high,
                                             k=args.candidates)
    dataio.write_questions(Path(args.out), questions)
    _echo_config(args, Path(args.out))
    print(f"wrote {len(questions)} questions to {args.out}")
    return 0


def _load_records(path: Path) -> list[qagen.AnnotationRecord]:
    from .errors import SchemaError

    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            missing = [f for f in ("clip_id", "text", "blank_start", "blank_end",
                                   "answer", "category") if f not in obj]
            if missing:
                raise SchemaError(f"record missing fields: {', '.join(missing)}")
            records.append(qagen.AnnotationRecord(
                clip_id=str(obj["clip_id"]), text=str(obj["text"]),
                blank_start=int(obj["blank_start"]), blank_end=int(obj["blank_end"]),
                answer=str(obj["answer"]), category=str(obj["category"])))
    return records


def _load_vocab(path: Path, stopwords_path: Path | None) -> qagen.Vocab:
    from .errors import SchemaError

    entries = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise SchemaError(f"vocab line {lineno}: expected token, category, frequency")
            entries[parts[0]] = (parts[1], int(parts[2]))
    stopwords = set()
    if stopwords_path is not None:
        stopwords = {w.strip() for w in stopwords_path.read_text(encoding="utf-8")
                     .splitlines() if w.strip()}
    return qagen.Vocab(entries=entries, stopwords=stopwords)


def cmd_gradcheck(args) -> int:
    results = gradcheck.run_all(seed=args.seed, trials=args.trials)
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name}: max_rel_err={res.max_rel_err:.3e} "
              f"(tolerance {gradcheck.TOLERANCE:g}, {res.trials} instances) {status}")
        ok = ok and res.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqa", description="Temporal video QA: training, answering, evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--dynamics", required=True, choices=dataio.DYNAMICS)
    p.add_argument("--clips", type=int, default=64)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--questions-per-clip", type=int, default=1)
    p.add_argument("--candidates", type=int, default=None,
                   help="candidates per question (default per dynamics)")
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--word-dim", type=int, default=16)
    p.add_argument("--sent-dim", type=int, default=16)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="train a sequence autoencoder")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", required=True, choices=[v.value for v in seqae.Variant])
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--enc-len", type=int, default=10)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=5e-3)
    p.add_argument("--rho", type=float, default=0.95)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--clip", type=float, default=1e-4)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.add_argument("--curve", default=None, help="write epoch,mean_loss CSV here")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("represent", help="export clip representations")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_represent)

    p = sub.add_parser("train-rank", help="train the dual-channel ranker")
    p.add_argument("--data", required=True)
    p.add_argument("--visual", choices=["mean", "gru"], default="mean")
    p.add_argument("--ae-model", default=None)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--lam", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--word-space", type=int, default=32)
    p.add_argument("--sent-space", type=int, default=32)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_rank)

    p = sub.add_parser("cca", help="fit the CCA fusion baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--visual", choices=["mean", "gru"], default="mean")
    p.add_argument("--ae-model", default=None)
    p.add_argument("--reg", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cca)

    p = sub.add_parser("eval", help="answer questions and report accuracy")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["rank", "cca"], required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--visual", choices=["mean", "gru"], default="mean")
    p.add_argument("--ae-model", default=None)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--select-lambda", action="store_true",
                   help="re-pick lambda on the validation split first")
    p.add_argument("--select-weight", action="store_true",
                   help="re-pick the CCA fusion weight on validation first")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default=None, help="metrics CSV (stdout if omitted)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-qa", help="generate questions from annotation records")
    p.add_argument("--records", required=True)
    p.add_argument("--difficulty", choices=["easy", "hard"], required=True)
    p.add_argument("--vocab", default=None, help="TSV: token, category, frequency")
    p.add_argument("--stopwords", default=None)
    p.add_argument("--embeddings", default=None, help="EMB-TSV word vectors")
    p.add_argument("--pool", default=None, help="text file, one phrase per line")
    p.add_argument("--tau-high", type=float, default=qagen.DEFAULT_TAU_HIGH)
    p.add_argument("--candidates", type=int, default=qagen.HARD_K)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_qa)

    p = sub.add_parser("gradcheck", help="finite-difference check of every gradient")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VqaError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
