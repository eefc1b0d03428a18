"""Command-line interface.

Subcommands cover the whole pipeline: gold CSV -> tag files (``convert``),
stratified ``split``, corpus ``stats``, detection-track ``clean`` and
``augment``, training (``train-detector``/``train-tagger``), inference
(``predict``), tag-file ``decode`` back to character spans, detection
``ensemble``, and ``eval`` for both tracks.

Conventions shared by every subcommand:

* all randomness flows from ``--seed`` (default 2020); reruns with the same
  seed and inputs produce byte-identical outputs,
* values resolve CLI flag > ``--config`` file (``key=value`` lines) > default,
* every run that writes files also writes a ``<output>.manifest.json``
  recording tool version, resolved parameters, input digests and output
  paths (the timestamp is the single non-deterministic field),
* exit codes: 0 ok, 1 usage, 2 input validation, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

from . import DEFAULT_SEED, __version__
from .baselines import (
    DEFAULT_HASH_DIMENSION,
    DetectorModel,
    LabelPrediction,
    TaggerModel,
    TrainingConfig,
    import_tag_predictions,
    load_model,
    load_task1_predictions,
    predict_detector,
    predict_tagger,
    save_model,
    train_detector,
    train_tagger,
    write_task1_predictions,
)
from .cleaning import CleanOptions, clean_text, merge_augmented
from .corpus import (
    CorpusFormatError,
    Issue,
    Task1Record,
    ValidationReport,
    corpus_stats,
    load_ner,
    load_task1,
    load_task2,
    stratified_split,
    write_ner,
    write_task1,
    write_task2,
)
from .ensemble import TIE_POLICIES, EnsembleConfig, majority_vote
from .metrics import binary_prf, macro_span_report, span_score
from .span_codec import (
    DecodePolicy,
    RUN_FIRST,
    RUN_LONGEST,
    SpanPrediction,
    SpanValidationError,
    TagSequence,
    decode_spans,
    encode_tags,
    merge_subword_tags,
    write_predictions,
)
from .tokenizer import tokenize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Bad flag combinations or unparseable invocations (exit 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage problems are exit 1
        raise UsageError(f"{self.prog}: {message}")


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_config_file(path) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` comments and blank lines are ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_num, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {line_num}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


class Settings:
    """Flag > config file > default resolution, recording what was used."""

    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._file = (
            load_config_file(args.config) if getattr(args, "config", None) else {}
        )
        self.resolved: dict[str, object] = {}

    def get(self, name: str, default, cast=None):
        value = getattr(self._args, name, None)
        if value is None and name in self._file:
            raw = self._file[name]
            try:
                value = cast(raw) if cast else raw
            except ValueError as exc:
                raise UsageError(f"config value {name}={raw!r}: {exc}") from exc
        if value is None:
            value = default
        self.resolved[name] = value
        return value


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(primary_output, command: str, settings: Settings, inputs, outputs):
    """Record one run beside its primary output as ``<output>.manifest.json``."""
    manifest = {
        "tool": "cfspan",
        "version": __version__,
        "command": command,
        "parameters": settings.resolved,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(f"{primary_output}.manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _load_sentences(path) -> list[tuple[str, str]]:
    """(sentenceID, sentence) pairs from any CSV carrying those two columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CorpusFormatError(f"{path}: empty file, expected a header row")
        try:
            id_col = header.index("sentenceID")
            text_col = header.index("sentence")
        except ValueError:
            raise CorpusFormatError(
                f"{path}: header must include sentenceID and sentence columns"
            ) from None
        pairs = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise CorpusFormatError(
                    f"{path}: line {reader.line_num}: expected {len(header)} columns, "
                    f"got {len(row)}"
                )
            pairs.append((row[id_col], row[text_col]))
    return pairs


def _load_pos_blocks(path) -> list[tuple[list[str], list[str]]]:
    """Stacked ``word<TAB>pos`` blocks used as the POS pass-through source."""
    blocks: list[tuple[list[str], list[str]]] = []
    words: list[str] = []
    pos: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_num, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                if words:
                    blocks.append((words, pos))
                    words, pos = [], []
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise CorpusFormatError(
                    f"{path}: line {line_num}: expected word<TAB>pos"
                )
            words.append(fields[0])
            pos.append(fields[1])
    if words:
        blocks.append((words, pos))
    return blocks


# ---------------------------------------------------------------------------
# Subcommands


def cmd_convert(args) -> int:
    settings = Settings(args)
    records, rejects = load_task2(args.input)
    include_pos = bool(args.include_pos)
    settings.resolved["include_pos"] = include_pos
    pos_blocks = None
    if include_pos:
        if not args.pos_file:
            raise UsageError(
                "--include-pos needs --pos-file: the gold CSV has no POS column "
                "(POS is pass-through only)"
            )
        pos_blocks = _load_pos_blocks(args.pos_file)

    sequences = []
    kept_ids = []
    for record in records:
        tokens = tokenize(record.text)
        try:
            seq = encode_tags(record.text, tokens, record)
        except SpanValidationError as exc:
            rejects.append(
                ValidationReport(record.sentence_id, [Issue("overlap", str(exc))])
            )
            continue
        sequences.append(seq)
        kept_ids.append(record.sentence_id)

    if pos_blocks is not None:
        if len(pos_blocks) != len(sequences):
            raise CorpusFormatError(
                f"{args.pos_file}: {len(pos_blocks)} POS blocks for "
                f"{len(sequences)} sentences"
            )
        with_pos = []
        for i, (seq, (words, pos)) in enumerate(zip(sequences, pos_blocks)):
            token_texts = [t.text for t in seq.tokens]
            if words != token_texts:
                raise CorpusFormatError(
                    f"{args.pos_file}: block {i}: words do not match sentence "
                    f"{kept_ids[i]}"
                )
            with_pos.append(TagSequence(seq.tokens, seq.tags, pos))
        sequences = with_pos

    write_ner(args.output, sequences, include_pos=include_pos)
    outputs = [args.output]

    rejects_path = args.rejects or f"{args.output}.rejects.csv"
    settings.resolved["rejects"] = str(rejects_path)
    with open(rejects_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentenceID", "code", "message"])
        for report in rejects:
            for issue in report.issues:
                writer.writerow([report.record_id, issue.code, issue.message])
    outputs.append(rejects_path)

    inputs = [args.input] + ([args.pos_file] if pos_blocks is not None else [])
    outputs.append(write_manifest(args.output, "convert", settings, inputs, outputs))
    print(f"wrote {len(sequences)} sentences to {args.output}")
    print(f"quarantined {len(rejects)} records to {rejects_path}")
    return EXIT_OK


def cmd_split(args) -> int:
    settings = Settings(args)
    task = settings.get("task", 1, int)
    holdout = settings.get("holdout", 0.05, float)
    seed = settings.get("seed", DEFAULT_SEED, int)
    if task == 1:
        records = load_task1(args.input)
        writer = write_task1
    elif task == 2:
        records, rejects = load_task2(args.input)
        if rejects:
            print(f"note: {len(rejects)} invalid records were skipped", file=sys.stderr)
        writer = write_task2
    else:
        raise UsageError(f"--task must be 1 or 2, got {task}")
    train, validation = stratified_split(records, holdout, seed)
    writer(args.train_output, train)
    writer(args.validation_output, validation)
    outputs = [args.train_output, args.validation_output]
    outputs.append(
        write_manifest(args.train_output, "split", settings, [args.input], outputs)
    )
    print(f"train: {len(train)} records -> {args.train_output}")
    print(f"validation: {len(validation)} records -> {args.validation_output}")
    return EXIT_OK


def cmd_stats(args) -> int:
    settings = Settings(args)
    threshold = settings.get("length_threshold", 512, int)
    figures = settings.get("figures", True, _parse_bool)
    records = load_task1(args.input)
    stats = corpus_stats(records, threshold)

    # Imported lazily: pulling in the figure machinery would slow down every
    # command that never draws anything.
    from .report import kv_lines, save_balance_figure, stats_kv, stats_table

    table = stats_table(stats)
    kv = stats_kv(stats)
    print(table, end="")
    print(kv_lines(kv), end="")

    if args.output:
        text_path = Path(f"{args.output}.txt")
        text_path.write_text(table, encoding="utf-8")
        kv_path = Path(f"{args.output}.kv")
        kv_path.write_text(kv_lines(kv), encoding="utf-8")
        outputs = [text_path, kv_path]
        if figures:
            png_path = Path(f"{args.output}.png")
            save_balance_figure(stats, png_path)
            outputs.append(png_path)
        outputs.append(
            write_manifest(args.output, "stats", settings, [args.input], outputs)
        )
    return EXIT_OK


def cmd_clean(args) -> int:
    settings = Settings(args)
    task = settings.get("task", 1, int)
    if task != 1:
        raise UsageError(
            "cleaning rewrites sentence text and would invalidate gold span "
            "indexes; only --task 1 data can be cleaned"
        )
    options = CleanOptions(
        strip_punctuation=settings.get("strip_punctuation", False, _parse_bool),
        strip_rare_characters=settings.get("strip_rare", False, _parse_bool),
        strip_hashtags=settings.get("strip_hashtags", False, _parse_bool),
    )
    records = load_task1(args.input)
    cleaned = []
    dropped = 0
    for rec in records:
        text = clean_text(rec.text, options)
        if not text:
            dropped += 1
            continue
        cleaned.append(Task1Record(rec.sentence_id, text, rec.label))
    write_task1(args.output, cleaned)
    outputs = [args.output]
    outputs.append(write_manifest(args.output, "clean", settings, [args.input], outputs))
    print(f"cleaned {len(cleaned)} records -> {args.output}")
    if dropped:
        print(f"dropped {dropped} records whose text cleaned to empty")
    return EXIT_OK


def cmd_augment(args) -> int:
    settings = Settings(args)
    dedup = settings.get("dedup", True, _parse_bool)
    base = load_task1(args.base)
    augmented = load_task1(args.augmented)
    merged, report = merge_augmented(base, augmented, dedup=dedup)
    write_task1(args.output, merged)

    from .report import kv_lines

    kv = {
        "added": report.added,
        "duplicates_skipped": report.duplicates_skipped,
    }
    for label in sorted(report.label_delta):
        kv[f"added_label_{label}"] = report.label_delta[label]
    kv_path = Path(f"{args.output}.report.kv")
    kv_path.write_text(kv_lines(kv), encoding="utf-8")

    outputs = [args.output, kv_path]
    outputs.append(
        write_manifest(
            args.output, "augment", settings, [args.base, args.augmented], outputs
        )
    )
    print(f"merged corpus: {len(merged)} records -> {args.output}")
    print(f"added {report.added}, skipped {report.duplicates_skipped} duplicates")
    return EXIT_OK


def _training_config(settings: Settings) -> TrainingConfig:
    return TrainingConfig(
        batch_size=settings.get("batch_size", 32, int),
        learning_rate=settings.get("learning_rate", 0.1, float),
        epochs=settings.get("epochs", 5, int),
        max_sequence_length=settings.get("max_length", 128, int),
        positive_class_weight=settings.get("positive_class_weight", 1.0, float),
        seed=settings.get("seed", DEFAULT_SEED, int),
    )


def cmd_train_detector(args) -> int:
    settings = Settings(args)
    config = _training_config(settings)
    hash_dimension = settings.get("hash_dimension", DEFAULT_HASH_DIMENSION, int)
    records = load_task1(args.input)
    model = train_detector(records, config, hash_dimension)
    save_model(model, args.output)
    outputs = [args.output]
    outputs.append(
        write_manifest(args.output, "train-detector", settings, [args.input], outputs)
    )
    print(
        f"trained detector on {len(records)} records "
        f"({config.epochs} epochs, seed {config.seed}) -> {args.output}"
    )
    return EXIT_OK


def cmd_train_tagger(args) -> int:
    settings = Settings(args)
    config = _training_config(settings)
    averaged = settings.get("averaged", True, _parse_bool)
    sentences = load_ner(args.input)
    model = train_tagger(sentences, config, averaged=averaged)
    save_model(model, args.output)
    outputs = [args.output]
    outputs.append(
        write_manifest(args.output, "train-tagger", settings, [args.input], outputs)
    )
    print(
        f"trained tagger on {len(sentences)} sentences "
        f"({config.epochs} epochs, seed {config.seed}) -> {args.output}"
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    settings = Settings(args)
    model = load_model(args.model)
    pairs = _load_sentences(args.input)
    if isinstance(model, DetectorModel):
        raw = predict_detector(model, [text for _, text in pairs])
        preds = [
            LabelPrediction(p.label, p.score, sentence_id=pair[0])
            for pair, p in zip(pairs, raw)
        ]
        write_task1_predictions(args.output, preds)
        print(f"wrote {len(preds)} detection predictions -> {args.output}")
    elif isinstance(model, TaggerModel):
        sequences = []
        for sentence_id, text in pairs:
            tokens = tokenize(text)
            if not tokens:
                raise CorpusFormatError(
                    f"{args.input}: sentence {sentence_id} tokenizes to zero tokens"
                )
            sequences.append(TagSequence(tokens, predict_tagger(model, tokens)))
        write_ner(args.output, sequences)
        print(f"wrote {len(sequences)} tagged sentences -> {args.output}")
    else:  # pragma: no cover - load_model only returns the two kinds
        raise AssertionError(f"unexpected model type {type(model).__name__}")
    outputs = [args.output]
    outputs.append(
        write_manifest(
            args.output, "predict", settings, [args.model, args.input], outputs
        )
    )
    return EXIT_OK


def _reconcile_tags(words, tags, tokens, strategy: str):
    """Map piece-level tags onto this sentence's tokens.

    When the tag file's words already match the tokens one-to-one the tags
    pass through.  Otherwise the words must concatenate left-to-right into
    the token texts (the shape produced by subword splitting), and the tags
    are merged one-per-token.
    """
    texts = [t.text for t in tokens]
    if words == texts:
        return tags
    mapping: dict[int, int] = {}
    token_index = 0
    acc = ""
    for piece_index, word in enumerate(words):
        if token_index >= len(texts):
            raise SpanValidationError("tag rows extend past the sentence's tokens")
        acc += word
        mapping[piece_index] = token_index
        if acc == texts[token_index]:
            token_index += 1
            acc = ""
        elif not texts[token_index].startswith(acc):
            raise SpanValidationError(
                f"tag row {word!r} does not align with token {texts[token_index]!r}"
            )
    if acc or token_index != len(texts):
        raise SpanValidationError("tag rows do not cover the sentence's tokens")
    return merge_subword_tags(tags, mapping, strategy, n_tokens=len(texts))


def cmd_decode(args) -> int:
    settings = Settings(args)
    policy = DecodePolicy(
        run_selection=settings.get("run_selection", RUN_LONGEST),
        max_bridge_gap=settings.get("max_bridge_gap", 1, int),
        include_boundary_punctuation=settings.get(
            "include_boundary_punctuation", True, _parse_bool
        ),
    )
    strategy = settings.get("merge_strategy", "first_piece")
    sequences = import_tag_predictions(args.input)
    pairs = _load_sentences(args.sentences)
    if len(sequences) != len(pairs):
        raise CorpusFormatError(
            f"{args.input} has {len(sequences)} sentences but {args.sentences} "
            f"has {len(pairs)}"
        )
    rows = []
    for i, (seq, (sentence_id, text)) in enumerate(zip(sequences, pairs)):
        tokens = tokenize(text)
        words = [t.text for t in seq.tokens]
        try:
            tags = _reconcile_tags(words, seq.tags, tokens, strategy)
        except SpanValidationError as exc:
            raise CorpusFormatError(
                f"{args.input}: sentence {i} ({sentence_id}): {exc}"
            ) from exc
        rows.append((sentence_id, decode_spans(text, TagSequence(tokens, tags), policy)))
    write_predictions(args.output, rows)
    outputs = [args.output]
    outputs.append(
        write_manifest(
            args.output, "decode", settings, [args.input, args.sentences], outputs
        )
    )
    print(f"decoded {len(rows)} sentences -> {args.output}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    settings = Settings(args)
    tie_policy = settings.get("tie_policy", "first_model")
    sets = [load_task1_predictions(path) for path in args.input]
    combined = majority_vote(sets, EnsembleConfig(tie_policy=tie_policy))
    write_task1_predictions(args.output, combined)
    outputs = [args.output]
    outputs.append(
        write_manifest(args.output, "ensemble", settings, list(args.input), outputs)
    )
    print(f"combined {len(sets)} prediction sets -> {args.output}")
    return EXIT_OK


def _align_by_id(gold_ids, predictions, what: str):
    by_id = {}
    for pred in predictions:
        key = pred[0] if isinstance(pred, tuple) else pred.sentence_id
        if key in by_id:
            raise CorpusFormatError(f"duplicate prediction for sentence {key!r}")
        by_id[key] = pred
    missing = [gid for gid in gold_ids if gid not in by_id]
    if missing:
        shown = ", ".join(repr(m) for m in missing[:5])
        raise CorpusFormatError(
            f"{len(missing)} gold sentences have no {what} prediction "
            f"(first: {shown})"
        )
    extra = set(by_id) - set(gold_ids)
    if extra:
        print(
            f"note: ignoring {len(extra)} predictions without gold rows",
            file=sys.stderr,
        )
    return by_id


def cmd_eval(args) -> int:
    settings = Settings(args)
    task = settings.get("task", 1, int)
    figures = settings.get("figures", True, _parse_bool)

    from .report import (
        binary_report_kv,
        binary_report_table,
        kv_lines,
        save_metric_figure,
        span_report_kv,
        span_report_table,
    )

    if task == 1:
        gold = load_task1(args.gold)
        preds = load_task1_predictions(args.pred)
        by_id = _align_by_id([g.sentence_id for g in gold], preds, "detection")
        report = binary_prf(
            [g.label for g in gold], [by_id[g.sentence_id].label for g in gold]
        )
        table = binary_report_table(report)
        kv = binary_report_kv(report)
        title = "Detection metrics"
    elif task == 2:
        gold, rejects = load_task2(args.gold)
        if rejects:
            print(
                f"note: {len(rejects)} invalid gold records were skipped",
                file=sys.stderr,
            )
        from .span_codec import load_predictions

        preds = load_predictions(args.pred)
        by_id = _align_by_id([g.sentence_id for g in gold], preds, "span")
        scores = []
        for rec in gold:
            gold_quad = SpanPrediction(
                rec.antecedent_start,
                rec.antecedent_end,
                rec.consequent_start,
                rec.consequent_end,
            )
            scores.append(span_score(rec.text, gold_quad, by_id[rec.sentence_id][1]))
        report = macro_span_report(scores)
        table = span_report_table(report)
        kv = span_report_kv(report)
        title = "Span metrics (macro)"
    else:
        raise UsageError(f"--task must be 1 or 2, got {task}")

    print(table, end="")
    print(kv_lines(kv), end="")
    if args.output:
        text_path = Path(f"{args.output}.txt")
        text_path.write_text(table, encoding="utf-8")
        kv_path = Path(f"{args.output}.kv")
        kv_path.write_text(kv_lines(kv), encoding="utf-8")
        outputs = [text_path, kv_path]
        if figures:
            png_path = Path(f"{args.output}.png")
            save_metric_figure(report, png_path, title)
            outputs.append(png_path)
        outputs.append(
            write_manifest(
                args.output, "eval", settings, [args.gold, args.pred], outputs
            )
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfspan", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"cfspan {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p):
        p.add_argument("--config", help="key=value config file (flags win)")
        p.add_argument("--seed", type=int, help=f"RNG seed (default {DEFAULT_SEED})")

    p = sub.add_parser("convert", help="gold extraction CSV -> stacked word/tag file")
    common(p)
    p.add_argument("--input", required=True, help="extraction CSV")
    p.add_argument("--output", required=True, help="tag file to write")
    p.add_argument("--include-pos", action="store_true", help="carry a POS column")
    p.add_argument("--pos-file", help="stacked word<TAB>pos blocks aligned to --input")
    p.add_argument("--rejects", help="where to write quarantined records (CSV)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("split", help="stratified train/validation split")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--task", type=int, choices=(1, 2), help="CSV schema (default 1)")
    p.add_argument("--holdout", type=float, help="validation fraction (default 0.05)")
    p.add_argument("--train-output", required=True)
    p.add_argument("--validation-output", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="label balance and length profile")
    common(p)
    p.add_argument("--input", required=True, help="detection CSV")
    p.add_argument("--length-threshold", type=int, help="over-length cutoff (default 512)")
    p.add_argument("--output", help="report stem; writes .txt/.kv/.png beside it")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("clean", help="normalise detection-track sentence text")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--task", type=int, choices=(1, 2), help="must be 1; 2 is refused")
    p.add_argument(
        "--strip-punctuation", action=argparse.BooleanOptionalAction, default=None
    )
    p.add_argument("--strip-rare", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument(
        "--strip-hashtags", action=argparse.BooleanOptionalAction, default=None
    )
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("augment", help="merge augmented rows into a base corpus")
    common(p)
    p.add_argument("--base", required=True)
    p.add_argument("--augmented", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--dedup", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_augment)

    def training_flags(p):
        p.add_argument("--batch-size", type=int)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--max-length", type=int, help="token truncation (default 128)")

    p = sub.add_parser("train-detector", help="fit the hashed logistic regression")
    common(p)
    training_flags(p)
    p.add_argument("--input", required=True, help="detection CSV")
    p.add_argument("--output", required=True, help="model JSON")
    p.add_argument("--hash-dimension", type=int)
    p.add_argument("--positive-class-weight", type=float)
    p.set_defaults(func=cmd_train_detector)

    p = sub.add_parser("train-tagger", help="fit the averaged perceptron tagger")
    common(p)
    training_flags(p)
    p.add_argument("--input", required=True, help="stacked word/tag file")
    p.add_argument("--output", required=True, help="model JSON")
    p.add_argument("--averaged", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_train_tagger)

    p = sub.add_parser("predict", help="run a saved model over sentences")
    common(p)
    p.add_argument("--model", required=True, help="model JSON (declares its kind)")
    p.add_argument("--input", required=True, help="CSV with sentenceID,sentence columns")
    p.add_argument("--output", required=True, help="prediction CSV or tag file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("decode", help="tag file -> character-span prediction CSV")
    common(p)
    p.add_argument("--input", required=True, help="stacked word/tag predictions")
    p.add_argument(
        "--sentences", required=True, help="CSV with the original sentences, in order"
    )
    p.add_argument("--output", required=True, help="prediction CSV")
    p.add_argument("--run-selection", choices=(RUN_LONGEST, RUN_FIRST))
    p.add_argument("--max-bridge-gap", type=int)
    p.add_argument(
        "--include-boundary-punctuation",
        action=argparse.BooleanOptionalAction,
        default=None,
    )
    p.add_argument("--merge-strategy", choices=("first_piece", "majority"))
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("ensemble", help="majority-vote detection prediction CSVs")
    common(p)
    p.add_argument(
        "--input",
        action="append",
        required=True,
        help="prediction CSV (repeat per model)",
    )
    p.add_argument("--output", required=True)
    p.add_argument("--tie-policy", choices=TIE_POLICIES)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("eval", help="score predictions against gold")
    common(p)
    p.add_argument("--task", type=int, choices=(1, 2))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--output", help="report stem; writes .txt/.kv/.png beside it")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001 - anything else is a broken invariant
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
