"""Command-line entry points.

Subcommands:

  synth              generate a labeled synthetic benchmark corpus
  segment            locate voiced/unvoiced transitions in one wav file
  features           export pooled descriptor vectors to CSV
  train              train a CNN on one language, save a checkpoint
  finetune           adapt a saved checkpoint to another corpus
  evaluate           within-language cross-validation, with reports
  experiment-matrix  evaluation plus every cross-language transfer pair
  report             re-render reports from an existing results.json

Exit codes: 0 on success, 1 on runtime failure (bad file, diverged
training), 2 on usage errors.  Commands that take ``--config`` accept a
JSON file with any subset of settings and also honor ``--dump-config``,
which prints the effective configuration and exits without running.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import PipelineConfig
from .corpus.audio import AudioDecodeError, load_audio, write_wav
from .corpus.manifest import (
    ManifestError,
    load_manifest,
    records_by_language,
)
from .corpus.synth import LanguageSpec, SynthSpec, synth_corpus
from .dsp.voicing import voicing
from .models.checkpoint import (
    CheckpointError,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .models.cnn import finetune_cnn
from .segment import extract_segments, find_boundaries
from .evaluation.experiment import (
    derive_seed,
    load_corpus,
    preprocess_corpus,
    run_individual,
    run_matrix,
    segment_training_set,
    train_language_model,
)
from .evaluation.report import write_report


class UsageError(Exception):
    """Bad command-line input detected after argparse."""


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file overriding any subset of settings")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective config as JSON and exit")


def _add_workers_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel processes for audio preprocessing")


def _effective_config(args: argparse.Namespace) -> PipelineConfig:
    config = (PipelineConfig.from_json_file(args.config)
              if args.config else PipelineConfig())
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")
        config = replace(config, seed=args.seed)
    return config


def _dump_requested(args: argparse.Namespace,
                    config: PipelineConfig) -> bool:
    if getattr(args, "dump_config", False):
        print(config.to_json())
        return True
    return False


def _check_workers(args: argparse.Namespace) -> int:
    workers = getattr(args, "workers", 1)
    if workers < 1:
        raise UsageError("--workers must be at least 1")
    return workers


def _parse_language_specs(text: str) -> tuple[LanguageSpec, ...]:
    specs = []
    for chunk in text.split(","):
        parts = chunk.strip().split(":")
        if len(parts) != 3:
            raise UsageError(
                f"bad language spec {chunk.strip()!r}, expected name:pd:hc")
        name, pd_count, hc_count = parts
        try:
            specs.append(LanguageSpec(name=name, pd_speakers=int(pd_count),
                                      hc_speakers=int(hc_count)))
        except ValueError as exc:
            raise UsageError(f"bad language spec {chunk.strip()!r}: {exc}")
    return tuple(specs)


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.spec is not None:
        if args.languages is not None:
            raise UsageError("--spec and --languages are mutually exclusive")
        spec = SynthSpec.from_json(args.spec)
    else:
        if args.languages is None:
            raise UsageError("one of --spec or --languages is required")
        try:
            spec = SynthSpec(
                languages=_parse_language_specs(args.languages),
                utterances_per_speaker=args.utterances,
                duration_range_s=(args.min_duration, args.max_duration),
            )
        except ValueError as exc:
            raise UsageError(str(exc))
    manifest_path = synth_corpus(spec, seed=args.seed, out_dir=args.out)
    print(f"wrote {manifest_path}")
    return 0


def _cmd_segment(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    if _dump_requested(args, config):
        return 0
    clip = load_audio(args.audio)
    track = voicing(clip.samples, config.voicing)
    boundaries = find_boundaries(track, config.segmentation)
    segments, skipped = extract_segments(clip.samples, boundaries,
                                         config.segmentation)
    payload = {
        "source": str(args.audio),
        "sample_rate": clip.sample_rate,
        "n_samples": int(clip.samples.size),
        "boundaries": [{"sample": b.sample, "kind": b.kind}
                       for b in boundaries],
        "n_segments": len(segments),
        "n_skipped_at_edges": skipped,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    if args.save_wavs is not None:
        out_dir = Path(args.save_wavs)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, seg in enumerate(segments):
            write_wav(out_dir / f"segment_{i:03d}_{seg.kind}.wav",
                      seg.samples, clip.sample_rate)
        print(f"wrote {len(segments)} segment wavs under {out_dir}")
    return 0


def _cmd_features(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    if _dump_requested(args, config):
        return 0
    workers = _check_workers(args)
    records = load_manifest(Path(args.corpus) / "manifest.csv")
    utts, dropped = preprocess_corpus(records, config, workers=workers)
    if dropped:
        print(f"dropped {dropped} utterances with no usable transitions",
              file=sys.stderr)
    if not utts:
        raise RuntimeError("no utterance produced any transition segment")
    n_features = utts[0].features.size
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speaker_id", "task", "label"]
                        + [f"f{i:03d}" for i in range(n_features)])
        for utt in utts:
            writer.writerow([utt.speaker_id, utt.record.task,
                             utt.record.speaker.label]
                            + [repr(float(v)) for v in utt.features])
    print(f"wrote {args.out} ({len(utts)} rows, {n_features} features)")
    return 0


def _language_subset(records, language: str | None):
    by_language = records_by_language(records)
    if language is None:
        if len(by_language) != 1:
            raise UsageError(
                f"manifest covers languages {sorted(by_language)}; "
                f"pick one with --language")
        return next(iter(by_language.items()))
    if language not in by_language:
        raise UsageError(f"language {language!r} not in manifest "
                         f"(has {sorted(by_language)})")
    return language, by_language[language]


def _cmd_train(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    if _dump_requested(args, config):
        return 0
    workers = _check_workers(args)
    records = load_manifest(Path(args.corpus) / "manifest.csv")
    language, subset = _language_subset(records, args.language)
    utts, dropped = preprocess_corpus(subset, config, workers=workers)
    if dropped:
        print(f"dropped {dropped} utterances with no usable transitions",
              file=sys.stderr)
    if not utts:
        raise RuntimeError("no utterance produced any transition segment")
    model = train_language_model(utts, config, config.seed)
    save_checkpoint(model, args.out,
                    provenance={"base_language": language,
                                "seed": config.seed,
                                "epochs": config.train.epochs})
    print(f"wrote {args.out}")
    return 0


def _cmd_finetune(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    if _dump_requested(args, config):
        return 0
    workers = _check_workers(args)
    if args.epochs is not None and args.epochs < 0:
        raise UsageError("--epochs must be non-negative")
    ckpt = load_checkpoint(args.base)
    base_model = model_from_checkpoint(ckpt)
    manifest_path = Path(args.target) / "manifest.csv"
    try:
        records = load_manifest(manifest_path)
    except (ManifestError, OSError) as exc:
        raise UsageError(f"--target must point at a corpus directory with "
                         f"a readable manifest.csv: {exc}")
    language, subset = _language_subset(records, args.language)
    utts, dropped = preprocess_corpus(subset, config, workers=workers)
    if dropped:
        print(f"dropped {dropped} utterances with no usable transitions",
              file=sys.stderr)
    if not utts:
        raise RuntimeError("no utterance produced any transition segment")
    data, labels = segment_training_set(utts)
    tuned, _ = finetune_cnn(base_model, data, labels, config.train,
                            seed=derive_seed(config.seed, "finetune-cli"),
                            epochs=args.epochs)
    save_checkpoint(
        tuned, args.out,
        provenance={"base_language": ckpt.provenance.get("base_language"),
                    "finetuned_on": language,
                    "finetuned_from": str(args.base),
                    "seed": config.seed,
                    "epochs": (config.train.finetune_epochs
                               if args.epochs is None else args.epochs)})
    print(f"wrote {args.out}")
    return 0


def _run_and_report(args: argparse.Namespace, matrix: bool) -> int:
    config = _effective_config(args)
    if _dump_requested(args, config):
        return 0
    workers = _check_workers(args)
    by_language, dropped = load_corpus(args.corpus, config, workers=workers)
    if matrix:
        result = run_matrix(by_language, config,
                            checkpoint_dir=args.checkpoints)
    else:
        result = run_individual(by_language, config)
    result["n_dropped"] = dropped
    for path in write_report(result, args.out):
        print(f"wrote {path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    return _run_and_report(args, matrix=False)


def _cmd_matrix(args: argparse.Namespace) -> int:
    return _run_and_report(args, matrix=True)


def _cmd_report(args: argparse.Namespace) -> int:
    with open(args.results, encoding="utf-8") as fh:
        try:
            result = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RuntimeError(f"{args.results} is not valid JSON: {exc}")
    if "languages" not in result:
        raise RuntimeError(f"{args.results} does not look like an "
                           f"experiment results file")
    for path in write_report(result, args.out):
        print(f"wrote {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdspeech",
        description="Speech-based Parkinson's disease classification "
                    "pipeline: transition segmentation, spectrogram CNN, "
                    "descriptor SVM, cross-language transfer.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--languages", default=None,
                   help="comma list of name:pd_speakers:hc_speakers")
    p.add_argument("--utterances", type=int, default=3,
                   help="recordings per speaker")
    p.add_argument("--min-duration", type=float, default=2.0)
    p.add_argument("--max-duration", type=float, default=6.0)
    p.add_argument("--spec", type=Path, default=None,
                   help="JSON corpus spec (overrides the shape flags)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("segment",
                       help="locate voiced/unvoiced transitions in a wav")
    p.add_argument("audio", type=Path)
    p.add_argument("--out", type=Path, default=None,
                   help="write the boundary JSON here instead of stdout")
    p.add_argument("--save-wavs", type=Path, default=None,
                   help="directory for the extracted segment wavs")
    _add_config_options(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("features",
                       help="export pooled descriptor vectors to CSV")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_options(p)
    _add_workers_option(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train",
                       help="train a CNN on one language, save .pdxf")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--language", default=None)
    p.add_argument("--out", type=Path, required=True)
    _add_config_options(p)
    _add_workers_option(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("finetune",
                       help="adapt a checkpoint to a target corpus")
    p.add_argument("--base", type=Path, required=True,
                   help="existing .pdxf checkpoint")
    p.add_argument("--target", type=Path, required=True,
                   help="corpus directory with manifest.csv")
    p.add_argument("--language", default=None)
    p.add_argument("--epochs", type=int, default=None,
                   help="override the configured finetune epoch count")
    p.add_argument("--out", type=Path, required=True)
    _add_config_options(p)
    _add_workers_option(p)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("evaluate",
                       help="within-language cross-validation report")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_options(p)
    _add_workers_option(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("experiment-matrix",
                       help="evaluation plus all transfer pairs")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--checkpoints", type=Path, default=None,
                   help="also save one donor checkpoint per language here")
    _add_config_options(p)
    _add_workers_option(p)
    p.set_defaults(func=_cmd_matrix)

    p = sub.add_parser("report",
                       help="re-render reports from a results.json")
    p.add_argument("--results", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, KeyError, ManifestError,
            AudioDecodeError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
