"""Experiment drivers: preprocessing, per-language cross-validation, and
cross-language transfer.

The unit of scoring is the utterance.  The CNN scores each transition
segment and an utterance decision is the majority vote over its
segments (mean posterior on ties); the SVM scores an utterance's pooled
descriptor vector directly.  Folds split speakers, never recordings, so
every test utterance comes from a speaker the models have not seen.

Every random choice (fold dealing, weight init, batch order, dropout)
derives from the experiment seed through named seed sequences, so a
rerun with the same corpus and config reproduces results exactly.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from ..config import PipelineConfig
from ..corpus.audio import load_audio
from ..corpus.manifest import UtteranceRecord, load_manifest, records_by_language
from ..basefeat import utterance_features
from ..dsp.spectral import mel_spectrogram
from ..models.cnn import PdCnn, finetune_cnn, train_cnn
from ..models.svm import fit_svm
from ..segment import segment_clip
from .folds import FoldPlan, make_folds
from .metrics import (
    classification_metrics,
    majority_vote,
    mcc_from_counts,
    confusion_counts,
    roc_curve,
    auc_from_roc,
    summarize_folds,
)

POSITIVE_LABEL = "PD"


@dataclass
class UtteranceData:
    """Preprocessed form of one recording."""

    record: UtteranceRecord
    mel: np.ndarray        # [n_segments, n_mels, n_frames] float32
    features: np.ndarray   # pooled descriptor vector, float64

    @property
    def label(self) -> int:
        return int(self.record.speaker.label == POSITIVE_LABEL)

    @property
    def speaker_id(self) -> str:
        return self.record.speaker.speaker_id

    @property
    def language(self) -> str:
        return self.record.speaker.language


def derive_seed(root_seed: int, *parts) -> int:
    """Deterministic child seed for a named sub-task."""
    mixed = [root_seed] + [
        p if isinstance(p, int)
        else int.from_bytes(str(p).encode("utf-8")[:8].ljust(8, b"\0"), "little")
        for p in parts
    ]
    return int(np.random.SeedSequence(mixed).generate_state(1)[0])


def preprocess_utterance(record: UtteranceRecord,
                         config: PipelineConfig) -> UtteranceData | None:
    """Decode, segment, and featurize one recording.

    Returns None when no transition segment fits inside the clip, which
    the callers count and report rather than silently skip.
    """
    clip = load_audio(record)
    segments, _ = segment_clip(clip.samples, config.voicing,
                               config.segmentation, source=record)
    if not segments:
        return None
    mel = np.stack([mel_spectrogram(seg.samples, config.spectrogram).values
                    for seg in segments]).astype(np.float32)
    features = utterance_features(segments, config.mfcc, source=record).vector
    return UtteranceData(record=record, mel=mel, features=features)


def _preprocess_one(args) -> UtteranceData | None:
    return preprocess_utterance(*args)


def preprocess_corpus(records: list[UtteranceRecord], config: PipelineConfig,
                      workers: int = 1) -> tuple[list[UtteranceData], int]:
    """Preprocess every record, in manifest order.

    Returns the usable utterances and the count of dropped ones.  The
    result is identical for any worker count; parallelism only splits
    the per-file work.
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    if workers == 1:
        results = [preprocess_utterance(r, config) for r in records]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_preprocess_one,
                                    [(r, config) for r in records],
                                    chunksize=1))
    kept = [r for r in results if r is not None]
    return kept, len(records) - len(kept)


def load_corpus(corpus_dir: str | Path, config: PipelineConfig,
                workers: int = 1) -> tuple[dict[str, list[UtteranceData]], int]:
    """Read ``manifest.csv`` under ``corpus_dir`` and preprocess everything,
    grouped by language."""
    records = load_manifest(Path(corpus_dir) / "manifest.csv")
    utts, dropped = preprocess_corpus(records, config, workers=workers)
    by_language: dict[str, list[UtteranceData]] = {}
    for utt in utts:
        by_language.setdefault(utt.language, []).append(utt)
    return by_language, dropped


def _speaker_labels(utts: list[UtteranceData]) -> dict[str, int]:
    labels: dict[str, int] = {}
    for utt in utts:
        labels[utt.speaker_id] = utt.label
    return labels


def _split(utts: list[UtteranceData], plan: FoldPlan,
           fold: int) -> tuple[list[UtteranceData], list[UtteranceData]]:
    test_ids = set(plan.test_speakers(fold))
    train = [u for u in utts if u.speaker_id not in test_ids]
    test = [u for u in utts if u.speaker_id in test_ids]
    return train, test


def segment_training_set(utts: list[UtteranceData]) -> tuple[np.ndarray, np.ndarray]:
    data = np.concatenate([u.mel for u in utts])
    labels = np.concatenate([np.full(len(u.mel), u.label, dtype=np.int64)
                             for u in utts])
    return data, labels


def _score_cnn(model: PdCnn, test_utts: list[UtteranceData]) -> tuple[list, list, list]:
    """Utterance-level truths, votes, and mean posteriors."""
    y_true, y_pred, posteriors = [], [], []
    for utt in test_utts:
        probs = model.predict_proba(utt.mel)[:, 1]
        y_true.append(utt.label)
        y_pred.append(majority_vote(probs))
        posteriors.append(float(probs.mean()))
    return y_true, y_pred, posteriors


def _pool_results(y_true: list[int], y_pred: list[int],
                  scores: list[float]) -> dict:
    y_true_arr = np.asarray(y_true)
    y_pred_arr = np.asarray(y_pred)
    tp, tn, fp, fn = confusion_counts(y_true_arr, y_pred_arr)
    fpr, tpr, thresholds = roc_curve(y_true_arr, np.asarray(scores))
    return {
        "confusion": {"tp": tp, "tn": tn, "fp": fp, "fn": fn},
        "mcc": mcc_from_counts(tp, tn, fp, fn),
        "auc": auc_from_roc(fpr, tpr),
        "roc": {"fpr": fpr.tolist(), "tpr": tpr.tolist(),
                "thresholds": thresholds.tolist()},
        "n_utterances": int(y_true_arr.size),
    }


def evaluate_cnn(utts: list[UtteranceData], plan: FoldPlan,
                 config: PipelineConfig, seed: int) -> dict:
    """Speaker-disjoint cross-validation of the segment CNN."""
    fold_rows, all_true, all_pred, all_scores = [], [], [], []
    for fold in range(plan.n_folds):
        train_utts, test_utts = _split(utts, plan, fold)
        data, labels = segment_training_set(train_utts)
        model, _ = train_cnn(data, labels, config.train,
                             seed=derive_seed(seed, "cnn", fold),
                             arch=config.architecture)
        y_true, y_pred, posteriors = _score_cnn(model, test_utts)
        row = classification_metrics(np.asarray(y_true), np.asarray(y_pred))
        row["fold"] = fold
        fold_rows.append(row)
        all_true += y_true
        all_pred += y_pred
        all_scores += posteriors
    return {"folds": fold_rows, "summary": summarize_folds(fold_rows),
            "pooled": _pool_results(all_true, all_pred, all_scores)}


def evaluate_svm(utts: list[UtteranceData], plan: FoldPlan,
                 config: PipelineConfig) -> dict:
    """Speaker-disjoint cross-validation of the pooled-descriptor SVM."""
    fold_rows, all_true, all_pred, all_scores = [], [], [], []
    for fold in range(plan.n_folds):
        train_utts, test_utts = _split(utts, plan, fold)
        features = np.stack([u.features for u in train_utts])
        labels = np.array([u.label for u in train_utts])
        model = fit_svm(features, labels, config.svm)
        test_features = np.stack([u.features for u in test_utts])
        decisions = model.decision_function(test_features)
        y_true = [u.label for u in test_utts]
        y_pred = (decisions > 0).astype(int).tolist()
        # squash the margin so pooled scores live on the same (0, 1)
        # scale the CNN posteriors use
        posteriors = expit(decisions).tolist()
        row = classification_metrics(np.asarray(y_true), np.asarray(y_pred))
        row["fold"] = fold
        fold_rows.append(row)
        all_true += y_true
        all_pred += y_pred
        all_scores += posteriors
    return {"folds": fold_rows, "summary": summarize_folds(fold_rows),
            "pooled": _pool_results(all_true, all_pred, all_scores)}


def train_language_model(utts: list[UtteranceData], config: PipelineConfig,
                         seed: int) -> PdCnn:
    """Train one CNN on every utterance of a language (transfer donor)."""
    data, labels = segment_training_set(utts)
    model, _ = train_cnn(data, labels, config.train,
                         seed=derive_seed(seed, "base"),
                         arch=config.architecture)
    return model


def evaluate_transfer(base_model: PdCnn, target_utts: list[UtteranceData],
                      plan: FoldPlan, config: PipelineConfig,
                      seed: int) -> dict:
    """Fine-tuning a donor model versus training from scratch, fold by
    fold on the target language."""
    rows = {"scratch": [], "finetuned": []}
    pooled = {"scratch": ([], [], []), "finetuned": ([], [], [])}
    for fold in range(plan.n_folds):
        train_utts, test_utts = _split(target_utts, plan, fold)
        data, labels = segment_training_set(train_utts)
        scratch, _ = train_cnn(data, labels, config.train,
                               seed=derive_seed(seed, "scratch", fold),
                               arch=config.architecture)
        tuned, _ = finetune_cnn(base_model, data, labels, config.train,
                                seed=derive_seed(seed, "finetune", fold))
        for name, model in (("scratch", scratch), ("finetuned", tuned)):
            y_true, y_pred, posteriors = _score_cnn(model, test_utts)
            row = classification_metrics(np.asarray(y_true),
                                         np.asarray(y_pred))
            row["fold"] = fold
            rows[name].append(row)
            pooled[name][0].extend(y_true)
            pooled[name][1].extend(y_pred)
            pooled[name][2].extend(posteriors)
    return {
        name: {"folds": rows[name], "summary": summarize_folds(rows[name]),
               "pooled": _pool_results(*pooled[name])}
        for name in ("scratch", "finetuned")
    }


def run_individual(by_language: dict[str, list[UtteranceData]],
                   config: PipelineConfig) -> dict:
    """Within-language cross-validation of both classifiers."""
    languages = {}
    for language in sorted(by_language):
        utts = by_language[language]
        plan = make_folds(_speaker_labels(utts), config.cv_folds,
                          derive_seed(config.seed, "folds", language))
        languages[language] = {
            "n_utterances": len(utts),
            "n_speakers": len(_speaker_labels(utts)),
            "cnn": evaluate_cnn(utts, plan, config, config.seed),
            "svm": evaluate_svm(utts, plan, config),
        }
    return {"mode": "individual", "languages": languages}


def run_matrix(by_language: dict[str, list[UtteranceData]],
               config: PipelineConfig,
               checkpoint_dir: str | Path | None = None) -> dict:
    """Individual results plus every ordered cross-language transfer pair.

    One donor model per language is trained on that language's full data
    and reused for every target; with ``checkpoint_dir`` set, each donor
    is also written to ``<language>.pdxf``.
    """
    if len(by_language) < 2:
        raise ValueError("transfer needs at least two languages")
    result = run_individual(by_language, config)
    result["mode"] = "matrix"

    donors = {
        language: train_language_model(by_language[language], config,
                                       derive_seed(config.seed, language))
        for language in sorted(by_language)
    }
    if checkpoint_dir is not None:
        from ..models.checkpoint import save_checkpoint

        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
        for language, model in donors.items():
            save_checkpoint(
                model, checkpoint_dir / f"{language}.pdxf",
                provenance={"base_language": language, "seed": config.seed,
                            "epochs": config.train.epochs})

    transfer = {}
    for base in sorted(by_language):
        for target in sorted(by_language):
            if base == target:
                continue
            target_utts = by_language[target]
            plan = make_folds(_speaker_labels(target_utts), config.cv_folds,
                              derive_seed(config.seed, "folds", target))
            transfer[f"{base}->{target}"] = evaluate_transfer(
                donors[base], target_utts, plan, config, config.seed)
    result["transfer"] = transfer
    return result
