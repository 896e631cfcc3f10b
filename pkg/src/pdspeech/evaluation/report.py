"""Rendering of experiment results to JSON, markdown, and CSV.

All output is deterministic: keys are sorted, floats are written with
``repr``, and nothing records a timestamp or hostname, so rerunning the
same experiment produces byte-identical files.  Non-finite floats (the
ROC's leading +inf threshold) become ``null`` in JSON; the CSVs keep
them as ``inf``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def to_jsonable(obj):
    """Recursively convert numpy containers and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def result_to_json(result: dict) -> str:
    return json.dumps(to_jsonable(result), indent=2, sort_keys=True) + "\n"


def _mean_std(summary: dict, key: str) -> str:
    return f"{summary[f'{key}_mean']:.1f} ({summary[f'{key}_std']:.1f})"


def _block_row(label: str, variant: str, block: dict) -> str:
    s = block["summary"]
    p = block["pooled"]
    return (f"| {label} | {variant} | {_mean_std(s, 'accuracy')} "
            f"| {_mean_std(s, 'sensitivity')} | {_mean_std(s, 'specificity')} "
            f"| {p['mcc']:.3f} | {p['auc']:.3f} |")


_TABLE_HEADER = ("| {0} | model | accuracy % | sensitivity % | specificity % "
                 "| MCC | AUC |\n|---|---|---|---|---|---|---|")


def markdown_summary(result: dict) -> str:
    """Human-readable tables; fold metrics appear as ``mean (std)``."""
    lines = ["# Experiment results", ""]
    lines.append(f"Mode: {result['mode']}")
    if "n_dropped" in result:
        lines.append(f"Utterances dropped (no usable transitions): "
                     f"{result['n_dropped']}")
    lines += ["", "## Within-language cross-validation", "",
              _TABLE_HEADER.format("language")]
    for language, entry in sorted(result["languages"].items()):
        for model in ("cnn", "svm"):
            lines.append(_block_row(language, model, entry[model]))
    if result.get("transfer"):
        lines += ["", "## Cross-language transfer", "",
                  _TABLE_HEADER.format("pair")]
        for pair, entry in sorted(result["transfer"].items()):
            for variant in ("scratch", "finetuned"):
                lines.append(_block_row(pair, variant, entry[variant]))
    lines.append("")
    return "\n".join(lines)


def _roc_csv(pooled: dict) -> str:
    roc = pooled["roc"]
    rows = ["fpr,tpr,threshold"]
    for fpr, tpr, thr in zip(roc["fpr"], roc["tpr"], roc["thresholds"]):
        thr = float("inf") if thr is None else thr
        rows.append(f"{fpr!r},{tpr!r},{thr!r}")
    return "\n".join(rows) + "\n"


def write_report(result: dict, out_dir: str | Path) -> list[Path]:
    """Write results.json, summary.md, and one ROC CSV per pooled curve.

    Returns the written paths, sorted.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "results.json"
    path.write_text(result_to_json(result), encoding="utf-8")
    written.append(path)

    path = out_dir / "summary.md"
    path.write_text(markdown_summary(result), encoding="utf-8")
    written.append(path)

    for language, entry in sorted(result["languages"].items()):
        for model in ("cnn", "svm"):
            path = out_dir / f"roc_{language}_{model}.csv"
            path.write_text(_roc_csv(entry[model]["pooled"]), encoding="utf-8")
            written.append(path)
    for pair, entry in sorted(result.get("transfer", {}).items()):
        base, target = pair.split("->")
        for variant in ("scratch", "finetuned"):
            path = out_dir / f"roc_{base}-to-{target}_{variant}.csv"
            path.write_text(_roc_csv(entry[variant]["pooled"]),
                            encoding="utf-8")
            written.append(path)
    return sorted(written)
