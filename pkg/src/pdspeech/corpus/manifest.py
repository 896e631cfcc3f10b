"""Corpus manifests: CSV schema, parsing, and speaker grouping.

A manifest is a CSV with the exact header

    path,speaker_id,label,language,task,sex,age,updrs3,years_since_diagnosis

one row per utterance. Relative paths are resolved against the manifest's
directory on load. Clinical fields (updrs3, years_since_diagnosis) are
optional and only legal for PD speakers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

MANIFEST_FIELDS = [
    "path",
    "speaker_id",
    "label",
    "language",
    "task",
    "sex",
    "age",
    "updrs3",
    "years_since_diagnosis",
]

LABELS = ("PD", "HC")
SEXES = ("M", "F")


class ManifestError(ValueError):
    """Malformed manifest: bad header, bad row, or inconsistent speaker data."""


@dataclass(frozen=True)
class SpeakerMeta:
    """Per-speaker metadata shared by all of that speaker's utterances."""

    speaker_id: str
    label: str
    language: str
    sex: str
    age: int
    updrs3: int | None = None
    years_since_diagnosis: float | None = None


@dataclass(frozen=True)
class UtteranceRecord:
    """One manifest row: an audio file plus its speaker and recording task."""

    path: Path
    speaker: SpeakerMeta
    task: str


def _parse_row(fields: list[str], lineno: int) -> tuple[str, SpeakerMeta, str]:
    if len(fields) != len(MANIFEST_FIELDS):
        raise ManifestError(
            f"line {lineno}: expected {len(MANIFEST_FIELDS)} fields, got {len(fields)}"
        )
    path, speaker_id, label, language, task, sex, age, updrs3, years = (
        f.strip() for f in fields
    )
    if not path:
        raise ManifestError(f"line {lineno}: empty path")
    if not speaker_id:
        raise ManifestError(f"line {lineno}: empty speaker_id")
    if label not in LABELS:
        raise ManifestError(f"line {lineno}: unknown label {label!r} (expected PD or HC)")
    if not language:
        raise ManifestError(f"line {lineno}: empty language")
    if not task:
        raise ManifestError(f"line {lineno}: empty task")
    if sex not in SEXES:
        raise ManifestError(f"line {lineno}: unknown sex {sex!r} (expected M or F)")
    try:
        age_val = int(age)
    except ValueError:
        raise ManifestError(f"line {lineno}: age {age!r} is not an integer") from None
    if age_val <= 0:
        raise ManifestError(f"line {lineno}: age must be positive, got {age_val}")

    updrs3_val: int | None = None
    years_val: float | None = None
    if updrs3:
        try:
            updrs3_val = int(updrs3)
        except ValueError:
            raise ManifestError(f"line {lineno}: updrs3 {updrs3!r} is not an integer") from None
        if updrs3_val < 0:
            raise ManifestError(f"line {lineno}: updrs3 must be >= 0")
    if years:
        try:
            years_val = float(years)
        except ValueError:
            raise ManifestError(
                f"line {lineno}: years_since_diagnosis {years!r} is not a number"
            ) from None
        if years_val < 0:
            raise ManifestError(f"line {lineno}: years_since_diagnosis must be >= 0")
    if label == "HC" and (updrs3_val is not None or years_val is not None):
        raise ManifestError(
            f"line {lineno}: clinical fields are only legal for PD speakers "
            f"(speaker {speaker_id!r} is HC)"
        )

    meta = SpeakerMeta(
        speaker_id=speaker_id,
        label=label,
        language=language,
        sex=sex,
        age=age_val,
        updrs3=updrs3_val,
        years_since_diagnosis=years_val,
    )
    return path, meta, task


def load_manifest(path: str | Path) -> list[UtteranceRecord]:
    """Parse a manifest CSV into utterance records.

    All rows of one speaker must agree on every speaker-level field; they
    end up sharing a single SpeakerMeta instance. Relative audio paths are
    resolved against the manifest's directory. Raises ManifestError on any
    schema violation, naming the offending line.
    """
    manifest_path = Path(path)
    base = manifest_path.parent
    with open(manifest_path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError("empty manifest: missing header") from None
        if [h.strip() for h in header] != MANIFEST_FIELDS:
            raise ManifestError(
                f"bad header: expected {','.join(MANIFEST_FIELDS)!r}, "
                f"got {','.join(header)!r}"
            )

        speakers: dict[str, SpeakerMeta] = {}
        records: list[UtteranceRecord] = []
        for lineno, fields in enumerate(reader, start=2):
            if not fields:
                continue
            raw_path, meta, task = _parse_row(fields, lineno)
            seen = speakers.setdefault(meta.speaker_id, meta)
            if seen != meta:
                raise ManifestError(
                    f"line {lineno}: speaker {meta.speaker_id!r} disagrees with an "
                    f"earlier row on speaker-level fields"
                )
            audio_path = Path(raw_path)
            if not audio_path.is_absolute():
                audio_path = base / audio_path
            records.append(UtteranceRecord(path=audio_path, speaker=seen, task=task))
    if not records:
        raise ManifestError("manifest has a header but no rows")
    return records


def write_manifest(
    records: list[UtteranceRecord], path: str | Path, relative_to: str | Path | None = None
) -> None:
    """Write records as a manifest CSV.

    Paths are written as stored, or relative to `relative_to` when given
    (the usual choice is the manifest's own directory, which keeps the
    corpus relocatable).
    """
    out_path = Path(path)
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(MANIFEST_FIELDS)
        for rec in records:
            audio_path = rec.path
            if relative_to is not None:
                audio_path = audio_path.relative_to(relative_to)
            s = rec.speaker
            writer.writerow(
                [
                    audio_path.as_posix(),
                    s.speaker_id,
                    s.label,
                    s.language,
                    rec.task,
                    s.sex,
                    s.age,
                    "" if s.updrs3 is None else s.updrs3,
                    "" if s.years_since_diagnosis is None else s.years_since_diagnosis,
                ]
            )


def unique_speakers(records: list[UtteranceRecord]) -> list[SpeakerMeta]:
    """Distinct speakers in first-appearance order."""
    seen: dict[str, SpeakerMeta] = {}
    for rec in records:
        seen.setdefault(rec.speaker.speaker_id, rec.speaker)
    return list(seen.values())


def records_by_language(records: list[UtteranceRecord]) -> dict[str, list[UtteranceRecord]]:
    """Split records into per-language lists, preserving order."""
    out: dict[str, list[UtteranceRecord]] = {}
    for rec in records:
        out.setdefault(rec.speaker.language, []).append(rec)
    return out
