"""Deterministic synthetic speech corpus generator.

Each utterance alternates unvoiced noise spans with voiced harmonic spans,
so it has a known set of voicing onsets and offsets. The generator writes
16-bit WAVs, a manifest CSV, and a boundaries.json sidecar with the planted
transition sample indices (the midpoint of each onset/offset crossfade).

Class contrast (the signal the classifiers are supposed to learn):
  * PD speakers get long, noisy voicing-onset crossfades; controls get
    crisp short ones (the two duration ranges are disjoint).
  * PD speakers get stronger aspiration noise inside voiced spans.
  * PD speakers get a flatter pitch contour (reduced F0 modulation).

Language contrast (what transfer learning has to bridge): a per-language
pitch multiplier, harmonic rolloff exponent, and noise coloration.

Everything is derived from numpy SeedSequences keyed by (seed, language,
speaker, utterance), so the same (spec, seed) pair reproduces the corpus
byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from pdspeech.corpus.audio import write_wav
from pdspeech.corpus.manifest import (
    SpeakerMeta,
    UtteranceRecord,
    write_manifest,
)

BOUNDARIES_FILENAME = "boundaries.json"

# per-language rendering styles, cycled by language index
_F0_MULT = (1.0, 1.1, 0.9, 1.18, 0.84)
_ROLLOFF = (1.0, 1.35, 0.75, 1.2, 0.9)
_NOISE_COLOR = (0.0, 0.45, -0.45, 0.25, -0.25)

_TASKS = ("vowels", "read", "monologue")

_VOICED_RMS = 0.20
_NOISE_RMS = 0.20
_OFFSET_RAMP_MS = 30.0


@dataclass(frozen=True)
class LanguageSpec:
    """Speaker counts for one language of the corpus."""

    name: str
    pd_speakers: int
    hc_speakers: int

    def __post_init__(self):
        if not self.name:
            raise ValueError("language name must be non-empty")
        if self.pd_speakers < 0 or self.hc_speakers < 0:
            raise ValueError("speaker counts must be >= 0")


@dataclass(frozen=True)
class SynthSpec:
    """Shape and contrast parameters of a synthetic corpus."""

    languages: tuple[LanguageSpec, ...]
    utterances_per_speaker: int = 3
    duration_range_s: tuple[float, float] = (2.0, 6.0)
    sample_rate: int = 16000
    hc_onset_ramp_ms: tuple[float, float] = (4.0, 10.0)
    pd_onset_ramp_ms: tuple[float, float] = (20.0, 40.0)
    hc_aspiration: float = 0.03
    pd_aspiration: float = 0.12
    hc_f0_wobble: tuple[float, float] = (0.025, 0.05)
    pd_f0_wobble: tuple[float, float] = (0.004, 0.012)

    def __post_init__(self):
        if not self.languages:
            raise ValueError("spec needs at least one language")
        names = [lang.name for lang in self.languages]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate language names: {names}")
        if self.utterances_per_speaker < 1:
            raise ValueError("utterances_per_speaker must be >= 1")
        lo, hi = self.duration_range_s
        if not (0.8 <= lo <= hi):
            raise ValueError(f"bad duration range {self.duration_range_s}")
        if self.sample_rate < 8000:
            raise ValueError("sample_rate must be >= 8000")
        for pair in (self.hc_onset_ramp_ms, self.pd_onset_ramp_ms,
                     self.hc_f0_wobble, self.pd_f0_wobble):
            if not (0 < pair[0] <= pair[1]):
                raise ValueError(f"bad parameter range {pair}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["languages"] = [asdict(lang) for lang in self.languages]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        kwargs = dict(d)
        kwargs["languages"] = tuple(
            LanguageSpec(**lang) for lang in kwargs.pop("languages")
        )
        for key in ("duration_range_s", "hc_onset_ramp_ms", "pd_onset_ramp_ms",
                    "hc_f0_wobble", "pd_f0_wobble"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthSpec":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


@dataclass
class _SpeakerPlan:
    meta: SpeakerMeta
    f0_base: float
    onset_ramp_ms: float
    aspiration: float
    f0_wobble: float


def _colored_noise(rng: np.random.Generator, n: int, color: float) -> np.ndarray:
    """Unit-RMS one-pole-filtered noise; color=0 is white, >0 warm, <0 bright."""
    white = rng.standard_normal(n)
    if color != 0.0:
        white = lfilter([1.0], [1.0, -color], white)
    rms = np.sqrt(np.mean(white**2))
    return white / max(rms, 1e-12)


def _speaker_plan(spec: SynthSpec, seed: int, lang_idx: int, spk_idx: int,
                  label: str, n_pd: int) -> _SpeakerPlan:
    lang = spec.languages[lang_idx]
    rng = np.random.default_rng(np.random.SeedSequence((seed, lang_idx, spk_idx)))
    within_class = spk_idx if label == "PD" else spk_idx - n_pd
    sex = "M" if within_class % 2 == 0 else "F"
    f0_lo, f0_hi = (95.0, 135.0) if sex == "M" else (165.0, 225.0)
    f0_base = rng.uniform(f0_lo, f0_hi) * _F0_MULT[lang_idx % len(_F0_MULT)]

    if label == "PD":
        age = int(rng.integers(50, 81))
        updrs3 = int(rng.integers(10, 55))
        years = round(float(rng.uniform(0.5, 14.0)), 1)
        ramp = rng.uniform(*spec.pd_onset_ramp_ms)
        aspiration = spec.pd_aspiration * rng.uniform(0.85, 1.2)
        wobble = rng.uniform(*spec.pd_f0_wobble)
    else:
        age = int(rng.integers(45, 76))
        updrs3 = None
        years = None
        ramp = rng.uniform(*spec.hc_onset_ramp_ms)
        aspiration = spec.hc_aspiration * rng.uniform(0.85, 1.2)
        wobble = rng.uniform(*spec.hc_f0_wobble)

    meta = SpeakerMeta(
        speaker_id=f"{lang.name}_{label}{spk_idx:03d}",
        label=label,
        language=lang.name,
        sex=sex,
        age=age,
        updrs3=updrs3,
        years_since_diagnosis=years,
    )
    return _SpeakerPlan(meta=meta, f0_base=f0_base, onset_ramp_ms=ramp,
                        aspiration=aspiration, f0_wobble=wobble)


def _voiced_span(rng: np.random.Generator, n: int, f0: float, wobble: float,
                 rolloff: float, sr: int) -> np.ndarray:
    """Unit-RMS harmonic span with a sinusoidally modulated pitch contour."""
    t = np.arange(n) / sr
    f_mod = rng.uniform(2.5, 5.5)
    phi0 = rng.uniform(0.0, 2.0 * np.pi)
    f0_t = f0 * (1.0 + wobble * np.sin(2.0 * np.pi * f_mod * t + phi0))
    phase = 2.0 * np.pi * np.cumsum(f0_t) / sr
    n_harm = min(24, int(7600.0 / (f0 * (1.0 + wobble))))
    amps = np.arange(1, n_harm + 1, dtype=np.float64) ** (-rolloff)
    phis = rng.uniform(0.0, 2.0 * np.pi, size=n_harm)
    v = np.zeros(n)
    for h in range(1, n_harm + 1):
        v += amps[h - 1] * np.sin(h * phase + phis[h - 1])
    rms = np.sqrt(np.mean(v**2))
    return v / max(rms, 1e-12)


def _span_lengths(rng: np.random.Generator, total: int) -> tuple[np.ndarray, np.ndarray]:
    """Alternating unvoiced/voiced span lengths summing exactly to total.

    Returns (edges, voiced_mask): edges has one entry per span boundary
    including 0 and total; voiced_mask marks the voiced spans. Layout is
    U V U V ... U with 2 to 4 voiced spans.
    """
    n_voiced = int(rng.integers(2, 5))
    raw = []
    mask = []
    for i in range(n_voiced):
        raw.append(rng.uniform(0.22, 0.45))
        mask.append(False)
        raw.append(rng.uniform(0.35, 0.70))
        mask.append(True)
    raw.append(rng.uniform(0.22, 0.45))
    mask.append(False)
    raw = np.asarray(raw)
    edges = np.round(np.concatenate([[0.0], np.cumsum(raw)]) / raw.sum() * total)
    return edges.astype(int), np.asarray(mask)


def _render_utterance(
    spec: SynthSpec, plan: _SpeakerPlan, rng: np.random.Generator, lang_idx: int
) -> tuple[np.ndarray, list[int], list[int]]:
    """One utterance plus its planted onset/offset sample indices."""
    sr = spec.sample_rate
    total = int(round(rng.uniform(*spec.duration_range_s) * sr))
    edges, voiced_mask = _span_lengths(rng, total)
    color = _NOISE_COLOR[lang_idx % len(_NOISE_COLOR)]
    rolloff = _ROLLOFF[lang_idx % len(_ROLLOFF)]

    bed = _NOISE_RMS * rng.uniform(0.9, 1.1) * _colored_noise(rng, total, color)
    voice = np.zeros(total)
    envelope = np.zeros(total)
    onsets: list[int] = []
    offsets: list[int] = []

    offset_ramp = int(round(_OFFSET_RAMP_MS / 1000.0 * sr))
    f0_utt = plan.f0_base * rng.uniform(0.96, 1.04)

    for i in range(len(voiced_mask)):
        if not voiced_mask[i]:
            continue
        start, end = int(edges[i]), int(edges[i + 1])
        span = end - start
        ramp_on = int(round(plan.onset_ramp_ms / 1000.0 * sr * rng.uniform(0.9, 1.1)))
        ramp_on = max(8, min(ramp_on, span // 3))
        ramp_off = max(8, min(offset_ramp, span // 4))

        harm = _voiced_span(rng, span, f0_utt, plan.f0_wobble, rolloff, sr)
        asp = plan.aspiration * _colored_noise(rng, span, color)
        voice[start:end] = _VOICED_RMS * (harm + asp)

        env = np.ones(span)
        env[:ramp_on] = np.arange(ramp_on) / ramp_on
        env[span - ramp_off :] = 1.0 - np.arange(ramp_off) / ramp_off
        envelope[start:end] = env

        onsets.append(start + ramp_on // 2)
        offsets.append(end - ramp_off + ramp_off // 2)

    samples = envelope * voice + (1.0 - envelope) * bed
    gain = rng.uniform(0.8, 1.0)
    return np.clip(gain * samples, -1.0, 1.0), onsets, offsets


def synth_corpus(spec: SynthSpec, seed: int, out_dir: str | Path) -> Path:
    """Generate a corpus under out_dir and return the manifest path.

    Writes wav/<language>/<speaker>/<utt>.wav files, manifest.csv with
    paths relative to out_dir, and boundaries.json mapping each relative
    wav path to its planted onset/offset sample indices. Deterministic:
    the same (spec, seed) produces identical bytes.
    """
    if seed < 0:
        raise ValueError("seed must be >= 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    records: list[UtteranceRecord] = []
    truth: dict[str, dict[str, list[int]]] = {}

    for lang_idx, lang in enumerate(spec.languages):
        n_pd = lang.pd_speakers
        labels = ["PD"] * n_pd + ["HC"] * lang.hc_speakers
        for spk_idx, label in enumerate(labels):
            plan = _speaker_plan(spec, seed, lang_idx, spk_idx, label, n_pd)
            spk_dir = out / "wav" / lang.name / plan.meta.speaker_id
            spk_dir.mkdir(parents=True, exist_ok=True)
            for utt_idx in range(spec.utterances_per_speaker):
                rng = np.random.default_rng(
                    np.random.SeedSequence((seed, lang_idx, spk_idx, utt_idx))
                )
                samples, onsets, offsets = _render_utterance(spec, plan, rng, lang_idx)
                rel = Path("wav") / lang.name / plan.meta.speaker_id / (
                    f"{plan.meta.speaker_id}_u{utt_idx:02d}.wav"
                )
                write_wav(out / rel, samples, spec.sample_rate)
                records.append(
                    UtteranceRecord(
                        path=out / rel,
                        speaker=plan.meta,
                        task=_TASKS[utt_idx % len(_TASKS)],
                    )
                )
                truth[rel.as_posix()] = {"onsets": onsets, "offsets": offsets}

    manifest_path = out / "manifest.csv"
    write_manifest(records, manifest_path, relative_to=out)
    with open(out / BOUNDARIES_FILENAME, "w", encoding="utf-8") as handle:
        json.dump(truth, handle, indent=1, sort_keys=True)
    return manifest_path


def load_boundaries(corpus_dir: str | Path) -> dict[str, dict[str, list[int]]]:
    """Read the planted-boundary sidecar written by synth_corpus."""
    with open(Path(corpus_dir) / BOUNDARIES_FILENAME, encoding="utf-8") as handle:
        return json.load(handle)
