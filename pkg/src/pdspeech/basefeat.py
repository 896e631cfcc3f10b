"""Utterance-level baseline features for the SVM classifier.

Per transition segment, 58 frame-level descriptors are computed: 12 MFCCs,
their deltas and delta-deltas, and 22 Bark-band log energies. Frames from
all of an utterance's segments are pooled and each descriptor row is
reduced by four functionals (mean, standard deviation, skewness, excess
kurtosis), giving a fixed 232-dimensional vector per utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pdspeech.corpus.manifest import UtteranceRecord
from pdspeech.dsp.cepstral import MfccConfig, bark_energies, deltas, mfcc
from pdspeech.segment import TransitionSegment

FUNCTIONAL_NAMES = ("mean", "std", "skew", "kurt")

_MOMENT_EPS = 1e-12


def descriptor_names(cfg: MfccConfig = MfccConfig()) -> list[str]:
    """Names of the 58 frame-level descriptor rows, in matrix order."""
    names = [f"mfcc{i:02d}" for i in range(1, cfg.n_coeffs + 1)]
    names += [f"dmfcc{i:02d}" for i in range(1, cfg.n_coeffs + 1)]
    names += [f"ddmfcc{i:02d}" for i in range(1, cfg.n_coeffs + 1)]
    names += [f"bark{i:02d}" for i in range(1, cfg.n_bark_bands + 1)]
    return names


def feature_names(cfg: MfccConfig = MfccConfig()) -> list[str]:
    """Names of the final feature vector: <functional>_<descriptor>."""
    return [
        f"{func}_{desc}"
        for func in FUNCTIONAL_NAMES
        for desc in descriptor_names(cfg)
    ]


def descriptor_frames(
    segments: list[TransitionSegment], cfg: MfccConfig = MfccConfig()
) -> np.ndarray:
    """Frame-level descriptor matrix pooled over segments, [58 x n_frames].

    Deltas are computed within each segment (so no regression window spans
    a segment seam) and the per-segment matrices are concatenated along the
    frame axis. Raises ValueError when the segment list is empty.
    """
    if not segments:
        raise ValueError("no transition segments to extract features from")
    blocks = []
    for seg in segments:
        coeffs = mfcc(seg.samples, cfg)
        d1 = deltas(coeffs, cfg.delta_window)
        d2 = deltas(d1, cfg.delta_window)
        bark = bark_energies(seg.samples, cfg)
        blocks.append(np.vstack([coeffs, d1, d2, bark]))
    return np.concatenate(blocks, axis=1)


def functionals(frames: np.ndarray) -> np.ndarray:
    """Reduce each descriptor row to (mean, std, skew, kurt).

    Population moments; skewness is m3 / m2^1.5 and kurtosis is
    m4 / m2^2 - 3 (so a Gaussian scores 0 and a symmetric two-point
    distribution scores -2). Rows with vanishing variance get skew and
    kurtosis 0 rather than a 0/0. Output layout is [all means, all stds,
    all skews, all kurts], matching feature_names().
    """
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"expected a [n_descriptors x n_frames] matrix, got {x.shape}")
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    m2 = np.mean(centered**2, axis=1)
    m3 = np.mean(centered**3, axis=1)
    m4 = np.mean(centered**4, axis=1)
    std = np.sqrt(m2)
    safe = m2 > _MOMENT_EPS
    skew = np.where(safe, m3 / np.where(safe, m2, 1.0) ** 1.5, 0.0)
    kurt = np.where(safe, m4 / np.where(safe, m2, 1.0) ** 2 - 3.0, 0.0)
    return np.concatenate([mean, std, skew, kurt])


@dataclass
class UtteranceFeatures:
    """The 232-dimensional baseline feature vector for one utterance."""

    vector: np.ndarray
    source: UtteranceRecord | None = None


def utterance_features(
    segments: list[TransitionSegment],
    cfg: MfccConfig = MfccConfig(),
    source: UtteranceRecord | None = None,
) -> UtteranceFeatures:
    """Pool an utterance's segments into one fixed-length feature vector."""
    vector = functionals(descriptor_frames(segments, cfg))
    if not np.all(np.isfinite(vector)):
        raise ValueError("non-finite values in utterance features")
    return UtteranceFeatures(vector=vector, source=source)
