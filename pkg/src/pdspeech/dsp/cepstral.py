"""Cepstral and critical-band analysis: MFCCs, regression deltas, Bark energies.

Frames here are left-aligned and fully inside the clip (25 ms window, 10 ms
hop by default), unlike the centered STFT framing used for spectrograms:
these features feed per-frame statistics, so partial edge frames would only
add noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from pdspeech.dsp.spectral import (
    frame_signal,
    hann_window,
    hz_to_bark,
    hz_to_mel,
    triangular_filterbank,
)


@dataclass(frozen=True)
class MfccConfig:
    """Frame-level feature parameters for the baseline feature set.

    Defaults at 16 kHz: 25 ms / 10 ms framing, 26 Mel filters reduced to 12
    cepstral coefficients (c0 dropped), 22 Bark bands, deltas over a +/-2
    frame regression window. A 2560-sample clip yields 14 frames.
    """

    sample_rate: int = 16000
    frame_len: int = 400
    hop: int = 160
    fft_len: int = 512
    n_coeffs: int = 12
    n_mel_filters: int = 26
    n_bark_bands: int = 22
    delta_window: int = 2
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10

    def __post_init__(self):
        if not (0 < self.hop <= self.frame_len <= self.fft_len):
            raise ValueError(
                f"need 0 < hop <= frame_len <= fft_len, got hop={self.hop}, "
                f"frame_len={self.frame_len}, fft_len={self.fft_len}"
            )
        if not (1 <= self.n_coeffs < self.n_mel_filters):
            raise ValueError(
                f"need 1 <= n_coeffs < n_mel_filters, got "
                f"{self.n_coeffs} vs {self.n_mel_filters}"
            )
        if self.n_bark_bands < 1:
            raise ValueError("n_bark_bands must be >= 1")
        if self.delta_window < 1:
            raise ValueError("delta_window must be >= 1")
        if not (0.0 <= self.fmin < self.fmax <= self.sample_rate / 2):
            raise ValueError(
                f"need 0 <= fmin < fmax <= sample_rate/2, got "
                f"fmin={self.fmin}, fmax={self.fmax}"
            )
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def n_bins(self) -> int:
        """One-sided spectrum size including the Nyquist bin."""
        return self.fft_len // 2 + 1


def _power_frames(clip: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    """One-sided power spectrum per frame, shape [n_bins x n_frames]."""
    frames = frame_signal(np.asarray(clip, dtype=np.float64), cfg.frame_len, cfg.hop)
    windowed = frames * hann_window(cfg.frame_len)
    return (np.abs(np.fft.rfft(windowed, n=cfg.fft_len, axis=1)) ** 2).T


@lru_cache(maxsize=8)
def _mel_bank(cfg: MfccConfig) -> np.ndarray:
    bin_hz = np.arange(cfg.n_bins) * cfg.sample_rate / cfg.fft_len
    bank = triangular_filterbank(bin_hz, cfg.n_mel_filters, cfg.fmin, cfg.fmax, hz_to_mel)
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=8)
def _bark_bank(cfg: MfccConfig) -> np.ndarray:
    bin_hz = np.arange(cfg.n_bins) * cfg.sample_rate / cfg.fft_len
    bank = triangular_filterbank(bin_hz, cfg.n_bark_bands, cfg.fmin, cfg.fmax, hz_to_bark)
    bank.setflags(write=False)
    return bank


def mfcc(clip: np.ndarray, cfg: MfccConfig = MfccConfig()) -> np.ndarray:
    """Mel-frequency cepstral coefficients, shape [n_coeffs x n_frames].

    Per frame: Hann window, one-sided power spectrum, triangular Mel
    filterbank, floored log, orthonormal DCT-II along the filter axis.
    Coefficients 1..n_coeffs are kept; c0 (overall log energy) is dropped.
    """
    log_energies = np.log(np.maximum(_mel_bank(cfg) @ _power_frames(clip, cfg), cfg.log_floor))
    coeffs = dct(log_energies, type=2, norm="ortho", axis=0)
    return coeffs[1 : cfg.n_coeffs + 1]


def bark_energies(clip: np.ndarray, cfg: MfccConfig = MfccConfig()) -> np.ndarray:
    """Log energies in n_bark_bands critical bands, shape [n_bark_bands x n_frames].

    Same framing and windowing as mfcc(); the filterbank is triangular on
    the Bark scale (Traunmueller warping).
    """
    return np.log(np.maximum(_bark_bank(cfg) @ _power_frames(clip, cfg), cfg.log_floor))


def deltas(features: np.ndarray, window: int = 2) -> np.ndarray:
    """Regression deltas along the frame axis with edge clamping.

    d[:, t] = sum_{n=1..window} n * (x[:, t+n] - x[:, t-n]) / (2 * sum n^2),
    where indices past the ends are clamped to the first/last frame. The
    output has the same shape as the input; a constant input gives zeros.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] < 1:
        raise ValueError(f"expected a [n_features x n_frames] matrix, got shape {feats.shape}")
    if window < 1:
        raise ValueError("window must be >= 1")
    n_frames = feats.shape[1]
    t = np.arange(n_frames)
    out = np.zeros_like(feats)
    for n in range(1, window + 1):
        ahead = feats[:, np.minimum(t + n, n_frames - 1)]
        behind = feats[:, np.maximum(t - n, 0)]
        out += n * (ahead - behind)
    denom = 2.0 * sum(n * n for n in range(1, window + 1))
    return out / denom
