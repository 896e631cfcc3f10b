"""Spectral analysis primitives: framing, STFT, and warped-scale filterbanks.

Everything here is a pure function of its inputs. The pipeline runs at a
fixed 16 kHz rate; configs carry the rate so the invariants can be checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def hz_to_mel(f):
    """Mel scale: mel(f) = 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def hz_to_bark(f):
    """Traunmueller's Bark approximation: 26.81 * f / (1960 + f) - 0.53."""
    f = np.asarray(f, dtype=np.float64)
    return 26.81 * f / (1960.0 + f) - 0.53


def bark_to_hz(z):
    z = np.asarray(z, dtype=np.float64)
    return 1960.0 * (z + 0.53) / (26.28 - z)


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window of length n."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class SpectrogramConfig:
    """STFT / Mel-spectrogram parameters.

    Defaults give the pipeline-standard analysis at 16 kHz: 16 ms window,
    4 ms hop, 512-point FFT (256 retained bins), 80 Mel filters over
    0-8 kHz. A 2560-sample clip then yields an 80x41 Mel spectrogram.
    """

    sample_rate: int = 16000
    window_len: int = 256
    hop: int = 64
    fft_len: int = 512
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 8000.0
    log_floor: float = 1e-10

    def __post_init__(self):
        if not (0 < self.hop <= self.window_len <= self.fft_len):
            raise ValueError(
                f"need 0 < hop <= window_len <= fft_len, got "
                f"hop={self.hop}, window_len={self.window_len}, fft_len={self.fft_len}"
            )
        if self.n_mels < 2:
            raise ValueError(f"n_mels must be >= 2, got {self.n_mels}")
        if not (0.0 <= self.fmin < self.fmax <= self.sample_rate / 2):
            raise ValueError(
                f"need 0 <= fmin < fmax <= sample_rate/2, got "
                f"fmin={self.fmin}, fmax={self.fmax}, sample_rate={self.sample_rate}"
            )
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def n_bins(self) -> int:
        """Retained STFT bins: one-sided spectrum with the Nyquist bin dropped."""
        return self.fft_len // 2


@dataclass
class MelSpectrogram:
    """Log Mel energies, shape [n_mels x n_frames]."""

    values: np.ndarray
    config: SpectrogramConfig

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def frame_signal(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Left-aligned frames fully inside the signal.

    Frame t covers x[t*hop : t*hop + frame_len]; returns [n_frames, frame_len]
    with n_frames = (len(x) - frame_len) // hop + 1.
    """
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sample array")
    if x.size < frame_len:
        raise ValueError(
            f"clip of {x.size} samples is shorter than one {frame_len}-sample frame"
        )
    n_frames = (x.size - frame_len) // hop + 1
    idx = hop * np.arange(n_frames)[:, None] + np.arange(frame_len)[None, :]
    return x[idx]


def frame_signal_centered(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Centered frames: frame t is centered on sample t*hop.

    The signal is reflect-padded by frame_len//2 on each side, so
    n_frames = len(x) // hop + 1 for any len(x) >= hop.
    """
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sample array")
    if x.size < hop:
        raise ValueError(f"clip of {x.size} samples is shorter than one hop ({hop})")
    half = frame_len // 2
    padded = np.pad(x, half, mode="reflect")
    n_frames = x.size // hop + 1
    idx = hop * np.arange(n_frames)[:, None] + np.arange(frame_len)[None, :]
    return padded[idx]


def stft(clip: np.ndarray, cfg: SpectrogramConfig = SpectrogramConfig()) -> np.ndarray:
    """Short-time Fourier transform, complex matrix [n_bins x n_frames].

    Centered framing: the clip is reflect-padded by window_len/2 on both
    sides and frame t starts at t*hop in the padded signal, giving
    n_frames = len(clip)//hop + 1. Each frame is Hann-windowed, zero-padded
    to fft_len, and the one-sided spectrum is truncated to fft_len/2 bins
    (the Nyquist bin is dropped).

    Per-frame energy bookkeeping (Parseval): with X_k the returned bins and
    X_nyq the dropped Nyquist coefficient,
        fft_len * sum((frame * window)**2)
            == |X_0|**2 + 2*sum_{k=1}^{n_bins-1} |X_k|**2 + |X_nyq|**2.
    """
    x = np.asarray(clip, dtype=np.float64)
    frames = frame_signal_centered(x, cfg.window_len, cfg.hop)
    frames = frames * hann_window(cfg.window_len)
    spec = np.fft.rfft(frames, n=cfg.fft_len, axis=1)[:, : cfg.n_bins]
    return spec.T


def triangular_filterbank(
    bin_freqs_hz: np.ndarray,
    n_filters: int,
    fmin: float,
    fmax: float,
    warp,
) -> np.ndarray:
    """Triangular filters uniform on a warped frequency scale.

    Band edges are n_filters + 2 points uniform in warp-space between fmin
    and fmax; filter i rises over [p_i, p_{i+1}] and falls over
    [p_{i+1}, p_{i+2}], piecewise-linear in warp-space (so adjacent filters
    overlap by half a band). Rows peak at 1 and are zero outside their
    support. Shape [n_filters x len(bin_freqs_hz)].
    """
    points = np.linspace(warp(fmin), warp(fmax), n_filters + 2)
    z = np.atleast_1d(warp(bin_freqs_hz))[None, :]
    lo = points[:-2, None]
    mid = points[1:-1, None]
    hi = points[2:, None]
    rising = (z - lo) / (mid - lo)
    falling = (hi - z) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


@lru_cache(maxsize=8)
def mel_filterbank(cfg: SpectrogramConfig = SpectrogramConfig()) -> np.ndarray:
    """Mel filterbank over the STFT bins, shape [n_mels x n_bins].

    Centers are uniform on the Mel scale between fmin and fmax. Cached per
    config; treat the returned matrix as read-only.
    """
    bin_hz = np.arange(cfg.n_bins) * cfg.sample_rate / cfg.fft_len
    bank = triangular_filterbank(bin_hz, cfg.n_mels, cfg.fmin, cfg.fmax, hz_to_mel)
    bank.setflags(write=False)
    return bank


def mel_spectrogram(
    clip: np.ndarray, cfg: SpectrogramConfig = SpectrogramConfig()
) -> MelSpectrogram:
    """Log Mel spectrogram: log(max(F @ |STFT|^2, log_floor)).

    A pipeline-standard 2560-sample transition segment yields shape 80x41.
    """
    power = np.abs(stft(clip, cfg)) ** 2
    energies = mel_filterbank(cfg) @ power
    values = np.log(np.maximum(energies, cfg.log_floor))
    return MelSpectrogram(values=values, config=cfg)
