"""Frame-level voicing detection by normalized autocorrelation.

A frame is voiced when its normalized autocorrelation has a strong peak in
the pitch lag range and the frame carries non-negligible energy relative to
the whole clip. Frames are centered (like the STFT framing) so a detected
run boundary localizes the underlying transition without a systematic lag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pdspeech.dsp.spectral import frame_signal_centered


@dataclass(frozen=True)
class VoicingConfig:
    """Detector parameters: 32 ms frames on a 10 ms hop at 16 kHz, pitch
    search between 75 and 400 Hz, correlation peak threshold 0.45, and an
    energy gate at 1% of the clip RMS."""

    sample_rate: int = 16000
    frame_len: int = 512
    hop: int = 160
    f0_min: float = 75.0
    f0_max: float = 400.0
    peak_threshold: float = 0.45
    energy_ratio: float = 0.01

    def __post_init__(self):
        if not (0 < self.hop <= self.frame_len):
            raise ValueError(f"need 0 < hop <= frame_len, got {self.hop}, {self.frame_len}")
        if not (0 < self.f0_min < self.f0_max <= self.sample_rate / 2):
            raise ValueError(f"bad pitch range [{self.f0_min}, {self.f0_max}]")
        if self.max_lag >= self.frame_len:
            raise ValueError(
                f"frame_len {self.frame_len} too short for f0_min {self.f0_min} "
                f"(needs lags up to {self.max_lag})"
            )
        if not (0.0 < self.peak_threshold < 1.0):
            raise ValueError("peak_threshold must be in (0, 1)")
        if self.energy_ratio < 0:
            raise ValueError("energy_ratio must be >= 0")

    @property
    def min_lag(self) -> int:
        """Smallest searched lag (highest pitch)."""
        return int(np.ceil(self.sample_rate / self.f0_max))

    @property
    def max_lag(self) -> int:
        """Largest searched lag (lowest pitch)."""
        return int(np.floor(self.sample_rate / self.f0_min))


@dataclass
class VoicingTrack:
    """Per-frame voicing decisions for one clip.

    flags[t] tells whether the frame centered on sample t*frame_hop is
    voiced; f0[t] is the detected pitch in Hz there, NaN where unvoiced.
    """

    flags: np.ndarray
    f0: np.ndarray
    frame_len: int
    frame_hop: int

    @property
    def n_frames(self) -> int:
        return self.flags.size


def _normalized_autocorr(frames: np.ndarray, min_lag: int, max_lag: int) -> np.ndarray:
    """Normalized cross-correlation r[t, lag] for lags min_lag..max_lag.

    For a zero-mean frame y of length T,
        r(lag) = sum_i y[i] y[i+lag] /
                 sqrt(sum_{i < T-lag} y[i]^2 * sum_{i >= lag} y[i]^2),
    which stays in [-1, 1] and equals 1 for an exactly periodic frame.
    """
    n_frames, frame_len = frames.shape
    y = frames - frames.mean(axis=1, keepdims=True)
    nfft = 1 << int(np.ceil(np.log2(2 * frame_len)))
    spec = np.fft.rfft(y, n=nfft, axis=1)
    raw = np.fft.irfft(spec * np.conj(spec), n=nfft, axis=1)[:, : max_lag + 1]

    energy = y**2
    csum = np.cumsum(energy, axis=1)
    total = csum[:, -1][:, None]
    lags = np.arange(min_lag, max_lag + 1)
    head = csum[:, frame_len - lags - 1]          # sum over i < T - lag
    tail = total - csum[:, lags - 1]              # sum over i >= lag
    denom = np.sqrt(np.maximum(head * tail, 1e-300))
    return raw[:, min_lag : max_lag + 1] / denom


def _fundamental_lag(corr: np.ndarray, peak: np.ndarray, fraction: float = 0.9) -> np.ndarray:
    """Column offset of the pitch-period lag per frame.

    A plain argmax locks onto multi-period lags when the true period is a
    non-integer number of samples (an integer multiple of it can align
    better). Instead take the first lag cluster reaching `fraction` of the
    global peak and return the local maximum inside it.
    """
    n_frames, n_lags = corr.shape
    mask = corr >= fraction * peak[:, None]
    first = mask.argmax(axis=1)
    window = np.minimum(first[:, None] + np.arange(8)[None, :], n_lags - 1)
    local = np.take_along_axis(corr, window, axis=1).argmax(axis=1)
    return window[np.arange(n_frames), local]


def voicing(clip: np.ndarray, cfg: VoicingConfig = VoicingConfig()) -> VoicingTrack:
    """Classify every frame of the clip as voiced or unvoiced.

    Frames are centered on multiples of cfg.hop (reflect-padded at the
    edges), so flags has len(clip)//hop + 1 entries. A frame is voiced when
    its autocorrelation peak over the pitch lag range reaches
    cfg.peak_threshold and its RMS is at least cfg.energy_ratio times the
    clip RMS. Silence therefore never comes out voiced. f0 is the pitch of
    the winning lag for voiced frames and NaN elsewhere.
    """
    x = np.asarray(clip, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sample array")
    if x.size < cfg.frame_len:
        raise ValueError(
            f"clip of {x.size} samples is shorter than one {cfg.frame_len}-sample frame"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("clip contains non-finite samples")

    frames = frame_signal_centered(x, cfg.frame_len, cfg.hop)
    corr = _normalized_autocorr(frames, cfg.min_lag, cfg.max_lag)
    peak = corr.max(axis=1)
    best_lag = cfg.min_lag + _fundamental_lag(corr, peak)

    frame_rms = np.sqrt(np.mean(frames**2, axis=1))
    clip_rms = np.sqrt(np.mean(x**2))
    flags = (peak >= cfg.peak_threshold) & (frame_rms >= cfg.energy_ratio * clip_rms)
    if clip_rms == 0.0:
        flags[:] = False

    f0 = np.where(flags, cfg.sample_rate / best_lag, np.nan)
    return VoicingTrack(flags=flags, f0=f0, frame_len=cfg.frame_len, frame_hop=cfg.hop)
