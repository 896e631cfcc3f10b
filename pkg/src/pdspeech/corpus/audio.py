"""WAV decoding, 16-bit PCM encoding, and polyphase resampling.

Every clip entering the pipeline goes through load_audio(): decode, mix to
mono, resample to 16 kHz, clamp to [-1, 1]. Only 16-bit PCM WAV input is
supported; anything else raises AudioDecodeError rather than guessing.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy import signal

from pdspeech.corpus.manifest import UtteranceRecord

TARGET_SAMPLE_RATE = 16000


class AudioDecodeError(RuntimeError):
    """The file is not a readable 16-bit PCM WAV."""


@dataclass
class AudioClip:
    """Mono float samples in [-1, 1] at a known rate."""

    samples: np.ndarray
    sample_rate: int
    source: UtteranceRecord | None = None

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Decode a 16-bit PCM WAV to float64 in [-1, 1].

    Returns (samples[n, channels], sample_rate). Raises AudioDecodeError on
    non-PCM encodings, other bit depths, or truncated payloads.
    """
    try:
        with wave.open(str(path), "rb") as reader:
            if reader.getcomptype() != "NONE":
                raise AudioDecodeError(
                    f"{path}: unsupported encoding {reader.getcomptype()!r} (want PCM)"
                )
            width = reader.getsampwidth()
            if width != 2:
                raise AudioDecodeError(
                    f"{path}: unsupported sample width {8 * width} bits (want 16)"
                )
            n_channels = reader.getnchannels()
            rate = reader.getframerate()
            n_frames = reader.getnframes()
            payload = reader.readframes(n_frames)
    except wave.Error as exc:
        raise AudioDecodeError(f"{path}: not a valid WAV file ({exc})") from exc
    except EOFError as exc:
        raise AudioDecodeError(f"{path}: truncated WAV file") from exc

    if len(payload) != n_frames * n_channels * 2:
        raise AudioDecodeError(
            f"{path}: truncated payload ({len(payload)} bytes for "
            f"{n_frames} frames x {n_channels} channels)"
        )
    if n_frames == 0:
        raise AudioDecodeError(f"{path}: empty WAV (no audio frames)")
    data = np.frombuffer(payload, dtype="<i2").reshape(n_frames, n_channels)
    return data.astype(np.float64) / 32768.0, rate


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Encode mono float samples as 16-bit PCM, clamping to [-1, 1]."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("write_wav expects mono samples")
    ints = np.round(np.clip(x, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(sample_rate)
        writer.writeframes(ints.tobytes())


def _design_lowpass(up: int, down: int, taps_per_phase: int = 64, beta: float = 8.6) -> np.ndarray:
    """Kaiser-windowed sinc anti-aliasing filter for a rate change of up/down.

    The filter runs at the intermediate rate (input rate * up); its cutoff is
    the tighter of the two Nyquist limits. Odd length keeps it symmetric so
    the polyphase stage can compensate the group delay exactly.
    """
    n_taps = 2 * (taps_per_phase * max(up, down) // 2) + 1
    cutoff = 1.0 / max(up, down)
    return signal.firwin(n_taps, cutoff, window=("kaiser", beta), fs=2.0)


def resample(x: np.ndarray, rate_in: int, rate_out: int) -> np.ndarray:
    """Polyphase resampling with a Kaiser windowed-sinc filter.

    Identity (a copy) when the rates already match. Output length is
    ceil(n * rate_out / rate_in).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("resample expects mono samples")
    if rate_in <= 0 or rate_out <= 0:
        raise ValueError("sample rates must be positive")
    if rate_in == rate_out:
        return x.copy()
    g = gcd(rate_in, rate_out)
    up, down = rate_out // g, rate_in // g
    # resample_poly scales a user-provided filter by `up` itself
    h = _design_lowpass(up, down)
    return signal.resample_poly(x, up, down, window=h)


def load_audio(source: UtteranceRecord | str | Path) -> AudioClip:
    """Decode an utterance or a bare wav path to mono 16 kHz floats in
    [-1, 1].

    Multi-channel input is averaged across channels before resampling.
    """
    record = source if isinstance(source, UtteranceRecord) else None
    path = record.path if record is not None else Path(source)
    samples, rate = read_wav(path)
    mono = samples.mean(axis=1)
    out = resample(mono, rate, TARGET_SAMPLE_RATE)
    out = np.clip(out, -1.0, 1.0)
    if not np.all(np.isfinite(out)):
        raise AudioDecodeError(f"{path}: decoded audio contains non-finite values")
    return AudioClip(samples=out, sample_rate=TARGET_SAMPLE_RATE, source=record)
