import numpy as np
import pytest
from numpy.testing import assert_allclose

from pdspeech.dsp.spectral import (
    MelSpectrogram,
    SpectrogramConfig,
    bark_to_hz,
    frame_signal,
    frame_signal_centered,
    hann_window,
    hz_to_bark,
    hz_to_mel,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    stft,
)

CFG = SpectrogramConfig()


class TestScales:
    def test_mel_anchor_1000hz(self):
        # 1000 Hz sits at ~1000 mel by construction of the formula
        assert abs(hz_to_mel(1000.0) - 1000.0) < 0.1

    def test_mel_roundtrip(self):
        f = np.linspace(20.0, 8000.0, 64)
        assert_allclose(mel_to_hz(hz_to_mel(f)), f, rtol=1e-12)

    def test_mel_monotone(self):
        f = np.linspace(0.0, 8000.0, 512)
        assert np.all(np.diff(hz_to_mel(f)) > 0)

    def test_bark_anchor_1000hz(self):
        assert abs(hz_to_bark(1000.0) - 8.5274) < 1e-3

    def test_bark_roundtrip(self):
        f = np.linspace(20.0, 8000.0, 64)
        assert_allclose(bark_to_hz(hz_to_bark(f)), f, rtol=1e-10)

    def test_bark_monotone(self):
        f = np.linspace(0.0, 8000.0, 512)
        assert np.all(np.diff(hz_to_bark(f)) > 0)


class TestFraming:
    def test_left_aligned_count_and_content(self):
        x = np.arange(1000.0)
        frames = frame_signal(x, 400, 160)
        assert frames.shape == ((1000 - 400) // 160 + 1, 400)
        assert_allclose(frames[0], x[:400])
        assert_allclose(frames[1], x[160:560])

    def test_left_aligned_too_short(self):
        with pytest.raises(ValueError):
            frame_signal(np.zeros(399), 400, 160)

    def test_centered_count_law(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(64, 5000))
            frames = frame_signal_centered(rng.standard_normal(n), 512, 160)
            assert frames.shape == (n // 160 + 1, 512)

    def test_centered_frame_is_centered(self):
        # frame t covers padded[t*hop : t*hop+frame_len]; with reflect pad of
        # frame_len//2 the window is centered on sample t*hop of the clip
        x = np.arange(2000.0)
        frames = frame_signal_centered(x, 512, 160)
        assert frames[2, 256] == x[2 * 160]

    def test_centered_too_short(self):
        with pytest.raises(ValueError):
            frame_signal_centered(np.zeros(63), 512, 64)


class TestStft:
    def test_shape_2560(self):
        # the pipeline-standard transition segment: 2560 samples -> 41 frames
        spec = stft(np.random.default_rng(0).standard_normal(2560), CFG)
        assert spec.shape == (256, 41)

    def test_shape_law_random_lengths(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(CFG.hop, 8000))
            spec = stft(rng.standard_normal(n), CFG)
            assert spec.shape == (256, n // CFG.hop + 1)

    def test_tone_peaks_at_expected_bin(self):
        # 1000 Hz at 16 kHz with a 512-point FFT falls on bin 32 exactly
        t = np.arange(4000) / CFG.sample_rate
        spec = np.abs(stft(np.sin(2 * np.pi * 1000.0 * t), CFG))
        interior = spec[:, 5:-5]
        assert np.all(interior.argmax(axis=0) == 32)

    def test_parseval_per_frame(self):
        # one-sided identity with the dropped Nyquist term restored:
        # fft_len * sum((frame*w)**2) == |X0|^2 + 2*sum|Xk|^2 + |Xnyq|^2
        rng = np.random.default_rng(2)
        x = rng.standard_normal(2000)
        spec = stft(x, CFG)
        frames = frame_signal_centered(x, CFG.window_len, CFG.hop)
        windowed = frames * hann_window(CFG.window_len)
        full = np.fft.rfft(windowed, n=CFG.fft_len, axis=1)
        nyq = np.abs(full[:, -1]) ** 2
        lhs = CFG.fft_len * np.sum(windowed**2, axis=1)
        rhs = (
            np.abs(spec[0]) ** 2
            + 2.0 * np.sum(np.abs(spec[1:]) ** 2, axis=0)
            + nyq
        )
        assert_allclose(rhs, lhs, rtol=1e-9)

    def test_rejects_empty_and_short(self):
        with pytest.raises(ValueError):
            stft(np.zeros(0), CFG)
        with pytest.raises(ValueError):
            stft(np.zeros(CFG.hop - 1), CFG)

    def test_rejects_2d(self):
        with pytest.raises(ValueError):
            stft(np.zeros((10, 10)), CFG)


class TestMelFilterbank:
    def test_shape_and_range(self):
        bank = mel_filterbank(CFG)
        assert bank.shape == (80, 256)
        assert np.all(bank >= 0.0)
        assert np.all(bank <= 1.0)

    def test_rows_nonempty(self):
        bank = mel_filterbank(CFG)
        assert np.all(bank.sum(axis=1) > 0)

    def test_interior_coverage(self):
        # between the first and last filter centers every bin is covered
        bank = mel_filterbank(CFG)
        bin_hz = np.arange(CFG.n_bins) * CFG.sample_rate / CFG.fft_len
        edges = np.linspace(hz_to_mel(CFG.fmin), hz_to_mel(CFG.fmax), CFG.n_mels + 2)
        lo, hi = mel_to_hz(edges[1]), mel_to_hz(edges[-2])
        interior = (bin_hz >= lo) & (bin_hz <= hi)
        assert np.all(bank.sum(axis=0)[interior] > 1e-9)

    def test_triangle_peak_location(self):
        # a pure tone at a filter's center frequency excites that filter most
        edges = np.linspace(hz_to_mel(CFG.fmin), hz_to_mel(CFG.fmax), CFG.n_mels + 2)
        center_hz = float(mel_to_hz(edges[40]))
        t = np.arange(8000) / CFG.sample_rate
        mel = mel_spectrogram(np.sin(2 * np.pi * center_hz * t), CFG)
        assert abs(int(np.argmax(mel.values.mean(axis=1))) - 39) <= 1


class TestMelSpectrogram:
    def test_shape_80x41(self):
        mel = mel_spectrogram(np.random.default_rng(3).standard_normal(2560), CFG)
        assert isinstance(mel, MelSpectrogram)
        assert mel.shape == (80, 41)

    def test_zero_clip_hits_log_floor(self):
        mel = mel_spectrogram(np.zeros(2560), CFG)
        assert_allclose(mel.values, np.log(CFG.log_floor))

    def test_amplitude_scaling_shifts_log(self):
        # power scales by 4 when amplitude scales by 2, so log shifts by log 4
        x = np.random.default_rng(4).standard_normal(2560)
        a = mel_spectrogram(x, CFG).values
        b = mel_spectrogram(2.0 * x, CFG).values
        mask = a > np.log(CFG.log_floor) + 1.0
        assert_allclose((b - a)[mask], np.log(4.0), atol=1e-9)

    def test_values_finite(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            mel = mel_spectrogram(rng.standard_normal(3000) * 1e-6, CFG)
            assert np.all(np.isfinite(mel.values))


class TestConfigValidation:
    def test_bad_hop(self):
        with pytest.raises(ValueError):
            SpectrogramConfig(hop=0)

    def test_window_longer_than_fft(self):
        with pytest.raises(ValueError):
            SpectrogramConfig(window_len=1024, fft_len=512)

    def test_bad_band(self):
        with pytest.raises(ValueError):
            SpectrogramConfig(fmin=5000.0, fmax=4000.0)
        with pytest.raises(ValueError):
            SpectrogramConfig(fmax=9000.0)
