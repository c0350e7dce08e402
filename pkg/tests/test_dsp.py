import struct

import numpy as np
import pytest

from xmaudio import dsp
from xmaudio.errors import BandError, FormatError, TooShortError, UnsupportedCodecError


def write_wav(path, samples, rate, channels=1, codec="pcm16"):
    samples = np.asarray(samples)
    if codec == "pcm16":
        pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
        data = pcm.tobytes()
        fmt = struct.pack("<IHHIIHH", 16, 1, channels, rate,
                          rate * 2 * channels, 2 * channels, 16)
    else:
        data = samples.astype("<f4").tobytes()
        fmt = struct.pack("<IHHIIHH", 16, 3, channels, rate,
                          rate * 4 * channels, 4 * channels, 32)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE")
        fh.write(b"fmt " + fmt)
        fh.write(b"data" + struct.pack("<I", len(data)) + data)


def sine(freq, rate, seconds=1.0, amp=0.5):
    t = np.arange(int(rate * seconds)) / rate
    return amp * np.sin(2 * np.pi * freq * t)


class TestLoadWav:
    def test_all_zero_mono(self, tmp_path):
        path = tmp_path / "z.wav"
        write_wav(path, np.zeros(1000), 16000)
        buf = dsp.load_wav(path, 16000)
        assert buf.sample_rate == 16000
        np.testing.assert_array_equal(buf.samples, np.zeros(1000))

    def test_stereo_downmix_cancels(self, tmp_path):
        path = tmp_path / "s.wav"
        interleaved = np.empty(2000)
        interleaved[0::2] = 0.5
        interleaved[1::2] = -0.5
        write_wav(path, interleaved, 16000, channels=2)
        buf = dsp.load_wav(path, 16000)
        assert np.abs(buf.samples).max() < 1e-4  # 16-bit quantization noise only

    def test_resample_preserves_peak_hz(self, tmp_path):
        path = tmp_path / "r.wav"
        write_wav(path, sine(400, 8000, 1.0), 8000)
        buf = dsp.load_wav(path, 16000)
        mag = dsp.stft_magnitude(buf, dsp.StftParams())
        peak_bins = mag.argmax(axis=1)
        expected = round(400 * 1024 / 16000)
        assert np.all(np.abs(peak_bins - expected) <= 1)

    def test_float32_codec(self, tmp_path):
        path = tmp_path / "f.wav"
        write_wav(path, sine(100, 16000, 0.2), 16000, codec="float32")
        buf = dsp.load_wav(path, 16000)
        np.testing.assert_allclose(buf.samples, sine(100, 16000, 0.2), atol=1e-6)

    def test_non_pcm_codec(self, tmp_path):
        path = tmp_path / "ulaw.wav"
        data = b"\0" * 100
        fmt = struct.pack("<IHHIIHH", 16, 7, 1, 8000, 8000, 1, 8)
        with open(path, "wb") as fh:
            fh.write(b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE")
            fh.write(b"fmt " + fmt)
            fh.write(b"data" + struct.pack("<I", len(data)) + data)
        with pytest.raises(UnsupportedCodecError):
            dsp.load_wav(path, 16000)

    def test_malformed_riff(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"not a wav file at all")
        with pytest.raises(FormatError):
            dsp.load_wav(path, 16000)

    def test_save_load_round_trip(self, tmp_path):
        buf = dsp.AudioBuffer(sine(440, 16000, 0.5), 16000)
        path = tmp_path / "rt.wav"
        dsp.save_wav(buf, path)
        out = dsp.load_wav(path, 16000)
        assert np.abs(out.samples - buf.samples).max() <= 1.0 / 32768


class TestStft:
    def test_dc_concentration(self):
        buf = dsp.AudioBuffer(np.ones(4000), 16000)
        mag = dsp.stft_magnitude(buf, dsp.StftParams())
        peak = mag[:, 0]
        assert (mag[:, 2:] < 1e-3 * peak[:, None]).all()

    def test_440hz_peak_bin_28(self):
        buf = dsp.AudioBuffer(sine(440, 16000), 16000)
        mag = dsp.stft_magnitude(buf, dsp.StftParams(n_fft=1024, hop=160))
        assert (mag.argmax(axis=1) == 28).all()

    def test_parseval_per_frame(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-1, 1, 4000)
        p = dsp.StftParams()
        spec = dsp.stft(dsp.AudioBuffer(samples, 16000), p)
        win = 0.5 * (1 - np.cos(2 * np.pi * np.arange(p.n_fft) / p.n_fft))
        for k in range(spec.shape[0]):
            frame = samples[k * p.hop : k * p.hop + p.n_fft] * win
            lhs = (np.abs(spec[k, 0]) ** 2 + np.abs(spec[k, -1]) ** 2
                   + 2 * np.sum(np.abs(spec[k, 1:-1]) ** 2))
            rhs = p.n_fft * np.sum(frame ** 2)  # time-domain oracle
            assert abs(lhs - rhs) / rhs < 1e-6

    def test_frame_count_formula(self):
        p = dsp.StftParams()
        for n in (1024, 1025, 160000, 12345):
            buf = dsp.AudioBuffer(np.zeros(n), 16000)
            assert dsp.stft_magnitude(buf, p).shape[0] == 1 + (n - p.n_fft) // p.hop

    def test_too_short(self):
        with pytest.raises(TooShortError):
            dsp.stft_magnitude(dsp.AudioBuffer(np.zeros(100), 16000), dsp.StftParams())

    def test_scaling_linearity(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-0.2, 0.2, 3000)
        p = dsp.StftParams()
        m1 = dsp.stft_magnitude(dsp.AudioBuffer(x, 16000), p)
        m3 = dsp.stft_magnitude(dsp.AudioBuffer(3 * x, 16000), p)
        np.testing.assert_allclose(m3, 3 * m1, rtol=1e-6, atol=1e-12)

    def test_non_negative(self):
        rng = np.random.default_rng(2)
        mag = dsp.stft_magnitude(
            dsp.AudioBuffer(rng.uniform(-1, 1, 2048), 16000), dsp.StftParams())
        assert (mag >= 0).all()


class TestMelFilterbank:
    def test_mel_of_8000(self):
        assert dsp.hz_to_mel(8000.0) == pytest.approx(2840.02, abs=0.01)

    def test_mel_of_zero(self):
        assert dsp.hz_to_mel(0.0) == 0.0

    def test_coverage(self):
        fb = dsp.mel_filterbank(16000, 1024, 64, 0.0, 8000.0)
        edges = dsp.mel_to_hz(np.linspace(dsp.hz_to_mel(0.0), dsp.hz_to_mel(8000.0), 66))
        bin_freqs = np.arange(513) * 16000 / 1024
        inside = (bin_freqs > edges[1]) & (bin_freqs < edges[-2])
        assert (fb.sum(axis=0)[inside] > 0).all()

    def test_rows_nonzero_nonnegative(self):
        fb = dsp.mel_filterbank(16000, 1024, 64, 0.0, 8000.0)
        assert (fb >= 0).all()
        assert (fb.sum(axis=1) > 0).all()

    def test_invalid_band(self):
        with pytest.raises(BandError):
            dsp.mel_filterbank(16000, 1024, 64, 4000.0, 2000.0)


class TestLogMel:
    def test_silence_floor(self):
        buf = dsp.AudioBuffer(np.zeros(4000), 16000)
        mel = dsp.log_mel(buf, dsp.StftParams(), 64, 0.0, 8000.0)
        np.testing.assert_array_equal(mel.values, np.log(1e-5))

    def test_scaling_log_law(self):
        buf = dsp.AudioBuffer(sine(440, 16000, 0.5, amp=0.4), 16000)
        p = dsp.StftParams()
        m1 = dsp.log_mel(buf, p, 64, 0.0, 8000.0).values
        buf2 = dsp.AudioBuffer(2 * buf.samples, 16000)
        m2 = dsp.log_mel(buf2, p, 64, 0.0, 8000.0).values
        unfloored = (m1 > np.log(1e-5)) & (m2 > np.log(1e-5))
        np.testing.assert_allclose(m2[unfloored] - m1[unfloored], np.log(4), atol=1e-6)

    def test_10s_frame_count(self):
        buf = dsp.AudioBuffer(np.zeros(160000), 16000)
        mel = dsp.log_mel(buf, dsp.StftParams(), 64, 0.0, 8000.0)
        assert mel.values.shape == (994, 64)

    def test_floor_everywhere(self):
        rng = np.random.default_rng(3)
        buf = dsp.AudioBuffer(rng.uniform(-1, 1, 8000), 16000)
        mel = dsp.log_mel(buf, dsp.StftParams(), 64, 0.0, 8000.0)
        assert (mel.values >= np.log(1e-5) - 1e-12).all()


class TestGriffinLim:
    def test_zero_spectrogram(self):
        p = dsp.StftParams()
        out = dsp.griffin_lim(np.zeros((10, 513)), 4, seed=0, params=p, sample_rate=16000)
        np.testing.assert_array_equal(out.samples, 0.0)

    def test_sine_target_error(self):
        p = dsp.StftParams()
        mag = dsp.stft_magnitude(dsp.AudioBuffer(sine(440, 16000), 16000), p)
        out = dsp.griffin_lim(mag, 32, seed=1, params=p, sample_rate=16000)
        rec = dsp.stft_magnitude(out, p)
        err = np.linalg.norm(rec - mag) / np.linalg.norm(mag)
        assert err < 0.10

    def test_error_non_increasing(self):
        p = dsp.StftParams()
        mag = dsp.stft_magnitude(dsp.AudioBuffer(sine(440, 16000, 0.3), 16000), p)
        errs = []
        for iters in range(1, 17):
            out = dsp.griffin_lim(mag, iters, seed=1, params=p, sample_rate=16000)
            rec = dsp.stft_magnitude(out, p)
            errs.append(np.linalg.norm(rec - mag) / np.linalg.norm(mag))
        assert all(b <= a + 1e-9 for a, b in zip(errs, errs[1:]))

    def test_deterministic(self):
        p = dsp.StftParams()
        mag = dsp.stft_magnitude(dsp.AudioBuffer(sine(220, 16000, 0.2), 16000), p)
        a = dsp.griffin_lim(mag, 8, seed=5, params=p, sample_rate=16000)
        b = dsp.griffin_lim(mag, 8, seed=5, params=p, sample_rate=16000)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_mel_spectrogram_input(self):
        buf = dsp.AudioBuffer(sine(440, 16000, 0.5), 16000)
        mel = dsp.log_mel(buf, dsp.StftParams(), 64, 0.0, 8000.0)
        out = dsp.griffin_lim(mel, 4, seed=0)
        assert out.sample_rate == 16000
        assert len(out.samples) > 0


class TestMelPersistence:
    def test_round_trip(self, tmp_path):
        buf = dsp.AudioBuffer(sine(440, 16000, 0.5), 16000)
        mel = dsp.log_mel(buf, dsp.StftParams(), 64, 0.0, 8000.0)
        dsp.save_melspec(mel, tmp_path / "m.emb1", tmp_path / "m.json")
        out = dsp.load_melspec(tmp_path / "m.emb1", tmp_path / "m.json")
        np.testing.assert_allclose(out.values, mel.values, atol=1e-6)
        assert out.params == mel.params
        assert out.n_mels == 64 and out.sample_rate == 16000


def test_stft_params_validation():
    with pytest.raises(FormatError):
        dsp.StftParams(n_fft=1000)  # not a power of two
    with pytest.raises(FormatError):
        dsp.StftParams(n_fft=1024, hop=2048)
