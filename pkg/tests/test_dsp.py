import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from eegcolor import dsp
from eegcolor.dsp import (MorletParams, PowerSpectrogram, band_power, cwt_power, fft, ifft,
                          morlet_wavelet)
from eegcolor.errors import (BandNotCovered, InsufficientSupport, NonPowerOfTwoLength,
                             SegmentTooShort)

T512 = np.arange(512) / 256.0


def test_fft_impulse_and_constant():
    np.testing.assert_allclose(fft([1, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(fft([1, 1, 1, 1]), [4, 0, 0, 0], atol=1e-15)


def test_fft_rejects_odd_length():
    with pytest.raises(NonPowerOfTwoLength):
        fft(np.zeros(6))


def test_fft_random_256_vs_direct_sum():
    x = np.random.default_rng(0).normal(size=256)
    k = np.arange(256)
    ref = np.array([np.sum(x * np.exp(-2j * np.pi * ((m * k) % 256) / 256)) for m in k])
    assert np.abs(fft(x) - ref).max() < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10).flatmap(
    lambda p: arrays(np.float64, 2 ** p, elements=st.floats(-1e3, 1e3))))
def test_parseval_and_inverse(x):
    X = fft(x)
    e = np.sum(np.abs(x) ** 2)
    assert abs(e - np.sum(np.abs(X) ** 2) / x.size) <= 1e-9 * max(e, 1.0)
    np.testing.assert_allclose(ifft(X).real, x, atol=1e-9 * (1 + np.abs(x).max()))


def test_morlet_center_symmetry_and_energy():
    p = MorletParams(10.0)
    w = morlet_wavelet(p)
    mid = w.size // 2
    assert w[mid].real == pytest.approx(p.amplitude, rel=1e-15)
    assert w[mid].imag == 0.0
    np.testing.assert_allclose(np.abs(w), np.abs(w[::-1]), rtol=1e-13)
    # fine grid for the quadrature: the 256 Hz grid is too coarse for 1e-6
    fine = morlet_wavelet(MorletParams(10.0, sample_rate=20000.0,
                                       support_half_width=8 * p.sigma_t))
    energy = np.trapezoid(np.abs(fine) ** 2, dx=1 / 20000.0)
    assert energy == pytest.approx(1.0, abs=1e-6)


def test_short_support_rejected():
    with pytest.raises(InsufficientSupport):
        morlet_wavelet(MorletParams(10.0, support_half_width=0.01))


def test_zero_signal_zero_power():
    assert not cwt_power(np.zeros(512)).power.any()


def test_ten_hz_peak():
    spec = cwt_power(np.sin(2 * np.pi * 10 * T512))
    assert spec.freqs[np.argmax(spec.power.mean(axis=1))] == 10.0


def test_fifteen_hz_direct_convolution():
    x = np.random.default_rng(1).normal(size=256)
    p = MorletParams(15.0)
    w = morlet_wavelet(p)
    ref = np.abs(np.convolve(x, w)[p.half_samples:p.half_samples + 256]) ** 2
    got = cwt_power(x, [15.0]).power[0]
    assert np.abs(got - ref).max() / ref.max() < 1e-6


def test_segment_too_short():
    with pytest.raises(SegmentTooShort):
        cwt_power(np.zeros(100))


def test_padding_invariance():
    x = np.random.default_rng(2).normal(size=512)
    a = cwt_power(x).power
    b = cwt_power(x, nfft=4096).power
    assert np.abs(a - b).max() / a.max() < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 50.0))
def test_power_scales_quadratically(a):
    x = np.random.default_rng(3).normal(size=512)
    base = cwt_power(x).power
    np.testing.assert_allclose(cwt_power(a * x).power, a * a * base,
                               rtol=1e-9, atol=1e-12 * (1 + a * a) * base.max())


def test_band_power_of_ones():
    spec = PowerSpectrogram(dsp.DEFAULT_FREQS, np.ones((23, 7)))
    bp = band_power(spec)
    np.testing.assert_array_equal(bp.alpha, 1.0)
    np.testing.assert_array_equal(bp.beta, 1.0)


def test_band_power_sines():
    bp10 = band_power(cwt_power(np.sin(2 * np.pi * 10 * T512)))
    bp25 = band_power(cwt_power(np.sin(2 * np.pi * 25 * T512)))
    assert bp10.alpha.mean() > 5 * bp10.beta.mean()
    assert bp25.beta.mean() > bp25.alpha.mean()


def test_band_not_covered():
    with pytest.raises(BandNotCovered):
        band_power(PowerSpectrogram([8.0, 9.0, 10.0], np.ones((3, 4))))


def test_spectrogram_csv(tmp_path):
    spec = PowerSpectrogram([8.0, 9.0], [[0.1, 1 / 3], [2.5e-7, 4.0]])
    path = tmp_path / "s.csv"
    dsp.emit_spectrogram(spec, path)
    assert len(path.read_text().splitlines()) == 3
    back = dsp.read_spectrogram(path)
    np.testing.assert_array_equal(back.power, spec.power)
    np.testing.assert_array_equal(back.freqs, spec.freqs)


def test_pipeline_spectrogram_rows(tmp_path):
    spec = cwt_power(np.random.default_rng(4).normal(size=512))
    path = tmp_path / "p.csv"
    dsp.emit_spectrogram(spec, path)
    assert len(path.read_text().splitlines()) == 24
