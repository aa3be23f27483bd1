import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegcolor import features
from eegcolor.dsp import band_power_array, multichannel_power
from eegcolor.errors import DegenerateWindow, MissingColumn, SeriesTooShort, ZeroVariance
from eegcolor.features import (FeatureMatrix, WindowConfig, ZScore, assemble,
                               correlation_features, epoch_band_series, hjorth,
                               shannon_entropy, skewness, slide_windows,
                               spectral_features, statistical_features)
from eegcolor.ingest import EpochedTrial
from eegcolor.preprocess import apply_flags, flag_channels


def test_window_starts_200ms():
    cfg = WindowConfig(200)
    assert (cfg.length, cfg.step) == (51, 25)
    wins = slide_windows(np.zeros((8, 512)), cfg)
    starts = [w.start for w in wins]
    assert starts == list(range(0, 462, 25))
    assert starts[-1] <= 461 and starts[-1] + 25 > 461


def test_window_equal_to_series_and_too_short():
    cfg = WindowConfig(1000)
    assert len(slide_windows(np.zeros((8, 256)), cfg)) == 1
    with pytest.raises(SeriesTooShort):
        slide_windows(np.zeros((8, 100)), WindowConfig(2000))


@settings(deadline=None)
@given(st.integers(4, 600), st.sampled_from([100, 200, 500, 1000]))
def test_window_count_formula(n, ms):
    cfg = WindowConfig(ms)
    L = cfg.length
    expected = (n - L) // (L // 2) + 1 if n >= L else 0
    assert cfg.count(n) == expected
    if n >= L:
        wins = slide_windows(np.arange(8 * n, dtype=float).reshape(8, n), cfg)
        assert len(wins) == expected
        assert all(w.series.shape == (8, L) for w in wins)


def test_spectral_constant_and_hemispheres():
    out = spectral_features(np.full((8, 20), 2.5))
    np.testing.assert_array_equal(out[:8], 2.5)
    np.testing.assert_array_equal(out[8:], 0.0)
    w = np.empty((8, 20))
    w[[0, 1, 4, 5]] = 2.0  # left: TP9, AF7 in both bands
    w[[2, 3, 6, 7]] = 1.0
    np.testing.assert_array_equal(spectral_features(w)[16:], [1.0, 1.0])


def test_correlation_identical_and_negated():
    s = np.random.default_rng(0).normal(size=30)
    np.testing.assert_allclose(correlation_features(np.tile(s, (8, 1))), 1.0)
    w = np.random.default_rng(1).normal(size=(8, 30))
    w[1] = -w[0]
    assert correlation_features(w)[features.PAIRS.index((0, 1))] == pytest.approx(-1.0)


def test_correlation_zero_variance_is_zero():
    w = np.random.default_rng(2).normal(size=(8, 30))
    w[4] = 1.0
    out = correlation_features(w)
    for k, (i, j) in enumerate(features.PAIRS):
        if 4 in (i, j):
            assert out[k] == 0.0


def test_statistical_count_and_symmetry():
    s = np.r_[np.linspace(-1, 1, 21), 0.5]
    assert skewness(np.r_[-s, s]) == pytest.approx(0.0, abs=1e-15)
    w = np.random.default_rng(3).normal(size=(8, 40))
    assert statistical_features(w).shape == (40,)
    w[0] = 0.0
    with pytest.raises(DegenerateWindow):
        statistical_features(w)


def test_hjorth_sine():
    t = np.arange(256) / 256.0
    mob, comp = hjorth(np.sin(2 * np.pi * 5 * t))
    assert mob == pytest.approx(2 * np.pi * 5, rel=0.02)
    assert comp == pytest.approx(1.0, rel=0.02)


def test_hjorth_noise_complexity_above_one():
    for seed in range(100):
        _, comp = hjorth(np.random.default_rng(seed).normal(size=256))
        assert comp > 1.0


def test_hjorth_constant():
    with pytest.raises(ZeroVariance):
        hjorth(np.ones(10))


def test_entropy_examples():
    assert shannon_entropy(np.full(40, 7.0)) == 0.0
    assert shannon_entropy(np.repeat(np.arange(16.0), 5)) == pytest.approx(4.0, abs=1e-12)
    y = np.random.default_rng(4).normal(size=200)
    counts, _ = np.histogram(y, bins=16, range=(y.min(), y.max()))
    p = counts[counts > 0] / 200
    assert shannon_entropy(y) == pytest.approx(-(p * np.log2(p)).sum(), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2 ** 31))
def test_scale_equivariance(a, seed):
    w = np.random.default_rng(seed).gamma(2.0, 1.0, size=(8, 51))
    f1, f2 = features.window_features(w), features.window_features(a * w)
    np.testing.assert_allclose(f2[:8], a * f1[:8], rtol=1e-9)
    np.testing.assert_allclose(f2[8:16], a * a * f1[8:16], rtol=1e-9)
    # correlation, kurtosis, skewness, mobility, complexity
    keep = np.r_[18:46, 46:62, 70:86]
    np.testing.assert_allclose(f2[keep], f1[keep], rtol=1e-9, atol=1e-9)


def _epoch(seed=0, label="Red", idx=0):
    rng = np.random.default_rng(seed)
    return EpochedTrial(label, rng.normal(0, 10, (4, 512)), "s01", "t1", idx)


def test_flags_applied_after_wavelet():
    ep = _epoch()
    seg = np.array(ep.channel_segments)
    seg[1, 200:212] += 400.0
    ep = EpochedTrial("Red", seg, "s01", "t1", 0)
    got = epoch_band_series(ep)
    full = band_power_array(multichannel_power(seg)).reshape(8, -1)
    mask = flag_channels(seg)
    expected, kept = apply_flags(full, mask)
    assert mask.flags.any()
    np.testing.assert_array_equal(got, expected)
    # removing samples first and transforming afterwards gives different power
    shortened = multichannel_power(seg[:, kept])
    assert not np.allclose(band_power_array(shortened).reshape(8, -1), expected)


def test_assemble_shape_order_and_determinism():
    eps = [_epoch(1, "Red", 0), _epoch(2, "Blue", 1), _epoch(1, "Red", 2)]
    fm = assemble(eps, WindowConfig(500), artifact_threshold=None)
    per = WindowConfig(500).count(512)
    assert fm.X.shape == (3 * per, 86)
    assert fm.labels.tolist() == [0] * per + [2] * per + [0] * per
    np.testing.assert_array_equal(fm.X[:per], fm.X[2 * per:])


def test_zscore_fit_on_training_only():
    X = np.random.default_rng(5).normal(3, 2, (50, 86))
    z = ZScore().fit(X[:40])
    tr = z.transform(X[:40])
    assert np.abs(tr.mean(axis=0)).max() < 1e-10
    assert np.abs(tr.std(axis=0) - 1).max() < 1e-10
    np.testing.assert_array_equal(z.transform(X[40:]), (X[40:] - z.mean) / z.std)


def test_feature_matrix_csv(tmp_path):
    fm = assemble([_epoch(3), _epoch(4, "Green", 1)], WindowConfig(1000))
    path = tmp_path / "f.csv"
    features.write_feature_matrix(fm, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:86] == list(features.FEATURE_NAMES)
    assert header[86:90] == ["label", "subject", "trial", "window"]
    back = features.read_feature_matrix(path)
    np.testing.assert_array_equal(back.X, fm.X)
    assert back.labels.tolist() == fm.labels.tolist()
    path.write_text("a,b\n1,2\n")
    with pytest.raises(MissingColumn):
        features.read_feature_matrix(path)


def test_feature_matrix_metadata_length():
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((2, 86)), [0], ["s"], ["t"], [0])
