import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from eegcolor.errors import MaskLengthMismatch, SegmentTooShort
from eegcolor.preprocess import (FlagMask, apply_flags, flag_artifacts, flag_channels,
                                 window_variances)


def test_constant_signal_never_flagged():
    mask = flag_artifacts(np.full(512, 3.7), threshold=1e-9)
    assert not mask.flags.any()


def test_spike_window_flagged():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 1, 512)
    x[120:132] += 1000.0 * np.sign(np.arange(12) % 2 - 0.5)
    mask = flag_artifacts(x, 12, threshold=100.0)
    assert np.flatnonzero(mask.flags).tolist() == [10]


def test_tiny_threshold_flags_everything():
    x = np.random.default_rng(1).normal(size=512)
    assert flag_artifacts(x, 12, threshold=1e-12).flags.all()


def test_window_variance_oracle():
    x = np.random.default_rng(2).normal(size=100)
    ref = [np.var(x[i:i + 12]) for i in range(0, 100, 12)]
    np.testing.assert_allclose(window_variances(x, 12), ref, rtol=0, atol=1e-12)
    assert len(ref) == 9  # trailing partial window of 4 samples is kept


def test_auto_threshold_is_median_multiple():
    x = np.random.default_rng(3).normal(size=512)
    mask = flag_artifacts(x, 12)
    assert mask.threshold == pytest.approx(5 * np.median(window_variances(x, 12)))


def test_short_segment():
    with pytest.raises(SegmentTooShort):
        flag_artifacts(np.zeros(5), 12)


def _mask(flags, n, L=12):
    return FlagMask(L, np.asarray(flags, dtype=bool), 1.0, n)


def test_apply_identity_and_empty():
    p = np.arange(48.0)
    out, kept = apply_flags(p, _mask([0, 0, 0, 0], 48))
    np.testing.assert_array_equal(out, p)
    out, kept = apply_flags(p, _mask([1, 1, 1, 1], 48))
    assert out.size == 0 and kept.size == 0


def test_first_window_removed():
    p = np.arange(50.0)
    out, kept = apply_flags(p, _mask([1, 0, 0, 0, 0], 50))
    assert out.size == 50 - 12
    assert kept[0] == 12


def test_mask_mismatch():
    with pytest.raises(MaskLengthMismatch):
        apply_flags(np.zeros(30), _mask([0, 0, 0, 0, 0], 50))


def test_channel_union():
    x = np.random.default_rng(4).normal(size=(4, 96))
    x[2, 24:36] *= 500
    mask = flag_channels(x, 12, threshold=50.0)
    assert np.flatnonzero(mask.flags).tolist() == [2]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(12, 200), elements=st.floats(-100, 100)),
       st.floats(-1e3, 1e3), st.integers(2, 20))
def test_offset_invariance(x, offset, L):
    if x.size < L:
        return
    a = flag_artifacts(x, L, threshold=25.0)
    b = flag_artifacts(x + offset, L, threshold=25.0)
    va, vb = window_variances(x, L), window_variances(x + offset, L)
    # windows whose variance sits on the threshold can flip by rounding
    close = np.abs(va - 25.0) < 1e-6 * (1 + abs(offset)) ** 2
    assert np.array_equal(a.flags[~close], b.flags[~close])
    np.testing.assert_allclose(va, vb, atol=1e-7 * (1 + abs(offset)) ** 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=20), st.integers(0, 11))
def test_retained_indices_increase(flags, extra):
    n = 12 * (len(flags) - 1) + extra + 1
    n = min(n, 12 * len(flags))
    out, kept = apply_flags(np.arange(float(n)), _mask(flags, n))
    assert np.all(np.diff(kept) > 0)
    np.testing.assert_array_equal(out, kept.astype(float))
