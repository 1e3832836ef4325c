import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from skewkit.data import ClassHistogram
from skewkit.sampling import (
    effective_number_class_weights,
    epoch_indices,
    inverse_frequency_class_weights,
    oversample_indices,
    undersample_indices,
    weighted_sampler,
)

count_lists = st.lists(st.integers(1, 500), min_size=1, max_size=8)


def labels_for(counts):
    return np.repeat(np.arange(len(counts)), counts)


def test_inverse_frequency_balanced():
    assert np.allclose(inverse_frequency_class_weights([10, 10, 10, 10]), 0.25)


def test_inverse_frequency_default_priors():
    w = inverse_frequency_class_weights([60, 15, 15, 10])
    assert np.allclose(w, [0.0667, 0.2667, 0.2667, 0.4000], atol=1e-4)


def test_inverse_frequency_two_class():
    assert np.allclose(inverse_frequency_class_weights([100, 1]), [0.00990, 0.99010], atol=1e-5)


def test_inverse_frequency_absent_class():
    with pytest.raises(ValueError, match="no samples"):
        inverse_frequency_class_weights([5, 0, 3])


@given(count_lists)
def test_inverse_frequency_properties(counts):
    w = inverse_frequency_class_weights(counts)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w > 0)
    assert counts[int(np.argmax(w))] == min(counts)


def test_effective_number_beta_zero_uniform():
    assert np.allclose(effective_number_class_weights([1, 50, 700], 0.0), 1.0)


def test_effective_number_hand_case():
    w = effective_number_class_weights([1, 2], 0.9)
    assert np.allclose(w, [1.3103, 0.6897], atol=1e-3)
    assert w.mean() == pytest.approx(1.0)


def test_effective_number_rejects_beta_one():
    with pytest.raises(ValueError):
        effective_number_class_weights([3, 4], 1.0)


def test_effective_number_approaches_inverse_frequency():
    counts = [10_000, 40_000, 250_000]
    # large beta so that beta**n stays away from 0 relative to 1 - beta*n
    en = effective_number_class_weights(counts, 1 - 1e-9)
    inv = inverse_frequency_class_weights(counts)
    ratio = (en / en.sum()) / inv
    assert np.max(np.abs(ratio - 1)) < 0.05


@given(count_lists, st.floats(0, 0.9999))
def test_effective_number_monotone(counts, beta):
    w = effective_number_class_weights(counts, beta)
    order = np.argsort(counts, kind="stable")
    assert np.all(np.diff(w[order]) <= 1e-12)
    assert np.all(np.isfinite(w)) and np.all(w > 0)


def test_sampler_zero_draws(rng):
    assert weighted_sampler([0, 1], [0.5, 0.5], 0, rng).size == 0


def test_sampler_uniform_on_balanced(rng):
    labels = labels_for([50, 50, 50, 50])
    draws = weighted_sampler(labels, np.ones(4), 10_000, rng)
    freq = np.bincount(labels[draws], minlength=4) / draws.size
    sigma = np.sqrt(0.25 * 0.75 / draws.size)
    assert np.all(np.abs(freq - 0.25) < 3 * sigma)


def test_sampler_draws_with_replacement(rng):
    draws = weighted_sampler(labels_for([3, 1]), [0.5, 0.5], 100, rng)
    assert draws.size == 100 and np.all(draws < 4)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(5, 200), min_size=2, max_size=5), st.integers(0, 2**32 - 1))
def test_sampler_matches_weight_distribution(counts, seed):
    labels = labels_for(counts)
    cw = np.random.default_rng(seed).uniform(0.1, 1.0, len(counts))
    draws = weighted_sampler(labels, cw, 100_000, np.random.default_rng(seed))
    observed = np.bincount(labels[draws], minlength=len(counts))
    expected = cw * np.asarray(counts)
    expected = expected / expected.sum() * draws.size
    # fixed seeds: a genuine mismatch shows up as p ~ 0
    assert chisquare(observed, expected).pvalue > 1e-6


def test_oversample_already_balanced():
    labels = labels_for([2, 2])
    out = oversample_indices([2, 2], labels)
    assert sorted(out.tolist()) == [0, 1, 2, 3]


def test_oversample_repeats_minority():
    labels = labels_for([3, 1])
    out = oversample_indices([3, 1], labels)
    assert out.size == 6
    assert (out == 3).sum() == 3


def test_oversample_cycles_in_order():
    labels = np.array([1, 0, 1, 0, 0])
    out = oversample_indices([3, 2], labels)
    assert out.tolist() == [1, 3, 4, 0, 2, 0]


@given(count_lists)
def test_oversample_uniform(counts):
    labels = labels_for(counts)
    hist = np.bincount(labels[oversample_indices(counts, labels)], minlength=len(counts))
    assert np.all(hist == max(counts))


def test_undersample_balanced_keeps_all(rng):
    assert sorted(undersample_indices([2, 2], labels_for([2, 2]), rng).tolist()) == [0, 1, 2, 3]


def test_undersample_default_priors(rng):
    labels = labels_for([60, 15, 15, 10])
    out = undersample_indices([60, 15, 15, 10], labels, rng)
    assert out.size == 40
    assert np.bincount(labels[out]).tolist() == [10, 10, 10, 10]
    assert np.unique(out).size == out.size


def test_undersample_deterministic():
    labels = labels_for([60, 15, 15, 10])
    a = undersample_indices([60, 15, 15, 10], labels, np.random.default_rng(5))
    b = undersample_indices([60, 15, 15, 10], labels, np.random.default_rng(5))
    assert np.array_equal(a, b)


@given(count_lists, st.integers(0, 1000))
def test_undersample_uniform(counts, seed):
    labels = labels_for(counts)
    out = undersample_indices(counts, labels, np.random.default_rng(seed))
    assert np.all(np.bincount(labels[out], minlength=len(counts)) == min(counts))


@pytest.mark.parametrize("sampler", ["none", "inverse_frequency", "oversample", "undersample"])
def test_epoch_indices(sampler, rng):
    counts = [60, 15, 15, 10]
    labels = labels_for(counts)
    idx = epoch_indices(sampler, ClassHistogram(np.array(counts)), labels, rng)
    expected = {"none": 100, "inverse_frequency": 100, "oversample": 240, "undersample": 40}[sampler]
    assert idx.size == expected
    if sampler == "none":
        assert sorted(idx.tolist()) == list(range(100))


def test_epoch_indices_unknown(rng):
    with pytest.raises(ValueError):
        epoch_indices("smote", ClassHistogram(np.array([1, 1])), np.array([0, 1]), rng)
