import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewkit import data as D
from skewkit.data import (
    AugmentConfig,
    BandTriple,
    Dataset,
    DatasetError,
    MultiSpectralImage,
    NormalizationStats,
    SyntheticSpec,
)


def random_dataset(rng, n=6, C=10, H=5, W=5, K=4, labels=None):
    labels = rng.integers(0, K, n) if labels is None else np.asarray(labels)
    return Dataset(rng.normal(size=(len(labels), C, H, W)).astype(np.float32), labels, K, D.DEFAULT_BAND_IDS[:C])


# -- types -----------------------------------------------------------------


def test_image_band_count_invariant():
    with pytest.raises(DatasetError):
        MultiSpectralImage(np.zeros((3, 4, 4)), ("B1", "B2"))


def test_image_non_finite():
    px = np.zeros((1, 2, 2))
    px[0, 1, 1] = np.nan
    with pytest.raises(DatasetError):
        MultiSpectralImage(px, ("B1",))


def test_dataset_label_range(rng):
    with pytest.raises(DatasetError, match="label 7"):
        random_dataset(rng, labels=[0, 7, 1])


def test_dataset_length_mismatch(rng):
    with pytest.raises(DatasetError):
        Dataset(np.zeros((3, 1, 2, 2)), [0, 1], 2, ("B1",))


def test_dataset_default_provenance_and_immutability(rng):
    ds = random_dataset(rng)
    assert ds.provenance_tags() == ["real"] * len(ds)
    with pytest.raises(ValueError):
        ds.pixels[0, 0, 0, 0] = 1.0


def test_band_triple_parse():
    assert BandTriple.parse("B6,B5,B2").bands == ("B6", "B5", "B2")
    assert BandTriple.parse("6-5-2").bands == ("B6", "B5", "B2")
    assert BandTriple.parse("agriculture").bands == ("B6", "B5", "B2")
    with pytest.raises(DatasetError):
        BandTriple(("B1", "B2"))


def test_normalization_stats_zero_std():
    with pytest.raises(DatasetError):
        NormalizationStats(np.zeros(2), np.array([1.0, 0.0]))


# -- on-disk ------------------------------------------------------------------


def test_manifest_four_samples(tmp_path, rng):
    ds = random_dataset(rng, labels=[0, 0, 1, 3])
    D.save_dataset(ds, tmp_path)
    back = D.load_dataset(tmp_path)
    assert len(back) == 4 and back.K == 4
    assert back.labels.tolist() == [0, 0, 1, 3]
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert set(m) >= {"version", "K", "band_ids", "image_shape", "splits"}
    assert set(m["splits"]["train"]) >= {"tensor_file", "label_file", "provenance_file"}


def test_manifest_label_out_of_range(tmp_path, rng):
    D.save_dataset(random_dataset(rng, labels=[0, 1, 2, 3]), tmp_path)
    np.array([0, 1, 7, 3], dtype=np.uint8).tofile(tmp_path / "train.labels.u8")
    with pytest.raises(DatasetError, match="label 7"):
        D.load_dataset(tmp_path)


def test_round_trip_bytes(tmp_path, rng):
    tr = random_dataset(rng, n=9).replace(provenance=np.array([0, 1] * 4 + [0]))
    va = random_dataset(rng, n=3).replace(split="validation")
    D.save_dataset({"train": tr, "validation": va}, tmp_path)
    splits = D.load_splits(tmp_path)
    assert splits["train"].pixels.tobytes() == tr.pixels.tobytes()
    assert splits["validation"].pixels.tobytes() == va.pixels.tobytes()
    assert np.array_equal(splits["train"].provenance, tr.provenance)
    assert splits["train"].provenance_tags()[1] == "gan-synthetic"


def test_raw_tensor_layout(tmp_path, rng):
    ds = random_dataset(rng, n=2, C=3, H=2, W=2)
    D.save_dataset(ds, tmp_path)
    raw = np.fromfile(tmp_path / "train.f32", dtype="<f4")
    assert np.array_equal(raw, ds.pixels.ravel(order="C"))


def test_truncated_tensor_names_sample(tmp_path, rng):
    D.save_dataset(random_dataset(rng, n=5, C=2, H=3, W=3), tmp_path)
    path = tmp_path / "train.f32"
    path.write_bytes(path.read_bytes()[: 4 * 18 * 3 + 10])
    with pytest.raises(DatasetError, match="sample 3"):
        D.load_dataset(tmp_path)


def test_corrupt_tensor_names_sample(tmp_path, rng):
    D.save_dataset(random_dataset(rng, n=5, C=2, H=3, W=3), tmp_path)
    raw = np.fromfile(tmp_path / "train.f32", dtype="<f4")
    raw[2 * 18 + 4] = np.inf
    raw.tofile(tmp_path / "train.f32")
    with pytest.raises(DatasetError, match="sample 2"):
        D.load_dataset(tmp_path)


def test_missing_files(tmp_path, rng):
    with pytest.raises(DatasetError):
        D.load_dataset(tmp_path)
    D.save_dataset(random_dataset(rng), tmp_path)
    (tmp_path / "train.f32").unlink()
    with pytest.raises(DatasetError, match="missing"):
        D.load_dataset(tmp_path)


def test_bad_manifest(tmp_path):
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(DatasetError):
        D.read_manifest(tmp_path)
    (tmp_path / "manifest.json").write_text(json.dumps({"version": 1}))
    with pytest.raises(DatasetError, match="missing"):
        D.read_manifest(tmp_path)


def test_normalization_in_manifest(tmp_path, rng):
    ds = random_dataset(rng)
    st_ = D.compute_normalization(ds)
    D.save_dataset(D.normalize(ds, st_), tmp_path)
    back = D.load_dataset(tmp_path)
    assert np.allclose(back.normalization.mean, st_.mean)


# -- histogram ---------------------------------------------------------------


def test_histogram_counts():
    assert D.class_histogram([0, 0, 1, 2, 3], 4).tolist() == [2, 1, 1, 1]


def test_histogram_empty():
    with pytest.raises(DatasetError):
        D.class_histogram([], 4)


def test_histogram_hundred_samples():
    ds = D.make_synthetic_imbalanced(SyntheticSpec(size=100, height=8, width=8, seed=1))
    assert D.class_histogram(ds).tolist() == [60, 15, 15, 10]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=200), st.randoms(use_true_random=False))
def test_histogram_permutation_invariant(labels, rnd):
    shuffled = list(labels)
    rnd.shuffle(shuffled)
    h = D.class_histogram(labels, 6)
    assert h.counts.tolist() == D.class_histogram(shuffled, 6).counts.tolist()
    assert h.total == len(labels)


# -- composition ------------------------------------------------------------


def test_compose_repetition(rng):
    img = random_dataset(rng, n=1)[0]
    out = D.compose_bands(img, BandTriple(("B4", "B4", "B4")))
    for c in range(3):
        assert np.array_equal(out.pixels[c], img.pixels[3])


def test_compose_agriculture_indices(rng):
    img = random_dataset(rng, n=1)[0]
    out = D.compose_bands(img, "B6,B5,B2")
    assert np.array_equal(out.pixels, img.pixels[[5, 4, 1]])
    assert out.band_ids == ("B6", "B5", "B2")


def test_compose_permutation(rng):
    img = random_dataset(rng, n=1)[0]
    first = D.compose_bands(img, "B6,B5,B2")
    second = D.compose_bands(img, "B2,B6,B5")
    assert np.array_equal(second.pixels, first.pixels[[2, 0, 1]])


def test_compose_unknown_band_lists_available(rng):
    with pytest.raises(DatasetError, match="available bands: B1, B2"):
        D.compose_bands(random_dataset(rng, n=1)[0], "B6,B5,B12")


def test_compose_dataset_keeps_values(rng):
    ds = random_dataset(rng)
    out = D.compose_bands(ds, "agriculture")
    assert out.image_shape == (3, 5, 5)
    assert np.array_equal(out.pixels, ds.pixels[:, [5, 4, 1]])
    assert np.array_equal(out.labels, ds.labels)


# -- normalization -----------------------------------------------------------


def test_normalize_constant_band(rng):
    px = rng.normal(size=(4, 2, 3, 3)).astype(np.float32)
    px[:, 1] = 5.0
    ds = Dataset(px, [0, 1, 0, 1], 2, ("B1", "B2"))
    with pytest.raises(DatasetError, match="zero std"):
        D.compute_normalization(ds)


def test_normalize_identity(rng):
    ds = random_dataset(rng)
    out = D.normalize(ds, NormalizationStats(np.zeros(10), np.ones(10)))
    assert np.array_equal(out.pixels, ds.pixels)


def test_normalize_zero_mean_unit_std(rng):
    ds = Dataset((rng.normal(3, 7, size=(40, 10, 9, 9))).astype(np.float32), rng.integers(0, 4, 40), 4, D.DEFAULT_BAND_IDS)
    out = D.normalize(ds, D.compute_normalization(ds))
    x = out.pixels.astype(np.float64)
    assert np.all(np.abs(x.mean(axis=(0, 2, 3))) < 1e-6)
    assert np.allclose(x.std(axis=(0, 2, 3)), 1.0, atol=1e-5)


def test_normalize_band_mismatch(rng):
    with pytest.raises(DatasetError):
        D.normalize(random_dataset(rng), NormalizationStats(np.zeros(3), np.ones(3)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-100, 100), st.floats(0.01, 100))
def test_normalize_denormalize_round_trip(seed, loc, scale):
    r = np.random.default_rng(seed)
    ds = Dataset((r.normal(loc, scale, (5, 3, 4, 4))).astype(np.float32), r.integers(0, 2, 5), 2, ("B1", "B2", "B3"))
    stats = D.compute_normalization(ds)
    back = D.denormalize(D.normalize(ds, stats), stats).pixels
    # sup-norm relative error; float32 storage rules out a per-element bound near zero
    assert np.abs(back - ds.pixels).max() / np.abs(ds.pixels).max() < 1e-6


# -- augmentation -------------------------------------------------------------


def test_hflip_involution(rng):
    img = random_dataset(rng, n=1)[0]
    assert np.array_equal(D.hflip(D.hflip(img)).pixels, img.pixels)
    assert np.array_equal(D.vflip(D.vflip(img)).pixels, img.pixels)


def test_rotation_zero_identity(rng):
    px = rng.normal(size=(3, 7, 7)).astype(np.float32)
    assert np.array_equal(D.rotate_image(px, 0), px)
    assert np.array_equal(D.rotate_image(px, 360), px)


def test_rotation_ninety(rng):
    px = rng.normal(size=(3, 7, 7)).astype(np.float32)
    assert np.array_equal(D.rotate_image(D.rotate_image(px, 90), 270), px)


def test_arbitrary_rotation_zero_fill():
    px = np.ones((1, 9, 9), dtype=np.float32)
    out = D.rotate_image(px, 45)
    assert out.shape == px.shape
    assert out[0, 0, 0] == 0.0 and out[0, 4, 4] == pytest.approx(1.0)


def test_augment_deterministic(rng):
    img = random_dataset(rng, n=1)[0]
    a = D.augment_standard(img, np.random.default_rng(11))
    b = D.augment_standard(img, np.random.default_rng(11))
    assert np.array_equal(a.pixels, b.pixels)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.booleans(), st.booleans(), st.booleans(), st.booleans())
def test_augment_preserves_shape_and_values(seed, h, v, r, arbitrary):
    img = np.random.default_rng(seed).normal(size=(3, 9, 9)).astype(np.float32)
    cfg = AugmentConfig(h, v, r, arbitrary_rotation=arbitrary)
    out = D.augment_array(img, np.random.default_rng(seed), cfg)
    assert out.shape == img.shape
    if not (r and arbitrary):
        # flips and right-angle turns only permute pixels
        assert np.array_equal(np.sort(out.ravel()), np.sort(img.ravel()))


# -- synthetic ------------------------------------------------------------


def test_allocate_counts():
    assert D.allocate_counts((0.6, 0.15, 0.15, 0.1), 1000) == [600, 150, 150, 100]
    assert sum(D.allocate_counts((0.6, 0.15, 0.15, 0.1), 7)) == 7


def test_synthetic_histogram():
    ds = D.make_synthetic_imbalanced(SyntheticSpec(size=1000, height=8, width=8))
    assert D.class_histogram(ds).tolist() == [600, 150, 150, 100]
    assert ds.image_shape == (10, 8, 8) and ds.band_ids == D.DEFAULT_BAND_IDS


def test_synthetic_deterministic():
    a = D.make_synthetic_imbalanced(SyntheticSpec(size=50, height=12, width=12, seed=4))
    b = D.make_synthetic_imbalanced(SyntheticSpec(size=50, height=12, width=12, seed=4))
    c = D.make_synthetic_imbalanced(SyntheticSpec(size=50, height=12, width=12, seed=5))
    assert a.pixels.tobytes() == b.pixels.tobytes() and np.array_equal(a.labels, b.labels)
    assert a.pixels.tobytes() != c.pixels.tobytes()


@pytest.mark.parametrize("priors,size", [((0.5, 0.5, 0.0), 10), ((0.7, 0.4), 10), ((0.5, 0.5), 1)])
def test_synthetic_errors(priors, size):
    with pytest.raises(DatasetError):
        D.make_synthetic_imbalanced(SyntheticSpec(priors=priors, size=size, height=4, width=4))


def test_synthetic_splits(small_dataset):
    assert set(small_dataset) == {"train", "validation"}
    assert len(small_dataset["train"]) == 160 and len(small_dataset["validation"]) == 40
    assert small_dataset["validation"].split == "validation"
