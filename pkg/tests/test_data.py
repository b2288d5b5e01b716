import numpy as np
import pytest

from segadapt.config import TrainConfig
from segadapt.data import (
    expected_class_fraction,
    flip_permutation,
    generate_domain,
    generate_scene,
    perturb,
    pixel_features,
    scene_spec,
)


def default_spec(**kw):
    return scene_spec(TrainConfig(**kw))


def test_zero_shift_makes_domains_identical():
    spec = default_spec(shift_hue=0.0, shift_brightness=1.0, shift_noise=0.0)
    a = generate_scene(spec, "source", np.random.default_rng(5))
    b = generate_scene(spec, "target", np.random.default_rng(5))
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])


def test_same_seed_same_dataset():
    spec = default_spec()
    a = generate_domain(spec, "target", 3, 42)
    b = generate_domain(spec, "target", 3, 42)
    for (ia, la), (ib, lb) in zip(a, b):
        assert np.array_equal(ia, ib)
        assert np.array_equal(la, lb)


def test_labels_in_range_and_images_clipped():
    spec = default_spec()
    image, labels = generate_scene(spec, "target", np.random.default_rng(0))
    assert labels.min() >= 0 and labels.max() < spec.num_classes
    assert image.min() >= 0.0 and image.max() <= 1.0
    assert image.shape == (3, spec.height, spec.width)


def test_class_pixel_frequency_matches_expectation():
    # Monte-Carlo pixel fractions against the closed-form expectation,
    # within 3 standard errors over 100 scenes.
    spec = default_spec()
    scenes = generate_domain(spec, "source", 100, 7)
    expected = expected_class_fraction(spec)
    per_scene = np.stack([
        np.bincount(labels.ravel(), minlength=spec.num_classes) / labels.size
        for _, labels in scenes])
    mean = per_scene.mean(axis=0)
    stderr = per_scene.std(axis=0, ddof=1) / np.sqrt(len(scenes))
    assert np.all(np.abs(mean - expected) < 3 * stderr + 1e-9)
    rare = TrainConfig().rare_class
    assert expected[rare] < 0.01  # the designated class is genuinely rare


def test_pixel_features_shape_and_local_stats():
    image = np.zeros((3, 8, 8))
    image[0] = 1.0
    feats = pixel_features(image)
    assert feats.shape == (64, 9)
    assert np.allclose(feats[:, 0], 1.0)   # red channel
    assert np.allclose(feats[:, 3], 1.0)   # local mean of a constant plane
    assert np.allclose(feats[:, 6:], 0.0)  # variance of a constant image


def test_perturb_zero_magnitude_is_identity():
    rng = np.random.default_rng(1)
    image = np.random.default_rng(2).random((3, 6, 6))
    out, flipped = perturb(image, rng, noise=0.0, brightness=0.0, contrast=0.0,
                           flip_prob=0.0)
    assert not flipped
    assert np.array_equal(out, image)


def test_flip_twice_is_identity():
    image = np.random.default_rng(3).random((3, 5, 7))
    assert np.array_equal(image[:, :, ::-1][:, :, ::-1], image)


def test_flip_permutation_aligns_predictions():
    # A per-pixel map of the flipped image equals the flipped map of the
    # original image, so gathering columns by the permutation realigns them.
    rng = np.random.default_rng(4)
    h, w = 6, 9
    probe = rng.random((2, h, w))  # any per-pixel quantity
    flat = probe.reshape(2, -1)
    flipped_flat = probe[:, :, ::-1].reshape(2, -1)
    perm = flip_permutation(h, w)
    assert np.array_equal(flat[:, perm], flipped_flat)
    assert np.array_equal(perm[perm], np.arange(h * w))  # involution


def test_perturb_draws_flip_eventually():
    rng = np.random.default_rng(5)
    image = np.random.default_rng(6).random((3, 4, 4))
    flips = [perturb(image, rng, flip_prob=0.5)[1] for _ in range(50)]
    assert any(flips) and not all(flips)


def test_generate_scene_rejects_unknown_domain():
    with pytest.raises(ValueError):
        generate_scene(default_spec(), "other", np.random.default_rng(0))
