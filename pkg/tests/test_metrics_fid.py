import numpy as np
import pytest
import scipy.linalg

from semedit.metrics import (
    GaussianStats,
    RandomConvEmbedder,
    embed_images,
    fid_between,
    frechet_distance,
    get_embedder,
    register_embedder,
)


def _stats(mean, cov, count=10):
    return GaussianStats(np.asarray(mean, dtype=np.float64),
                         np.asarray(cov, dtype=np.float64), count)


def _random_stats(seed, d=6):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d + 3, d))
    cov = np.cov(a, rowvar=False)
    return _stats(rng.normal(size=d), (cov + cov.T) / 2)


def sqrtm_frechet(a, b):
    """Independent oracle via scipy's matrix square root."""
    diff = a.mean - b.mean
    covmean = scipy.linalg.sqrtm(a.cov @ b.cov)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    return float(diff @ diff + np.trace(a.cov) + np.trace(b.cov)
                 - 2.0 * np.trace(covmean))


# --- GaussianStats invariants ---------------------------------------------

def test_stats_require_symmetric_cov():
    cov = np.eye(3)
    cov[0, 1] = 0.5  # asymmetric
    with pytest.raises(ValueError):
        _stats(np.zeros(3), cov)


def test_stats_require_two_samples():
    with pytest.raises(ValueError):
        _stats(np.zeros(3), np.eye(3), count=1)


def test_stats_shape_checks():
    with pytest.raises(ValueError):
        _stats(np.zeros(3), np.eye(4))


# --- frechet_distance closed forms ----------------------------------------

def test_identical_stats_zero():
    s = _random_stats(0)
    assert abs(frechet_distance(s, s)) <= 1e-8


def test_unit_mean_shift_identity_cov():
    d = 5
    mu = np.zeros(d)
    shifted = mu.copy()
    shifted[2] = 1.0  # unit vector offset
    a = _stats(mu, np.eye(d))
    b = _stats(shifted, np.eye(d))
    assert frechet_distance(a, b) == pytest.approx(1.0, abs=1e-8)


def test_commuting_scaled_identity():
    # d=2, Sa=I, Sb=4I, equal means: Tr(I + 4I - 2*2I) = 2
    a = _stats(np.zeros(2), np.eye(2))
    b = _stats(np.zeros(2), 4.0 * np.eye(2))
    assert frechet_distance(a, b) == pytest.approx(2.0, abs=1e-8)


def test_matches_scipy_sqrtm_oracle():
    for seed in range(12):
        a = _random_stats(seed)
        b = _random_stats(seed + 1000)
        got = frechet_distance(a, b)
        want = sqrtm_frechet(a, b)
        assert got == pytest.approx(want, rel=1e-5, abs=1e-6)


def test_symmetric_in_arguments():
    for seed in range(6):
        a = _random_stats(seed)
        b = _random_stats(seed + 50)
        assert frechet_distance(a, b) == pytest.approx(
            frechet_distance(b, a), rel=1e-8, abs=1e-8
        )


def test_nonnegative():
    for seed in range(10):
        assert frechet_distance(_random_stats(seed), _random_stats(seed + 7)) >= 0.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        frechet_distance(_random_stats(0, d=4), _random_stats(1, d=5))


def test_nonfinite_stats_rejected():
    a = _random_stats(0)
    bad_mean = a.mean.copy()
    bad_mean[0] = np.nan
    b = _stats(bad_mean, a.cov)
    with pytest.raises(ValueError):
        frechet_distance(a, b)


# --- embed_images -----------------------------------------------------------

def _images(seed, n=8, size=16):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, size=(n, 3, size, size)).astype(np.float32)


def test_duplicated_images_zero_cov():
    img = _images(0, n=1)
    stack = np.repeat(img, 6, axis=0)
    stats = embed_images(stack)
    assert np.allclose(stats.cov, 0.0, atol=1e-10)


def test_embed_deterministic_across_runs():
    imgs = _images(1)
    s1 = embed_images(imgs, RandomConvEmbedder(seed=0))
    s2 = embed_images(imgs, RandomConvEmbedder(seed=0))
    assert np.array_equal(s1.mean, s2.mean)
    assert np.array_equal(s1.cov, s2.cov)


def test_embed_matches_loop_mean_cov():
    imgs = _images(2, n=7)
    emb = RandomConvEmbedder(seed=3)
    stats = embed_images(imgs, emb)
    import torch

    vecs = np.stack([emb(torch.from_numpy(imgs[i : i + 1])).numpy()[0]
                     for i in range(len(imgs))]).astype(np.float64)
    mean = vecs.sum(axis=0) / len(vecs)
    d = vecs.shape[1]
    cov = np.zeros((d, d))
    for v in vecs:
        dv = v - mean
        cov += np.outer(dv, dv)
    cov /= len(vecs) - 1  # unbiased, matching np.cov
    assert np.allclose(stats.mean, mean, atol=1e-6)
    assert np.allclose(stats.cov, cov, atol=1e-6)


def test_fewer_than_two_images_rejected():
    with pytest.raises(ValueError):
        embed_images(_images(0, n=1))


def test_fid_between_identical_sets_tiny():
    imgs = _images(4, n=10)
    assert fid_between(imgs, imgs.copy()) <= 1e-6


def test_fid_separates_distributions():
    a = _images(5, n=16)
    b = np.clip(a + 0.8, -1, 1)  # brightness shift
    assert fid_between(a, b) > fid_between(a, a) + 1e-4


def test_registry_roundtrip():
    register_embedder("unit_test_embedder", lambda: RandomConvEmbedder(seed=9))
    emb = get_embedder("unit_test_embedder")
    assert emb.dim == 64
    with pytest.raises(KeyError):
        get_embedder("no_such_embedder")
