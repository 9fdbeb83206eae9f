import numpy as np
import pytest

from emovid.sampler import TEST_UNIFORM, TRAIN_RANDOM, sample_segments


def test_uniform_centers():
    plan = sample_segments(9, 3, 1, TEST_UNIFORM)
    assert plan.segment_starts == (1, 4, 7)


def test_train_random_stays_in_segment():
    for seed in range(50):
        plan = sample_segments(9, 3, 1, TRAIN_RANDOM, rng_seed=seed)
        for s, start in enumerate(plan.segment_starts):
            assert 3 * s <= start < 3 * (s + 1)


def test_short_clip_clamps_and_repeats():
    plan = sample_segments(2, 3, 5, TEST_UNIFORM)
    idx = [i for seg in plan.all_indices() for i in seg]
    assert all(0 <= i < 2 for i in idx)
    assert idx.count(1) >= 5  # last frame repeated


def test_uniform_deterministic():
    assert sample_segments(30, 5, 2, TEST_UNIFORM) == sample_segments(30, 5, 2, TEST_UNIFORM)


def test_train_random_seed_reproducible():
    a = sample_segments(30, 3, 1, TRAIN_RANDOM, rng_seed=11)
    b = sample_segments(30, 3, 1, TRAIN_RANDOM, rng_seed=11)
    assert a == b


def test_offset_frequencies_near_uniform():
    # chi-square style sanity: each in-segment offset within +/-20% of uniform
    counts = np.zeros((3, 10))
    n_draws = 10_000
    for seed in range(n_draws):
        plan = sample_segments(30, 3, 1, TRAIN_RANDOM, rng_seed=seed)
        for s, start in enumerate(plan.segment_starts):
            counts[s, start - 10 * s] += 1
    expected = n_draws / 10
    assert np.all(counts > expected * 0.8)
    assert np.all(counts < expected * 1.2)


def test_indices_always_in_range():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        k = int(rng.integers(1, 8))
        ln = int(rng.integers(1, 7))
        mode = TRAIN_RANDOM if rng.integers(2) else TEST_UNIFORM
        plan = sample_segments(n, k, ln, mode, rng_seed=int(rng.integers(1 << 30)))
        for seg in plan.all_indices():
            assert all(0 <= i < n for i in seg)


def test_bad_inputs():
    with pytest.raises(ValueError):
        sample_segments(0, 3, 1, TEST_UNIFORM)
    with pytest.raises(ValueError):
        sample_segments(5, 3, 1, "bogus")
