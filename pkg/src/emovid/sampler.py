"""Segment sampling: K segments per clip, one snippet of consecutive frames each."""

from dataclasses import dataclass

import numpy as np

TRAIN_RANDOM = "train_random"
TEST_UNIFORM = "test_uniform"


@dataclass(frozen=True)
class SamplePlan:
    segment_starts: tuple  # snippet start index (relative to clip start) per segment
    snippet_len: int
    mode: str
    n_frames: int

    def snippet_indices(self, segment):
        """Frame indices for one segment; indices past the clip repeat the last frame."""
        start = self.segment_starts[segment]
        return [min(start + i, self.n_frames - 1) for i in range(self.snippet_len)]

    def all_indices(self):
        return [self.snippet_indices(s) for s in range(len(self.segment_starts))]


def _segment_bounds(n_frames, k):
    # k contiguous segments of equal +/-1 length covering [0, n_frames)
    edges = [(i * n_frames) // k for i in range(k + 1)]
    return [(edges[i], edges[i + 1]) for i in range(k)]


def sample_segments(n_frames, k, snippet_len, mode, rng_seed=None):
    """Partition the clip into k segments and pick a snippet start in each.

    train_random draws the start uniformly inside each segment (seeded);
    test_uniform centers the snippet in each segment.  Short segments clamp
    the start to the segment start.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if k < 1 or snippet_len < 1:
        raise ValueError("k and snippet_len must be >= 1")
    bounds = _segment_bounds(n_frames, k)
    rng = np.random.default_rng(rng_seed) if mode == TRAIN_RANDOM else None
    starts = []
    for a, b in bounds:
        if b <= a:  # empty segment (k > n_frames): fall back to last valid index
            starts.append(min(a, n_frames - 1))
        elif mode == TRAIN_RANDOM:
            starts.append(int(rng.integers(a, b)))
        elif mode == TEST_UNIFORM:
            starts.append(a + max(0, (b - a - snippet_len) // 2))
        else:
            raise ValueError(f"unknown sampling mode {mode!r}")
    return SamplePlan(segment_starts=tuple(starts), snippet_len=snippet_len,
                      mode=mode, n_frames=n_frames)
