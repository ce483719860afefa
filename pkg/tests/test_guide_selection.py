import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftelm import SampleSet, split_target, ssa_select


def ssa_bruteforce(points, k):
    """Step-by-step re-derivation of the selection on a full distance matrix.

    Independent of the library implementation: quadratic-time scans with
    explicit lowest-index tie handling.
    """
    n = len(points)
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    best = -1.0
    pair = (0, 1)
    for p in range(n):
        for q in range(p + 1, n):
            if dist[p, q] > best:
                best = dist[p, q]
                pair = (p, q)
    selected = [pair[0], pair[1]]
    while len(selected) < min(k, n):
        best_val = -1.0
        best_idx = None
        for i in range(n):
            if i in selected:
                continue
            nearest = min(dist[i, s] for s in selected)
            if nearest > best_val:
                best_val = nearest
                best_idx = i
        selected.append(best_idx)
    return selected, best


def test_hand_trace_on_line():
    points = np.array([[0.0], [1.0], [2.0], [10.0]])
    sel = ssa_select(points, 3)
    # farthest pair is (0, 10); the remaining min-distances are 1 and 2
    np.testing.assert_array_equal(sel.indices, [0, 3, 2])
    assert not sel.truncated


def test_k_equals_n_selects_everything():
    points = np.random.default_rng(0).normal(size=(6, 2))
    sel = ssa_select(points, 6)
    assert sorted(sel.indices) == list(range(6))


def test_k_beyond_n_truncates_with_flag():
    points = np.random.default_rng(1).normal(size=(4, 2))
    sel = ssa_select(points, 9)
    assert sel.truncated
    assert sel.k == 9
    assert sorted(sel.indices) == list(range(4))


def test_all_duplicates_pick_lowest_indices():
    points = np.zeros((5, 3))
    sel = ssa_select(points, 3)
    np.testing.assert_array_equal(sel.indices, [0, 1, 2])


def test_rejects_degenerate_requests():
    with pytest.raises(ValueError):
        ssa_select(np.zeros((1, 2)), 2)
    with pytest.raises(ValueError):
        ssa_select(np.zeros((5, 2)), 1)


def test_matches_bruteforce_trace():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = int(rng.integers(4, 60))
        dim = int(rng.integers(1, 5))
        k = int(rng.integers(2, min(n, 12) + 1))
        points = rng.normal(size=(n, dim))
        expected, max_dist = ssa_bruteforce(points, k)
        sel = ssa_select(points, k)
        assert list(sel.indices) == expected
        first_pair_dist = np.linalg.norm(points[sel.indices[0]] - points[sel.indices[1]])
        assert first_pair_dist == pytest.approx(max_dist, rel=1e-12)


def test_greedy_step_optimality():
    rng = np.random.default_rng(3)
    points = rng.normal(size=(40, 3))
    sel = ssa_select(points, 10)
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    for step in range(2, 10):
        chosen = sel.indices[step]
        prior = sel.indices[:step]
        chosen_min = dist[chosen, prior].min()
        for other in range(40):
            if other in sel.indices[:step + 1]:
                continue
            assert dist[other, prior].min() <= chosen_min + 1e-12


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_deterministic(seed):
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(25, 3))
    a = ssa_select(points, 7)
    b = ssa_select(points, 7)
    np.testing.assert_array_equal(a.indices, b.indices)


class TestSplitTarget:
    def test_partition(self):
        rng = np.random.default_rng(4)
        batch = SampleSet(rng.normal(size=(20, 3)), rng.integers(1, 4, 20), m=3)
        sel = ssa_select(batch, 5)
        labeled, unlabeled = split_target(batch, sel)
        assert labeled.n_samples == 5
        assert unlabeled.n_samples == 15
        combined = np.vstack([labeled.features, unlabeled.features])
        assert (sorted(map(tuple, combined))
                == sorted(map(tuple, batch.features)))

    def test_labels_retained_on_both_sides(self):
        batch = SampleSet(np.arange(12.0).reshape(6, 2), [1, 2, 3, 1, 2, 3], m=3)
        sel = ssa_select(batch, 2)
        labeled, unlabeled = split_target(batch, sel)
        np.testing.assert_array_equal(labeled.labels, batch.labels[sel.indices])
        assert unlabeled.labels is not None
        assert labeled.n_samples + unlabeled.n_samples == 6

    def test_batch5_arithmetic(self):
        # a 197-sample batch with 5 guides leaves 192 for evaluation
        rng = np.random.default_rng(5)
        batch = SampleSet(rng.normal(size=(197, 4)), rng.integers(1, 7, 197))
        labeled, unlabeled = split_target(batch, ssa_select(batch, 5))
        assert labeled.n_samples == 5
        assert unlabeled.n_samples == 192
