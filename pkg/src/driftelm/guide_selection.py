"""Guide-sample selection.

Picks k spread-out samples from a (scaled) target batch: seed with the
farthest pair, then repeatedly add the point whose distance to the selected
set is largest. Deterministic; all ties resolve to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataset import DataError, SampleSet
from .feature_map import _as_features


@dataclass(frozen=True, eq=False)
class GuideSelection:
    """Ordered indices of the chosen guide samples."""

    indices: np.ndarray
    k: int
    truncated: bool = False  # True when k exceeded the batch size

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64)
        if idx.ndim != 1 or len(np.unique(idx)) != idx.size:
            raise ValueError("indices must be a vector of distinct values")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)


def _distances_from(feats: np.ndarray, i: int) -> np.ndarray:
    return np.sqrt(np.square(feats - feats[i]).sum(axis=1))


def ssa_select(x: Union[SampleSet, np.ndarray], k: int) -> GuideSelection:
    """Farthest-pair seeding plus greedy max-min extension to k samples.

    If k exceeds the batch size, every index is returned (in selection
    order) and the result is flagged as truncated.
    """
    feats = _as_features(x)
    n = feats.shape[0]
    if n < 2:
        raise ValueError("selection needs at least 2 samples")
    if k < 2:
        raise ValueError("k must be at least 2")
    truncated = k > n
    k_eff = min(k, n)

    # Farthest pair; scanning p < q keeps the lexicographically lowest tie.
    best = -1.0
    pair = (0, 1)
    for p in range(n - 1):
        d = _distances_from(feats[p:], 0)[1:]
        q = int(np.argmax(d))
        if d[q] > best:
            best = float(d[q])
            pair = (p, p + 1 + q)

    selected = [pair[0], pair[1]]
    min_dist = np.minimum(_distances_from(feats, pair[0]), _distances_from(feats, pair[1]))
    min_dist[selected] = -np.inf
    while len(selected) < k_eff:
        nxt = int(np.argmax(min_dist))
        selected.append(nxt)
        min_dist = np.minimum(min_dist, _distances_from(feats, nxt))
        min_dist[nxt] = -np.inf
    return GuideSelection(np.asarray(selected), k, truncated)


def split_target(x: SampleSet, selection: GuideSelection) -> tuple[SampleSet, SampleSet]:
    """Split a target batch into guide rows and the unlabeled remainder.

    Guides keep their labels for training; the remainder keeps labels too,
    but only for evaluation, never for training.
    """
    n = x.n_samples
    if selection.indices.size and (selection.indices.min() < 0 or selection.indices.max() >= n):
        raise DataError("selection indices out of range for this batch")
    mask = np.zeros(n, dtype=bool)
    mask[selection.indices] = True
    rest = np.flatnonzero(~mask)
    labeled = x.take(selection.indices)
    unlabeled = x.take(rest)
    assert labeled.n_samples + unlabeled.n_samples == n
    return labeled, unlabeled
