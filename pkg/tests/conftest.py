import os
from pathlib import Path

import numpy as np
import pytest

from driftelm import SampleSet, save_batch


def make_drift_corpus(classes=6, per_class_source=200, per_class_target=30,
                      n_features=8, seed=7, morph=0.9, blob_std=0.8, spread=3.0):
    """Ten synthetic batches whose drift grows with the batch index.

    Batch 1 sits on fixed Gaussian class blobs. In later batches each class
    migrates linearly toward the next class's territory (fraction
    ``morph * (batch - 1) / 9``), so drifted samples land where batch 1
    places a different class. That conflict is what makes a source-trained
    classifier degrade and makes labeled guides from the target batch
    informative.
    """
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-spread, spread, size=(classes, n_features))
    rolled = np.roll(centers, -1, axis=0)
    batches = []
    for batch_id in range(1, 11):
        per = per_class_source if batch_id == 1 else per_class_target
        t = morph * (batch_id - 1) / 9.0
        effective = (1 - t) * centers + t * rolled
        labels = np.repeat(np.arange(1, classes + 1), per)
        feats = effective[labels - 1] + rng.normal(0.0, blob_std,
                                                   (labels.size, n_features))
        batches.append(SampleSet(feats, labels, batch_id=batch_id, m=classes))
    return batches


@pytest.fixture(scope="session")
def drift_corpus():
    return make_drift_corpus()


@pytest.fixture(scope="session")
def small_drift_corpus():
    """Cheaper variant for protocol-shape tests."""
    return make_drift_corpus(classes=3, per_class_source=20, per_class_target=12,
                             n_features=4, seed=3)


@pytest.fixture(scope="session")
def drift_corpus_dir(tmp_path_factory, small_drift_corpus):
    """The small synthetic corpus saved as batch1.dat .. batch10.dat."""
    root = tmp_path_factory.mktemp("corpus")
    for batch in small_drift_corpus:
        save_batch(batch, root / f"batch{batch.batch_id}.dat")
    return root


def official_corpus_dir():
    """Directory of the real 10-batch corpus, or None when absent."""
    candidates = []
    env = os.environ.get("DRIFTELM_DATA_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data")
    for path in candidates:
        if path.is_dir() and (path / "batch1.dat").is_file():
            return path
    return None
