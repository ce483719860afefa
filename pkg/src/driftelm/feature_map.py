"""Random hidden layer shared by the ELM variants.

A feature map is a frozen set of uniform random input weights and biases plus
an activation; it turns an (N, n) sample matrix into the (N, L) hidden
output matrix that the closed-form solvers consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

from .dataset import SampleSet


def _radbas(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.square(z))


ACTIVATIONS = {
    "radbas": _radbas,
    "sigmoid": expit,
}


@dataclass(frozen=True, eq=False)
class RandomFeatureMap:
    """Frozen random projection: weights (L, n), biases (L,), activation."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str
    seed: int

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, order="C")
        b = np.array(self.biases, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0] or w.shape[0] < 1:
            raise ValueError("weights must be (L, n) with biases of length L")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("weights and biases must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def hidden_size(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def describe(self) -> dict:
        """Serializable descriptor; seed + dims + activation reconstruct the map."""
        return {
            "seed": int(self.seed),
            "hidden_size": self.hidden_size,
            "n_features": self.n_features,
            "activation": self.activation,
        }


def new_feature_map(hidden_size: int, n_features: int, activation: str = "radbas",
                    seed: int = 0) -> RandomFeatureMap:
    """Draw weights and biases i.i.d. uniform on [-1, 1] from a seeded generator."""
    if hidden_size < 1 or n_features < 1:
        raise ValueError("hidden_size and n_features must be at least 1")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=(hidden_size, n_features))
    biases = rng.uniform(-1.0, 1.0, size=hidden_size)
    return RandomFeatureMap(weights, biases, activation, seed)


def map_from_descriptor(desc: dict) -> RandomFeatureMap:
    return new_feature_map(int(desc["hidden_size"]), int(desc["n_features"]),
                           str(desc["activation"]), int(desc["seed"]))


def _as_features(x: Union[SampleSet, np.ndarray]) -> np.ndarray:
    feats = x.features if isinstance(x, SampleSet) else np.asarray(x, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError("expected an (N, n) sample matrix")
    return feats


def hidden_output(fmap: RandomFeatureMap, x: Union[SampleSet, np.ndarray]) -> np.ndarray:
    """Hidden layer output H with H[i, j] = act(w_j . x_i + b_j)."""
    feats = _as_features(x)
    if feats.shape[1] != fmap.n_features:
        raise ValueError(
            f"sample dimension {feats.shape[1]} does not match map ({fmap.n_features})")
    return ACTIVATIONS[fmap.activation](feats @ fmap.weights.T + fmap.biases)
