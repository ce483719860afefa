"""Closed-form output-weight solvers.

All three trainers minimize a strictly convex ridge objective over the
output weights beta (an L-by-m matrix), so each has two algebraically
equivalent closed forms: a weight-space ("primal") L-by-L system and a
multiplier ("dual") route sized by the number of training rows. The dual
route is the cheap one when rows are scarce; both are exposed so they can
be checked against each other.

    elm:      0.5*|beta|^2 + (c/2)   * |T  - H  beta|^2
    daelm-s:  0.5*|beta|^2 + (c_s/2) * |Ts - Hs beta|^2 + (c_t/2)*|Tt - Ht beta|^2
    daelm-t:  0.5*|beta|^2 + (c_t/2) * |Tt - Ht beta|^2
                           + (c_tu/2)* |Hu beta_base - Hu beta|^2
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .dataset import SampleSet
from .feature_map import RandomFeatureMap, hidden_output, map_from_descriptor

BRANCHES = ("auto", "primal", "dual")


class SolverError(RuntimeError):
    """A linear system that should be SPD failed to factor."""


@dataclass(frozen=True)
class Penalties:
    """Error penalties: c_s (source), c_t (labeled target), c_tu (unlabeled)."""

    c_s: float = 1.0
    c_t: float = 1.0
    c_tu: float = 0.0

    def __post_init__(self):
        for name in ("c_s", "c_t", "c_tu"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative")
            object.__setattr__(self, name, v)


@dataclass
class DualSolveScratch:
    """Multipliers, residuals, and Gram blocks of a dual-branch solve.

    Source-regularized training fills (alpha_s, residual_s) and
    (alpha_t, residual_t); target-regularized training fills
    (alpha_t, residual_t) and (alpha_tu, residual_tu). At the optimum each
    multiplier equals its penalty times the matching residual.
    """

    blocks: dict = field(default_factory=dict)
    alpha_s: np.ndarray | None = None
    alpha_t: np.ndarray | None = None
    alpha_tu: np.ndarray | None = None
    residual_s: np.ndarray | None = None
    residual_t: np.ndarray | None = None
    residual_tu: np.ndarray | None = None


def _check_matrix(name: str, a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _check_branch(branch: str) -> str:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    return branch


def _solve_spd(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve an SPD system by Cholesky, with a single jitter retry."""
    try:
        return cho_solve(cho_factor(matrix, lower=True, check_finite=False), rhs,
                         check_finite=False)
    except LinAlgError:
        n = matrix.shape[0]
        jitter = 1e-10 * np.trace(matrix) / n
        try:
            return cho_solve(
                cho_factor(matrix + jitter * np.eye(n), lower=True, check_finite=False),
                rhs, check_finite=False)
        except LinAlgError as exc:
            raise SolverError(
                "system is not positive definite beyond jitter tolerance") from exc


def train_elm(h: np.ndarray, targets: np.ndarray, c: float,
              branch: str = "auto") -> np.ndarray:
    """Regularized ELM output weights.

    Solves (H'H + I/c) beta = H'T when rows >= hidden size, otherwise the
    row-space form beta = H'(HH' + I/c)^-1 T. Both give the unique minimizer.
    """
    h = _check_matrix("H", h)
    targets = _check_matrix("T", targets)
    if h.shape[0] != targets.shape[0]:
        raise ValueError("H and T row counts differ")
    c = float(c)
    if not np.isfinite(c) or c <= 0:
        raise ValueError("c must be a positive penalty")
    branch = _check_branch(branch)
    n, hidden = h.shape
    if branch == "auto":
        branch = "primal" if n >= hidden else "dual"
    if branch == "primal":
        gram = h.T @ h + np.eye(hidden) / c
        return _solve_spd(gram, h.T @ targets)
    kernel = h @ h.T + np.eye(n) / c
    return h.T @ _solve_spd(kernel, targets)


def _resolve(beta_or_pair, scratch, return_scratch):
    return (beta_or_pair, scratch) if return_scratch else beta_or_pair


def train_daelm_s(h_source: np.ndarray, t_source: np.ndarray,
                  h_target: np.ndarray, t_target: np.ndarray,
                  penalties: Penalties, branch: str = "auto",
                  return_scratch: bool = False):
    """Source-domain training with a guide-sample agreement penalty.

    Weight-space form: (I + c_s*Hs'Hs + c_t*Ht'Ht) beta = c_s*Hs'Ts + c_t*Ht'Tt.
    Multiplier form (used when source rows < hidden size): eliminate the
    guide-block multipliers from the stationarity system, solve the Schur
    complement for the source multipliers, and recover
    beta = Hs'alpha_s + Ht'alpha_t. A zero penalty is representable only in
    the weight-space form.
    """
    h_source = _check_matrix("H_s", h_source)
    t_source = _check_matrix("T_s", t_source)
    h_target = _check_matrix("H_t", h_target)
    t_target = _check_matrix("T_t", t_target)
    if h_source.shape[1] != h_target.shape[1]:
        raise ValueError("source and target hidden sizes differ")
    if t_source.shape[1] != t_target.shape[1]:
        raise ValueError("source and target output widths differ")
    if h_source.shape[0] != t_source.shape[0] or h_target.shape[0] != t_target.shape[0]:
        raise ValueError("row counts of H and T differ")
    branch = _check_branch(branch)
    c_s, c_t = penalties.c_s, penalties.c_t
    n_source, hidden = h_source.shape
    zero_penalty = min(c_s, c_t) == 0.0
    if branch == "dual" and zero_penalty:
        raise ValueError("dual branch requires strictly positive penalties")
    if branch == "auto":
        branch = "primal" if (n_source >= hidden or zero_penalty) else "dual"

    if branch == "primal":
        gram = np.eye(hidden) + c_s * (h_source.T @ h_source) + c_t * (h_target.T @ h_target)
        rhs = c_s * (h_source.T @ t_source) + c_t * (h_target.T @ t_target)
        return _resolve(_solve_spd(gram, rhs), None, return_scratch)

    cross = h_target @ h_source.T                    # guide rows vs source rows
    gram_t = h_target @ h_target.T + np.eye(h_target.shape[0]) / c_t
    gram_s = h_source @ h_source.T + np.eye(n_source) / c_s
    factor = cho_factor(gram_t, lower=True, check_finite=False)
    z_cross = cho_solve(factor, cross, check_finite=False)
    z_t = cho_solve(factor, t_target, check_finite=False)
    schur = gram_s - cross.T @ z_cross
    alpha_s = _solve_spd(schur, t_source - cross.T @ z_t)
    alpha_t = z_t - z_cross @ alpha_s
    beta = h_source.T @ alpha_s + h_target.T @ alpha_t
    scratch = None
    if return_scratch:
        scratch = DualSolveScratch(
            blocks={"cross": cross, "gram_target": gram_t, "gram_source": gram_s},
            alpha_s=alpha_s, alpha_t=alpha_t,
            residual_s=t_source - h_source @ beta,
            residual_t=t_target - h_target @ beta)
    return _resolve(beta, scratch, return_scratch)


def train_daelm_t_base(h_source: np.ndarray, t_source: np.ndarray, c_s: float,
                       branch: str = "auto") -> np.ndarray:
    """Base classifier for target-domain training: a plain regularized ELM."""
    return train_elm(h_source, t_source, c_s, branch=branch)


def train_daelm_t(h_target: np.ndarray, t_target: np.ndarray,
                  h_unlabeled: np.ndarray, beta_base: np.ndarray,
                  penalties: Penalties, branch: str = "auto",
                  return_scratch: bool = False,
                  pseudo_targets: np.ndarray | None = None):
    """Target-domain training pulled toward a base classifier's soft outputs.

    The unlabeled rows contribute soft pseudo-targets (raw continuous
    scores, never argmax-hardened): by default Hu @ beta_base, or the
    ``pseudo_targets`` override when the base classifier scores the
    unlabeled samples through its own feature map. Weight-space form:
    (I + c_t*Ht'Ht + c_tu*Hu'Hu) beta = c_t*Ht'Tt + c_tu*Hu'pseudo.
    Multiplier form when labeled target rows < hidden size.
    """
    h_target = _check_matrix("H_t", h_target)
    t_target = _check_matrix("T_t", t_target)
    h_unlabeled = _check_matrix("H_tu", h_unlabeled)
    beta_base = _check_matrix("beta_base", beta_base)
    if h_target.shape[1] != h_unlabeled.shape[1]:
        raise ValueError("labeled and unlabeled hidden sizes differ")
    if h_target.shape[0] != t_target.shape[0]:
        raise ValueError("row counts of H_t and T_t differ")
    if beta_base.shape != (h_target.shape[1], t_target.shape[1]):
        raise ValueError("beta_base shape does not match hidden size and output width")
    branch = _check_branch(branch)
    c_t, c_tu = penalties.c_t, penalties.c_tu
    n_target, hidden = h_target.shape
    if pseudo_targets is None:
        pseudo = h_unlabeled @ beta_base
    else:
        pseudo = _check_matrix("pseudo_targets", pseudo_targets)
        if pseudo.shape != (h_unlabeled.shape[0], t_target.shape[1]):
            raise ValueError("pseudo_targets shape must be (unlabeled rows, m)")
    zero_penalty = min(c_t, c_tu) == 0.0
    if branch == "dual" and zero_penalty:
        raise ValueError("dual branch requires strictly positive penalties")
    if branch == "auto":
        branch = "primal" if (n_target >= hidden or zero_penalty) else "dual"

    if branch == "primal":
        gram = np.eye(hidden) + c_t * (h_target.T @ h_target) + c_tu * (h_unlabeled.T @ h_unlabeled)
        rhs = c_t * (h_target.T @ t_target) + c_tu * (h_unlabeled.T @ pseudo)
        return _resolve(_solve_spd(gram, rhs), None, return_scratch)

    cross = h_unlabeled @ h_target.T                 # unlabeled rows vs labeled rows
    gram_u = h_unlabeled @ h_unlabeled.T + np.eye(h_unlabeled.shape[0]) / c_tu
    gram_t = h_target @ h_target.T + np.eye(n_target) / c_t
    factor = cho_factor(gram_u, lower=True, check_finite=False)
    z_cross = cho_solve(factor, cross, check_finite=False)
    z_u = cho_solve(factor, pseudo, check_finite=False)
    schur = gram_t - cross.T @ z_cross
    alpha_t = _solve_spd(schur, t_target - cross.T @ z_u)
    alpha_tu = z_u - z_cross @ alpha_t
    beta = h_target.T @ alpha_t + h_unlabeled.T @ alpha_tu
    scratch = None
    if return_scratch:
        scratch = DualSolveScratch(
            blocks={"cross": cross, "gram_unlabeled": gram_u, "gram_target": gram_t},
            alpha_t=alpha_t, alpha_tu=alpha_tu,
            residual_t=t_target - h_target @ beta,
            residual_tu=pseudo - h_unlabeled @ beta)
    return _resolve(beta, scratch, return_scratch)


@dataclass(frozen=True, eq=False)
class Classifier:
    """A trained model: feature map plus output weights (hidden_size x m)."""

    feature_map: RandomFeatureMap
    beta: np.ndarray
    m: int

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64, order="C")
        if beta.shape != (self.feature_map.hidden_size, self.m):
            raise ValueError("beta shape must be (hidden_size, m)")
        if not np.isfinite(beta).all():
            raise ValueError("beta contains non-finite entries")
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)


def labels_from_scores(scores: np.ndarray) -> np.ndarray:
    """Argmax class ids (1-based); ties go to the lowest class index."""
    return np.argmax(scores, axis=1).astype(np.int64) + 1


def predict(classifier: Classifier, x: Union[SampleSet, np.ndarray]):
    """Class scores and argmax labels for a sample matrix."""
    scores = hidden_output(classifier.feature_map, x) @ classifier.beta
    return scores, labels_from_scores(scores)


def accuracy(predicted, truth) -> float:
    """Fraction of exact label matches."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValueError("prediction and truth must be equal-length vectors")
    if predicted.size == 0:
        raise ValueError("empty input")
    return float(np.mean(predicted == truth))


CLASSIFIER_FORMAT = "driftelm-classifier-v1"


def classifier_to_dict(classifier: Classifier, include_map_arrays: bool = False) -> dict:
    """JSON-safe dict; floats survive the round trip bit-exactly."""
    doc = {
        "format": CLASSIFIER_FORMAT,
        "feature_map": classifier.feature_map.describe(),
        "m": int(classifier.m),
        "beta": classifier.beta.tolist(),
    }
    if include_map_arrays:
        doc["feature_map"]["weights"] = classifier.feature_map.weights.tolist()
        doc["feature_map"]["biases"] = classifier.feature_map.biases.tolist()
    return doc


def classifier_from_dict(doc: dict) -> Classifier:
    if doc.get("format") != CLASSIFIER_FORMAT:
        raise ValueError(f"unsupported classifier format {doc.get('format')!r}")
    fmap = map_from_descriptor(doc["feature_map"])
    return Classifier(fmap, np.asarray(doc["beta"]), int(doc["m"]))


def save_classifier(classifier: Classifier, path, include_map_arrays: bool = False) -> None:
    path = Path(path)
    text = json.dumps(classifier_to_dict(classifier, include_map_arrays), indent=2)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_classifier(path) -> Classifier:
    with open(path) as fh:
        return classifier_from_dict(json.load(fh))
