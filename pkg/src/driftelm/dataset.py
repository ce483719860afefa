"""Gas-sensor drift corpus handling.

Loads the libsvm-style ``batch1.dat`` .. ``batch10.dat`` files, checks them
against the reference per-batch composition, scales features to [-1, 1],
encodes class labels as +/-1 target rows, and generates synthetic drifted
fixtures for testing without the real corpus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_FEATURES = 128
N_CLASSES = 6

# Gas name for each class id used in the batch files (id 1 first).
GAS_NAMES = ("ethanol", "ethylene", "ammonia", "acetaldehyde", "acetone", "toluene")

# Reference composition of the official 10-batch corpus, keyed by gas name.
EXPECTED_CLASS_COUNTS = {
    1: {"acetone": 90, "acetaldehyde": 98, "ethanol": 83, "ethylene": 30, "ammonia": 70, "toluene": 74},
    2: {"acetone": 164, "acetaldehyde": 334, "ethanol": 100, "ethylene": 109, "ammonia": 532, "toluene": 5},
    3: {"acetone": 365, "acetaldehyde": 490, "ethanol": 216, "ethylene": 240, "ammonia": 275, "toluene": 0},
    4: {"acetone": 64, "acetaldehyde": 43, "ethanol": 12, "ethylene": 30, "ammonia": 12, "toluene": 0},
    5: {"acetone": 28, "acetaldehyde": 40, "ethanol": 20, "ethylene": 46, "ammonia": 63, "toluene": 0},
    6: {"acetone": 514, "acetaldehyde": 574, "ethanol": 110, "ethylene": 29, "ammonia": 606, "toluene": 467},
    7: {"acetone": 649, "acetaldehyde": 662, "ethanol": 360, "ethylene": 744, "ammonia": 630, "toluene": 568},
    8: {"acetone": 30, "acetaldehyde": 30, "ethanol": 40, "ethylene": 33, "ammonia": 143, "toluene": 18},
    9: {"acetone": 61, "acetaldehyde": 55, "ethanol": 100, "ethylene": 75, "ammonia": 78, "toluene": 101},
    10: {"acetone": 600, "acetaldehyde": 600, "ethanol": 600, "ethylene": 600, "ammonia": 600, "toluene": 600},
}
EXPECTED_BATCH_TOTALS = {b: sum(c.values()) for b, c in EXPECTED_CLASS_COUNTS.items()}
EXPECTED_GRAND_TOTAL = 13910

BATCH_IDS = tuple(range(1, 11))


class DataError(ValueError):
    """Unreadable, malformed, or out-of-contract input data."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SampleSet:
    """An immutable batch of samples.

    features : (N, n) float matrix, finite.
    labels   : optional (N,) vector of 1-based class ids in 1..m.
    batch_id : which corpus batch the samples came from (0 for synthetic).
    m        : number of classes of the shared output layer.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    batch_id: int = 0
    m: int = N_CLASSES

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float64, order="C")
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataError("features must be a non-empty 2-D matrix")
        if not np.isfinite(feats).all():
            raise DataError("features contain NaN or Inf")
        object.__setattr__(self, "features", _readonly(feats))
        if self.m < 1:
            raise DataError("m must be at least 1")
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64)
            if labels.shape != (feats.shape[0],):
                raise DataError("labels must be one class id per sample")
            if labels.size and (labels.min() < 1 or labels.max() > self.m):
                raise DataError(f"labels must lie in 1..{self.m}")
            object.__setattr__(self, "labels", _readonly(labels))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def without_labels(self) -> "SampleSet":
        return SampleSet(self.features, None, self.batch_id, self.m)

    def take(self, indices) -> "SampleSet":
        """Row subset (copy), keeping labels when present."""
        idx = np.asarray(indices, dtype=np.int64)
        labels = self.labels[idx] if self.labels is not None else None
        return SampleSet(self.features[idx], labels, self.batch_id, self.m)


def _infer_batch_id(path: Path) -> int:
    match = re.search(r"batch(\d+)", path.stem)
    return int(match.group(1)) if match else 0


def load_batch(path, expected_n: int = N_FEATURES, m: int = N_CLASSES,
               batch_id: int | None = None) -> SampleSet:
    """Parse one libsvm-style batch file.

    Lines are ``<class>[;<concentration>] <idx>:<value> ...`` with 1-based
    feature indices; the concentration token is discarded and absent indices
    default to 0. Errors report the offending line number.
    """
    path = Path(path)
    if batch_id is None:
        batch_id = _infer_batch_id(path)
    rows: list[np.ndarray] = []
    labels: list[int] = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        head = tokens[0].split(";", 1)[0]
        try:
            label = int(head)
        except ValueError:
            raise DataError(f"{path}:{lineno}: malformed label token {tokens[0]!r}") from None
        if not 1 <= label <= m:
            raise DataError(f"{path}:{lineno}: class id {label} outside 1..{m}")
        vec = np.zeros(expected_n)
        for tok in tokens[1:]:
            idx_str, sep, val_str = tok.partition(":")
            if not sep:
                raise DataError(f"{path}:{lineno}: malformed feature token {tok!r}")
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed feature token {tok!r}") from None
            if not 1 <= idx <= expected_n:
                raise DataError(f"{path}:{lineno}: feature index {idx} outside 1..{expected_n}")
            vec[idx - 1] = val
        rows.append(vec)
        labels.append(label)
    if not rows:
        raise DataError(f"{path}: no samples")
    return SampleSet(np.vstack(rows), np.asarray(labels), batch_id, m)


def save_batch(samples: SampleSet, path) -> None:
    """Write a labeled SampleSet in the batch-file format.

    Values are written with shortest round-trip precision, so
    ``load_batch(save_batch(s))`` reproduces the features bit-exactly.
    """
    if samples.labels is None:
        raise DataError("save_batch requires labels")
    lines = []
    for row, label in zip(samples.features, samples.labels):
        pairs = [f"{j + 1}:{float(v)!r}" for j, v in enumerate(row)
                 if v != 0.0 or np.signbit(v)]
        lines.append(" ".join([str(int(label))] + pairs))
    Path(path).write_text("\n".join(lines) + "\n")


def load_corpus(data_dir, expected_n: int = N_FEATURES,
                allow_missing: bool = False) -> list[SampleSet]:
    """Load ``batch1.dat`` .. ``batch10.dat`` from a directory."""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory not found: {data_dir}")
    batches = []
    for bid in BATCH_IDS:
        path = data_dir / f"batch{bid}.dat"
        if not path.is_file():
            if allow_missing:
                continue
            raise DataError(f"missing batch file: {path}")
        batches.append(load_batch(path, expected_n=expected_n, batch_id=bid))
    return batches


@dataclass
class ValidationReport:
    """Outcome of checking a corpus against the reference composition."""

    lines: list[str] = field(default_factory=list)
    mismatches: list[str] = field(default_factory=list)
    total: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_text(self) -> str:
        out = list(self.lines)
        out.append(f"total={self.total}")
        out.append(f"expected_total={EXPECTED_GRAND_TOTAL}")
        for msg in self.mismatches:
            out.append(f"mismatch={msg}")
        out.append(f"mismatches={len(self.mismatches)}")
        out.append(f"status={'ok' if self.ok else 'mismatch'}")
        return "\n".join(out)


def validate_corpus(batches: list[SampleSet]) -> ValidationReport:
    """Check per-batch totals and per-class counts against the reference table.

    Failures are collected in the report, never raised.
    """
    report = ValidationReport()
    by_id: dict[int, SampleSet] = {}
    for s in batches:
        if s.batch_id in by_id:
            report.mismatches.append(f"duplicate batch {s.batch_id}")
        by_id[s.batch_id] = s
    for bid in BATCH_IDS:
        expected = EXPECTED_CLASS_COUNTS[bid]
        if bid not in by_id:
            report.lines.append(f"batch={bid} status=missing")
            report.mismatches.append(f"missing batch {bid}")
            continue
        s = by_id[bid]
        report.total += s.n_samples
        ok = s.n_samples == EXPECTED_BATCH_TOTALS[bid]
        report.lines.append(
            f"batch={bid} total={s.n_samples} expected={EXPECTED_BATCH_TOTALS[bid]} "
            f"status={'ok' if ok else 'mismatch'}")
        if not ok:
            report.mismatches.append(
                f"batch {bid} total: {s.n_samples} expected {EXPECTED_BATCH_TOTALS[bid]}")
        if s.labels is None:
            report.mismatches.append(f"batch {bid} has no labels")
            continue
        counts = np.bincount(s.labels, minlength=N_CLASSES + 1)
        for class_id, gas in enumerate(GAS_NAMES, start=1):
            got = int(counts[class_id])
            want = expected[gas]
            ok = got == want
            report.lines.append(
                f"batch={bid} gas={gas} class={class_id} count={got} expected={want} "
                f"status={'ok' if ok else 'mismatch'}")
            if not ok:
                report.mismatches.append(f"batch {bid} {gas}: count {got} expected {want}")
    if report.total != EXPECTED_GRAND_TOTAL:
        report.mismatches.append(
            f"grand total: {report.total} expected {EXPECTED_GRAND_TOTAL}")
    return report


@dataclass(frozen=True, eq=False)
class ScalerParams:
    """Per-feature min/max for the [-1, 1] scaling."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.array(self.minimum, dtype=np.float64)
        hi = np.array(self.maximum, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DataError("scaler min/max must be matching 1-D vectors")
        if np.any(lo > hi):
            raise DataError("scaler has min > max")
        object.__setattr__(self, "minimum", _readonly(lo))
        object.__setattr__(self, "maximum", _readonly(hi))

    @property
    def constant_mask(self) -> np.ndarray:
        """Features with min == max; these scale to 0."""
        return self.minimum == self.maximum

    @property
    def n_constant(self) -> int:
        return int(self.constant_mask.sum())


def fit_scaler(batches: list[SampleSet]) -> ScalerParams:
    """Per-feature min/max over the union of the given batches."""
    if not batches:
        raise DataError("fit_scaler needs at least one batch")
    lo = np.min([b.features.min(axis=0) for b in batches], axis=0)
    hi = np.max([b.features.max(axis=0) for b in batches], axis=0)
    return ScalerParams(lo, hi)


def apply_scaler(scaler: ScalerParams, samples: SampleSet) -> SampleSet:
    """Map each value by 2*(v - min)/(max - min) - 1; constant features to 0."""
    if samples.n_features != scaler.minimum.shape[0]:
        raise DataError("scaler dimension does not match samples")
    span = scaler.maximum - scaler.minimum
    safe = np.where(span > 0, span, 1.0)
    scaled = 2.0 * (samples.features - scaler.minimum) / safe - 1.0
    scaled[:, scaler.constant_mask] = 0.0
    return SampleSet(scaled, samples.labels, samples.batch_id, samples.m)


def scale_corpus(batches: list[SampleSet]) -> tuple[list[SampleSet], ScalerParams]:
    """Fit a global scaler on the union and apply it to every batch."""
    scaler = fit_scaler(batches)
    return [apply_scaler(scaler, b) for b in batches], scaler


def encode_targets(labels, m: int) -> np.ndarray:
    """One-vs-rest target rows: +1 in the label's column, -1 elsewhere."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise DataError("labels must be a non-empty vector")
    if labels.min() < 1 or labels.max() > m:
        raise DataError(f"labels must lie in 1..{m}")
    targets = -np.ones((labels.size, m))
    targets[np.arange(labels.size), labels - 1] = 1.0
    return targets


def make_synthetic_drift(classes: int, per_class: int, shift: float, seed: int,
                         n_features: int = 8) -> tuple[SampleSet, SampleSet]:
    """Gaussian class blobs plus a translated copy, mimicking sensor drift.

    The target set is drawn from the same blobs translated by ``shift`` along
    a fixed direction (the normalized all-ones diagonal, so the drift touches
    every feature). Deterministic for a given seed.
    """
    if classes < 2:
        raise DataError("need at least 2 classes")
    if per_class < 1:
        raise DataError("need at least 1 sample per class")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-4.0, 4.0, size=(classes, n_features))
    labels = np.repeat(np.arange(1, classes + 1), per_class)
    direction = np.full(n_features, 1.0 / np.sqrt(n_features))

    def draw(offset):
        noise = rng.normal(0.0, 0.5, size=(labels.size, n_features))
        return centers[labels - 1] + noise + offset

    source = SampleSet(draw(0.0), labels, batch_id=1, m=classes)
    target = SampleSet(draw(shift * direction), labels, batch_id=2, m=classes)
    return source, target
