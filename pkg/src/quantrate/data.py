"""Dataset ingestion, splitting, standardization, and synthetic generators.

File loaders report problems by 1-based row and column.  Randomized
operations (splits, generators) are driven by numpy's PCG64 generator
seeded explicitly, so identical specs reproduce identical datasets
bitwise on any platform with the same numpy generator algorithm; the
identifier "numpy-pcg64" is recorded in trained-model outputs for that
reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateSplit,
    EmptyInput,
    InvalidSpec,
    NonMonotonicIndex,
    NonpositiveScale,
    ParseError,
    RaggedRows,
    UnknownLabel,
)
from .types import Dataset

GENERATOR_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class SplitSpec:
    """Train/test partition parameters.

    train_fraction controls the exact train size floor(fraction * n).
    Stratified mode applies the same floor to the positive class, so
    both sides keep the original positive fraction within one sample.
    """

    train_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidSpec(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )
        if self.seed < 0:
            raise InvalidSpec("seed must be a nonnegative integer")


@dataclass(frozen=True)
class SyntheticSpec:
    """Two-class isotropic Gaussian generator parameters.

    Class means sit at +/- mean_separation/2 along the first axis.  The
    optional per-class scale factors multiply sigma for that class only
    (both default 1, the symmetric case).
    """

    n: int
    mean_separation: float
    sigma: float
    seed: int
    positive_prior: float = 0.1
    dim: int = 2
    positive_scale: float = 1.0
    negative_scale: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSpec("n must be positive")
        if not 0.0 < self.positive_prior < 1.0:
            raise InvalidSpec("positive_prior must lie in (0, 1)")
        if self.dim < 1:
            raise InvalidSpec("dim must be positive")
        if not self.mean_separation > 0:
            raise NonpositiveScale("mean_separation must be positive")
        if not self.sigma > 0:
            raise NonpositiveScale("sigma must be positive")
        if not (self.positive_scale > 0 and self.negative_scale > 0):
            raise NonpositiveScale("class scale factors must be positive")
        if self.seed < 0:
            raise InvalidSpec("seed must be a nonnegative integer")


@dataclass(frozen=True)
class MixtureComponent:
    """One Gaussian blob of a labeled mixture."""

    label: int
    weight: float
    mean: Tuple[float, ...]
    sigma: float

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise InvalidSpec("component label must be -1 or +1")
        if not self.weight > 0:
            raise InvalidSpec("component weight must be positive")
        if not self.sigma > 0:
            raise NonpositiveScale("component sigma must be positive")
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))


@dataclass(frozen=True)
class StandardizeTransform:
    """Per-feature affine map fit on a training set."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def inverse(self, features) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) * self.std + self.mean


def _read_lines(path) -> List[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def load_delimited(
    path,
    label_column: int,
    positive_label_value: str,
    delimiter: Optional[str] = ",",
    header: bool = False,
    negative_label_value: Optional[str] = None,
    numeric_labels: bool = False,
) -> Dataset:
    """Parse a rectangular delimited text file into a Dataset.

    Parameters
    ----------
    path : path-like
        UTF-8 text file, one sample per line.
    label_column : int
        Column holding the class label; negative values index from the
        end (-1 is the last column).
    positive_label_value : str
        Cell value mapped to +1.
    delimiter : str or None
        Cell separator; None splits on arbitrary whitespace.
    header : bool
        Skip the first line when true.
    negative_label_value : str, optional
        When given, any label cell matching neither value raises
        UnknownLabel; when omitted every non-positive label maps to -1.
    numeric_labels : bool
        Compare label cells as floats instead of strings (for data
        where the label is a numeric column, e.g. a capped regression
        target).
    """
    lines = _read_lines(path)
    if header and lines:
        lines = lines[1:]
    rows = []
    for lineno, line in enumerate(lines, start=1 + int(header)):
        if not line.strip():
            continue
        cells = line.split(delimiter) if delimiter else line.split()
        rows.append((lineno, [c.strip() for c in cells]))
    if not rows:
        raise EmptyInput(f"no data rows in {path}")
    width = len(rows[0][1])
    for lineno, cells in rows:
        if len(cells) != width:
            raise RaggedRows(
                f"row {lineno} has {len(cells)} columns, expected {width}"
            )
    col = label_column if label_column >= 0 else width + label_column
    if not 0 <= col < width:
        raise InvalidSpec(
            f"label_column {label_column} outside a {width}-column file"
        )
    pos_value = positive_label_value.strip()
    neg_value = (
        negative_label_value.strip() if negative_label_value is not None else None
    )
    if numeric_labels:
        pos_number = float(pos_value)
        neg_number = float(neg_value) if neg_value is not None else None
    features = np.empty((len(rows), width - 1), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64)
    for i, (lineno, cells) in enumerate(rows):
        raw = cells[col]
        if numeric_labels:
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(
                    f"label cell {raw!r} is not numeric", lineno, col + 1
                ) from None
            if value == pos_number:
                labels[i] = 1
            elif neg_number is not None and value != neg_number:
                raise UnknownLabel(
                    f"row {lineno}: label {raw!r} matches neither class value"
                )
            else:
                labels[i] = -1
        else:
            if raw == pos_value:
                labels[i] = 1
            elif neg_value is not None and raw != neg_value:
                raise UnknownLabel(
                    f"row {lineno}: label {raw!r} matches neither class value"
                )
            else:
                labels[i] = -1
        k = 0
        for j, cell in enumerate(cells):
            if j == col:
                continue
            try:
                features[i, k] = float(cell)
            except ValueError:
                raise ParseError(
                    f"feature cell {cell!r} is not numeric", lineno, j + 1
                ) from None
            k += 1
    return Dataset(features, labels)


def load_sparse(path) -> Dataset:
    """Parse "label idx:val ..." lines into a dense Dataset.

    Indices are 1-based and must be strictly increasing within a line;
    entries absent from a line are zero.  Text after "#" is a comment.
    """
    lines = _read_lines(path)
    parsed = []
    max_index = 0
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        try:
            label_value = float(tokens[0])
        except ValueError:
            raise ParseError(
                f"label {tokens[0]!r} is not numeric", lineno, 1
            ) from None
        if label_value not in (-1.0, 1.0):
            raise ParseError(
                f"label {tokens[0]!r} is not +1 or -1", lineno, 1
            )
        entries = []
        previous = 0
        for pos, token in enumerate(tokens[1:], start=2):
            head, sep, tail = token.partition(":")
            if not sep:
                raise ParseError(
                    f"expected idx:val, got {token!r}", lineno, pos
                )
            try:
                index = int(head)
                value = float(tail)
            except ValueError:
                raise ParseError(
                    f"expected idx:val, got {token!r}", lineno, pos
                ) from None
            if index < 1:
                raise ParseError(
                    f"index {index} is not 1-based", lineno, pos
                )
            if index <= previous:
                raise NonMonotonicIndex(
                    f"index {index} does not increase past {previous}",
                    lineno,
                    pos,
                )
            previous = index
            entries.append((index, value))
        max_index = max(max_index, previous)
        parsed.append((int(label_value), entries))
    if not parsed:
        raise EmptyInput(f"no data rows in {path}")
    features = np.zeros((len(parsed), max_index), dtype=np.float64)
    labels = np.empty(len(parsed), dtype=np.int64)
    for i, (label, entries) in enumerate(parsed):
        labels[i] = label
        for index, value in entries:
            features[i, index - 1] = value
    return Dataset(features, labels)


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """Deterministic train/test partition.

    The train side holds exactly floor(train_fraction * n) samples; the
    stratified variant additionally pins the train positive count to
    floor(train_fraction * n_positives).  Row order within each side
    follows the original dataset order.
    """
    n = dataset.n
    n_train = int(np.floor(spec.train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise DegenerateSplit(
            f"fraction {spec.train_fraction} of {n} samples leaves an "
            "empty side"
        )
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        pos = dataset.positive_indices()
        neg = dataset.negative_indices()
        n_pos_train = int(np.floor(spec.train_fraction * pos.size))
        n_neg_train = n_train - n_pos_train
        pos_perm = pos[rng.permutation(pos.size)]
        neg_perm = neg[rng.permutation(neg.size)]
        train_idx = np.concatenate(
            [pos_perm[:n_pos_train], neg_perm[:n_neg_train]]
        )
        test_idx = np.concatenate(
            [pos_perm[n_pos_train:], neg_perm[n_neg_train:]]
        )
    else:
        perm = rng.permutation(n)
        train_idx = perm[:n_train]
        test_idx = perm[n_train:]
    train_idx = np.sort(train_idx)
    test_idx = np.sort(test_idx)
    if train_idx.size == 0 or test_idx.size == 0:
        raise DegenerateSplit("a split side came up empty")
    return dataset.take(train_idx), dataset.take(test_idx)


def standardize(
    train: Dataset, test: Dataset
) -> Tuple[Dataset, Dataset, StandardizeTransform]:
    """Shift/scale features to train mean 0 and stdev 1.

    Statistics come from the train side only (population stdev);
    zero-variance features keep scale 1, so they map to exactly 0.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    transform = StandardizeTransform(mean=mean, std=std)
    train_out = Dataset(transform.apply(train.features), train.labels)
    test_out = Dataset(transform.apply(test.features), test.labels)
    return train_out, test_out, transform


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample a two-class isotropic Gaussian dataset.

    Positives center at +mean_separation/2 along the first axis and
    negatives at the mirror image; both classes share sigma times their
    per-class scale.  Label draws precede the single noise draw, so the
    output is bitwise reproducible from the seed.
    """
    rng = np.random.default_rng(spec.seed)
    labels = np.where(rng.random(spec.n) < spec.positive_prior, 1, -1)
    noise = rng.standard_normal((spec.n, spec.dim))
    half = spec.mean_separation / 2.0
    centers = np.zeros((spec.n, spec.dim))
    centers[:, 0] = np.where(labels == 1, half, -half)
    scales = np.where(
        labels == 1,
        spec.sigma * spec.positive_scale,
        spec.sigma * spec.negative_scale,
    )
    features = centers + scales[:, None] * noise
    return Dataset(features, labels)


def generate_mixture(
    components: Sequence[MixtureComponent], n: int, seed: int
) -> Dataset:
    """Sample a labeled mixture of isotropic Gaussian components.

    Component weights are normalized to probabilities; every component
    mean must share one dimension.  Draw order (component indices, then
    one noise block) is fixed for reproducibility.
    """
    if not components:
        raise EmptyInput("mixture needs at least one component")
    if n < 1:
        raise InvalidSpec("n must be positive")
    dim = len(components[0].mean)
    if dim == 0 or any(len(c.mean) != dim for c in components):
        raise InvalidSpec("component means must share one nonzero dimension")
    weights = np.array([c.weight for c in components], dtype=np.float64)
    probs = weights / weights.sum()
    means = np.array([c.mean for c in components], dtype=np.float64)
    sigmas = np.array([c.sigma for c in components], dtype=np.float64)
    labels_by_comp = np.array([c.label for c in components], dtype=np.int64)
    rng = np.random.default_rng(seed)
    which = rng.choice(len(components), size=n, p=probs)
    noise = rng.standard_normal((n, dim))
    features = means[which] + sigmas[which][:, None] * noise
    return Dataset(features, labels_by_comp[which])
