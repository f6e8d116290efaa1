"""Datasets, prediction tables and their on-disk formats.

Two formats are supported:

* LIBSVM sparse text (``label idx:val idx:val ...``, 1-based indices), read
  into a dense :class:`Dataset`.
* A prediction-table CSV describing the out-of-bag predictions of an
  ensemble. The first row holds ``n_hypotheses,n_points,n_classes``, the
  second the true labels, and each following row the predictions of one
  hypothesis. An empty cell means the point is not in that hypothesis'
  validation set.
"""
import io
import os
from dataclasses import dataclass, field

import numpy as np

NOT_EVALUATED = -1


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    classes: tuple = field(default=())

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise ValueError(f"features must be a non-empty N x d matrix, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be a vector with one entry per row of features")
        if self.class_count < 2:
            raise ValueError("class_count must be at least 2")
        if labels.min() < 0 or labels.max() >= self.class_count:
            raise ValueError("labels must lie in [0, class_count)")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, index):
        return Dataset(self.features[index], self.labels[index], self.class_count, self.classes)


def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"invalid label {token!r}", lineno) from None
    return value


def read_libsvm(path, n_features=None):
    """Read a LIBSVM sparse file into a dense :class:`Dataset`.

    Labels are remapped to ``0..C-1`` following the sorted order of the
    original label values; the originals are kept in ``Dataset.classes``.
    """
    rows, raw_labels = [], []
    max_index = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            raw_labels.append(_parse_label(tokens[0], lineno))
            entries = {}
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    i = int(idx)
                    v = float(val)
                except ValueError:
                    raise ParseError(f"expected idx:val, got {tok!r}", lineno) from None
                if i < 1:
                    raise ParseError(f"feature index must be >= 1, got {i}", lineno)
                entries[i] = v
                max_index = max(max_index, i)
            rows.append(entries)
    if not rows:
        raise ParseError(f"{path} contains no data")
    d = max(max_index, n_features or 0, 1)
    features = np.zeros((len(rows), d))
    for r, entries in enumerate(rows):
        for i, v in entries.items():
            features[r, i - 1] = v
    classes, labels = np.unique(np.asarray(raw_labels), return_inverse=True)
    if len(classes) < 2:
        raise ParseError(f"{path} holds a single class; at least two are required")
    classes = tuple(int(c) if float(c).is_integer() else float(c) for c in classes)
    return Dataset(features, labels, len(classes), classes)


def _fmt(value):
    return repr(float(value)) if not float(value).is_integer() else str(int(value))


def write_libsvm(dataset, path):
    """Write ``dataset`` in LIBSVM format, skipping zero features."""
    classes = dataset.classes or tuple(range(dataset.class_count))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, y in zip(dataset.features, dataset.labels):
            cells = [str(classes[y])]
            cells += [f"{j + 1}:{_fmt(v)}" for j, v in enumerate(x) if v != 0.0]
            fh.write(" ".join(cells) + "\n")


@dataclass(frozen=True)
class PredictionTable:
    """Predictions of H hypotheses on N points with validation-set masks.

    ``oob_mask[h, i]`` is true when point ``i`` belongs to the validation
    set of hypothesis ``h``. Predictions are required there; elsewhere they
    may be recorded or left as :data:`NOT_EVALUATED`.
    """

    predictions: np.ndarray
    truth: np.ndarray
    oob_mask: np.ndarray
    n_classes: int

    def __post_init__(self):
        predictions = np.asarray(self.predictions, dtype=np.int64)
        truth = np.asarray(self.truth, dtype=np.int64)
        mask = np.asarray(self.oob_mask, dtype=bool)
        if predictions.ndim != 2:
            raise ValueError("predictions must be an H x N matrix")
        H, N = predictions.shape
        if truth.shape != (N,) or mask.shape != (H, N):
            raise ValueError(
                f"dimension mismatch: predictions {predictions.shape}, truth {truth.shape}, mask {mask.shape}"
            )
        if H < 1 or N < 1:
            raise ValueError("prediction table must be non-empty")
        if truth.min() < 0 or truth.max() >= self.n_classes:
            raise ValueError("truth label out of range")
        if predictions.max() >= self.n_classes or predictions.min() < NOT_EVALUATED:
            raise ValueError("prediction label out of range")
        if np.any(predictions[mask] == NOT_EVALUATED):
            raise ValueError("missing prediction inside a validation set")
        empty = np.flatnonzero(~mask.any(axis=1))
        if empty.size:
            raise ValueError(f"hypothesis {empty[0]} has an empty validation set")
        for name, arr in (("predictions", predictions), ("truth", truth), ("oob_mask", mask)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_hypotheses(self):
        return self.predictions.shape[0]

    @property
    def n_points(self):
        return self.predictions.shape[1]

    def errors(self):
        """Boolean H x N matrix of errors, false outside the validation sets."""
        return (self.predictions != self.truth[None, :]) & self.oob_mask

    def canonical(self):
        """Copy with predictions outside the validation sets dropped."""
        preds = np.where(self.oob_mask, self.predictions, NOT_EVALUATED)
        return PredictionTable(preds, self.truth, self.oob_mask, self.n_classes)

    @classmethod
    def full(cls, predictions, truth, n_classes):
        """Table where every point is evaluated by every hypothesis (e.g. a test set)."""
        predictions = np.asarray(predictions)
        return cls(predictions, truth, np.ones(predictions.shape, dtype=bool), n_classes)


def _parse_int_row(line, lineno, allow_empty=False):
    cells = line.rstrip("\r\n").split(",")
    out = []
    for cell in cells:
        cell = cell.strip()
        if cell == "":
            if not allow_empty:
                raise ParseError("empty cell", lineno)
            out.append(None)
            continue
        try:
            out.append(int(cell))
        except ValueError:
            raise ParseError(f"expected an integer, got {cell!r}", lineno) from None
    return out


def read_prediction_table(path):
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh.read().split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise ParseError(f"{path}: a table needs a header and a truth row")
    header = _parse_int_row(lines[0], 1)
    if len(header) != 3:
        raise ParseError("header must be n_hypotheses,n_points,n_classes", 1)
    H, N, C = header
    if len(lines) - 2 != H:
        raise ParseError(f"dimension mismatch: header declares {H} hypotheses, found {len(lines) - 2} rows")
    truth = _parse_int_row(lines[1], 2)
    if len(truth) != N:
        raise ParseError(f"dimension mismatch: expected {N} truth labels, got {len(truth)}", 2)
    predictions = np.full((H, N), NOT_EVALUATED, dtype=np.int64)
    mask = np.zeros((H, N), dtype=bool)
    for h in range(H):
        lineno = h + 3
        row = _parse_int_row(lines[h + 2], lineno, allow_empty=True)
        if len(row) != N:
            raise ParseError(f"dimension mismatch: expected {N} cells, got {len(row)}", lineno)
        for i, cell in enumerate(row):
            if cell is None:
                continue
            if not 0 <= cell < C:
                raise ParseError(f"label {cell} out of range [0, {C})", lineno)
            predictions[h, i] = cell
            mask[h, i] = True
    for i, y in enumerate(truth):
        if not 0 <= y < C:
            raise ParseError(f"truth label {y} out of range [0, {C})", 2)
    return PredictionTable(predictions, np.asarray(truth), mask, C)


def format_prediction_table(table):
    buf = io.StringIO()
    buf.write(f"{table.n_hypotheses},{table.n_points},{table.n_classes}\n")
    buf.write(",".join(str(int(y)) for y in table.truth) + "\n")
    for preds, mask in zip(table.predictions, table.oob_mask):
        buf.write(",".join(str(int(p)) if m else "" for p, m in zip(preds, mask)) + "\n")
    return buf.getvalue()


def write_prediction_table(table, path):
    """Write ``table``; only predictions inside validation sets are stored."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_prediction_table(table))


def stratified_split(dataset, test_fraction, seed):
    """Split into (train, test) keeping per-class proportions.

    Each class contributes ``round(n_c * test_fraction)`` points to the test
    part. Returns the two datasets; the index arrays are available through
    :func:`stratified_split_indices`.
    """
    train_idx, test_idx = stratified_split_indices(dataset.labels, test_fraction, seed)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def stratified_split_indices(labels, test_fraction, seed):
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            raise ValueError(f"class {c} has fewer than 2 points")
        idx = rng.permutation(idx)
        k = int(round(idx.size * test_fraction))
        test.append(idx[:k])
        train.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def make_synthetic(n_points=3000, n_features=10, n_classes=2, n_informative=5, separation=2.5, seed=0):
    """Noisy multi-class problem with partly redundant features.

    Class centres are Gaussian with scale ``separation`` in the first
    ``n_informative`` coordinates; the next coordinates are noisy copies of
    those and the rest is noise. 5% of the labels are redrawn at random.
    Depth-limited trees reach moderate individual accuracy, which leaves
    room for the vote.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(n_classes, size=n_points)
    n_informative = min(n_features, n_informative)
    centres = rng.normal(scale=separation, size=(n_classes, n_informative))
    X = rng.normal(size=(n_points, n_features))
    X[:, :n_informative] += centres[labels]
    n_copies = min(n_features - n_informative, n_informative)
    X[:, n_informative:n_informative + n_copies] = (
        X[:, :n_copies] + rng.normal(scale=0.8, size=(n_points, n_copies))
    )
    flip = rng.random(n_points) < 0.05
    labels = np.where(flip, rng.integers(n_classes, size=n_points), labels)
    return Dataset(np.round(X, 6), labels, n_classes, tuple(range(n_classes)))


_SYNTHETIC_PATH = os.path.join(os.path.dirname(__file__), "data", "synthetic3000.libsvm")


def load_synthetic():
    """The bundled 3,000-point two-class synthetic dataset."""
    return read_libsvm(_SYNTHETIC_PATH)
