"""Datasets: synthetic function regression, CSV tables with k-fold CV,
IDX image files, and normalizers.

The built-in catalog covers 17 elementary functions of x+y (E.0-E.16),
17 composites of the same (C.0-C.16), and a subset of physics equations
(F.* ids).  Each function samples its inputs uniformly inside declared
per-variable ranges and splits 50:50 into train/test.
"""

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PolyfabError
from .tensorops import make_rng

RANGE_INSET = 1e-9


@dataclass
class FunctionDef:
    id: str
    arity: int
    fn: callable
    ranges: list  # one (lo, hi) per variable
    range_defaulted: bool = False  # true when the source gives no range

    def __post_init__(self):
        if len(self.ranges) != self.arity:
            raise ConfigError(f"{self.id}: need one range per variable")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    split: str = "train"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.shape[0] != self.y.shape[0]:
            raise ConfigError("feature and target row counts disagree")

    def __len__(self):
        return self.X.shape[0]


def _f2(fid, fn, lo=0.0, hi=1.0):
    return FunctionDef(fid, 2, lambda X: fn(X[:, 0] + X[:, 1]), [(lo, hi)] * 2)


def _feyn(fid, arity, fn, ranges, defaulted=False):
    return FunctionDef(fid, arity, fn, ranges, range_defaulted=defaulted)


def builtin_functions():
    """Catalog of built-in target functions keyed by id."""
    fs = [
        _f2("E.0", lambda s: s),
        _f2("E.1", lambda s: 1.0 / s),
        _f2("E.2", lambda s: s ** 2),
        _f2("E.3", np.exp),
        _f2("E.4", np.log),
        _f2("E.5", np.sin),
        _f2("E.6", np.cos),
        _f2("E.7", np.tan),
        _f2("E.8", np.arcsin, 0.0, 0.5),
        _f2("E.9", np.arccos, 0.0, 0.5),
        _f2("E.10", np.arctan, 0.0, 0.5),
        _f2("E.11", np.sinh),
        _f2("E.12", np.cosh),
        _f2("E.13", np.tanh),
        _f2("E.14", np.arcsinh, 0.0, 0.5),
        _f2("E.15", np.arccosh, 0.5, 1.0),
        _f2("E.16", np.arctanh, 0.0, 0.5),
        _f2("C.0", lambda s: s + 1.0 / s),
        _f2("C.1", lambda s: s + s ** 2),
        _f2("C.2", lambda s: s ** 2 + np.exp(s)),
        _f2("C.3", lambda s: np.exp(s) + np.log(s)),
        _f2("C.4", lambda s: s ** 2 + np.sin(s)),
        _f2("C.5", lambda s: np.cos(s) + np.arccos(s), 0.0, 0.5),
        _f2("C.6", lambda s: np.exp(s) / s),
        _f2("C.7", lambda s: s ** 2 * np.log(s)),
        _f2("C.8", lambda s: s * np.sin(s)),
        _f2("C.9", lambda s: np.exp(s) * np.log(s)),
        _f2("C.10", lambda s: np.sin(s) * np.sinh(s)),
        _f2("C.11", lambda s: np.arccos(s) * np.arctanh(s), 0.0, 0.5),
        _f2("C.12", lambda s: np.exp(1.0 / s + np.exp(s)), 0.0, 0.5),
        _f2("C.13", lambda s: np.exp(np.sin(s) + np.cos(s))),
        _f2("C.14", lambda s: np.log(s ** 2 + np.exp(s)), 0.5, 1.0),
        _f2("C.15", lambda s: np.tan(np.exp(s) + np.log(s))),
        _f2("C.16", lambda s: 1.0 / (1.0 + np.exp(-s))),
        _feyn("F.I.6.2", 2,
              lambda X: np.exp(-X[:, 0] ** 2 / (2 * X[:, 1] ** 2))
              / (np.sqrt(2 * np.pi) * X[:, 1]),
              [(1, 3)] * 2),
        _feyn("F.I.6.2b", 3,
              lambda X: np.exp(-(X[:, 1] - X[:, 2]) ** 2 / (2 * X[:, 0] ** 2))
              / (np.sqrt(2 * np.pi) * X[:, 0]),
              [(1, 3)] * 3),
        _feyn("F.I.9.18", 9,
              lambda X: X[:, 0] * X[:, 1] * X[:, 2] / (
                  (X[:, 3] - X[:, 6]) ** 2 + (X[:, 4] - X[:, 7]) ** 2
                  + (X[:, 5] - X[:, 8]) ** 2),
              [(1, 2)] * 6 + [(3, 4)] * 3),
        _feyn("F.I.12.11", 5,
              lambda X: X[:, 0] * (X[:, 1] + X[:, 2] * X[:, 3] * np.sin(X[:, 4])),
              [(1, 5)] * 5),
        _feyn("F.I.15.3x", 4,
              lambda X: (X[:, 0] - X[:, 1] * X[:, 3])
              / np.sqrt(1 - X[:, 1] ** 2 / X[:, 2] ** 2),
              [(5, 10), (1, 2), (3, 20), (1, 2)]),
        _feyn("F.I.16.6", 3,
              lambda X: (X[:, 1] + X[:, 2]) / (1 + X[:, 1] * X[:, 2] / X[:, 0] ** 2),
              [(1, 5)] * 3),
        _feyn("F.I.18.4", 4,
              lambda X: (X[:, 0] * X[:, 2] + X[:, 1] * X[:, 3]) / (X[:, 0] + X[:, 1]),
              [(1, 5)] * 4),
        _feyn("F.I.26.2", 2,
              lambda X: np.arcsin(X[:, 0] * np.sin(X[:, 1])),
              [(0, 1), (1, 5)]),
        _feyn("F.I.27.6", 3,
              lambda X: 1.0 / (1.0 / X[:, 0] + X[:, 2] / X[:, 1]),
              [(1, 5)] * 3),
        _feyn("F.I.29.16", 4,
              lambda X: np.sqrt(X[:, 0] ** 2 + X[:, 1] ** 2
                                - 2 * X[:, 0] * X[:, 1] * np.cos(X[:, 2] - X[:, 3])),
              [(1, 5)] * 4),
        _feyn("F.I.30.5", 3,
              lambda X: np.arcsin(X[:, 0] / (X[:, 2] * X[:, 1])),
              [(1, 2), (2, 5), (1, 5)]),
        _feyn("F.I.37.4", 3,
              lambda X: X[:, 0] + X[:, 1]
              + 2 * np.sqrt(X[:, 0] * X[:, 1]) * np.cos(X[:, 2]),
              [(1, 5)] * 3),
        _feyn("F.I.44.4", 5,
              lambda X: X[:, 0] * X[:, 1] * X[:, 2] * np.log(X[:, 4] / X[:, 3]),
              [(1, 5)] * 5),
        _feyn("F.I.50.26", 4,
              lambda X: X[:, 0] * (np.cos(X[:, 1] * X[:, 2])
                                   + X[:, 3] * np.cos(X[:, 1] * X[:, 2]) ** 2),
              [(1, 5)] * 4, defaulted=True),
        _feyn("F.II.2.42", 5,
              lambda X: X[:, 0] * (X[:, 2] - X[:, 1]) * X[:, 3] / X[:, 4],
              [(1, 3)] * 5),
        _feyn("F.II.38.3", 4,
              lambda X: X[:, 0] * X[:, 1] * X[:, 3] / X[:, 2],
              [(1, 5)] * 4),
        _feyn("F.III.10.19", 4,
              lambda X: X[:, 0] * np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2 + X[:, 3] ** 2),
              [(1, 5)] * 4),
        _feyn("F.III.17.37", 3,
              lambda X: X[:, 0] * (1 + X[:, 1] * np.cos(X[:, 2])),
              [(1, 5)] * 3),
    ]
    return {f.id: f for f in fs}


def gen_function_dataset(fdef, n=2000, seed=0):
    """Sample n points uniformly inside the declared ranges, split 50:50.

    Ranges are treated as open: sampling uses a half-open interval with a
    tiny inset at the lower end so endpoint singularities never appear.
    Returns (train, test) Datasets.
    """
    rng = make_rng(seed)
    cols = [rng.uniform(lo + RANGE_INSET, hi, size=n) for lo, hi in fdef.ranges]
    X = np.stack(cols, axis=1)
    y = np.asarray(fdef.fn(X), dtype=np.float64).reshape(n, 1)
    if not np.all(np.isfinite(y)):
        raise PolyfabError(f"{fdef.id}: non-finite target values in the declared range")
    half = n // 2
    return (Dataset(X[:half], y[:half], "train"),
            Dataset(X[half:], y[half:], "test"))


def load_csv(path, label_column, k_folds=10, seed=0):
    """Load a numeric CSV with a header row into stratified CV folds.

    The label column may hold class names (mapped to indices in sorted
    order) or numbers.  Returns a list of (train, test) Dataset pairs;
    k_folds=1 returns a single pair with test == train.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PolyfabError(f"{path}: empty file")
    header = rows[0]
    if label_column not in header:
        raise PolyfabError(f"{path}: label column {label_column!r} not in header {header}")
    li = header.index(label_column)
    feats, labels = [], []
    width = len(header)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise PolyfabError(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
        vals = []
        for ci, cell in enumerate(row):
            if ci == li:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise PolyfabError(
                    f"{path}:{lineno}: non-numeric cell {cell!r} in column {header[ci]!r}")
        feats.append(vals)
        labels.append(row[li])
    X = np.asarray(feats, dtype=np.float64)
    raw = labels
    try:
        y = np.asarray([float(v) for v in raw])
        if np.all(y == y.astype(int)):
            y = y.astype(int)
    except ValueError:
        classes = sorted(set(raw))
        lut = {c: i for i, c in enumerate(classes)}
        y = np.asarray([lut[v] for v in raw])

    if k_folds == 1:
        ds = Dataset(X, y, "train")
        return [(ds, Dataset(X, y, "test"))]
    # stratified fold assignment for class labels: shuffle within each
    # class, deal round-robin.  Continuous targets get plain shuffled folds.
    rng = make_rng(seed)
    fold_of = np.zeros(len(y), dtype=int)
    if np.issubdtype(y.dtype, np.integer):
        for cls in np.unique(y):
            idx = np.where(y == cls)[0]
            idx = idx[rng.permutation(len(idx))]
            fold_of[idx] = np.arange(len(idx)) % k_folds
    else:
        idx = rng.permutation(len(y))
        fold_of[idx] = np.arange(len(y)) % k_folds
    folds = []
    for k in range(k_folds):
        te = fold_of == k
        tr = ~te
        folds.append((Dataset(X[tr], y[tr], "train"), Dataset(X[te], y[te], "test")))
    return folds


IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801


def _read_idx(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4:
        raise PolyfabError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", blob[:4])[0]
    if magic == IDX_MAGIC_IMAGES:
        ndim = 3
    elif magic == IDX_MAGIC_LABELS:
        ndim = 1
    else:
        raise PolyfabError(f"{path}: bad IDX magic 0x{magic:08x}")
    head = 4 + 4 * ndim
    if len(blob) < head:
        raise PolyfabError(f"{path}: truncated IDX dimension header")
    dims = struct.unpack(f">{ndim}I", blob[4:head])
    count = int(np.prod(dims))
    if len(blob) != head + count:
        raise PolyfabError(f"{path}: payload size {len(blob) - head} != expected {count}")
    return np.frombuffer(blob, dtype=np.uint8, offset=head).reshape(dims)


def load_idx(images_path, labels_path):
    """Read paired IDX image/label files into a flat-feature Dataset.

    Pixels are scaled to [0, 1]; images are flattened row-major.
    """
    images = _read_idx(images_path)
    labels = _read_idx(labels_path)
    if images.ndim != 3:
        raise PolyfabError(f"{images_path}: expected an image file")
    if labels.ndim != 1 or labels.shape[0] != images.shape[0]:
        raise PolyfabError("image and label counts disagree")
    X = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(X, labels.astype(int))


def downsample(X, factor=2, side=None):
    """Average-pool square images stored as flat rows by an integer factor."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if side is None:
        side = int(round(np.sqrt(d)))
    if side * side != d or side % factor:
        raise ConfigError(f"cannot pool {d} features as a square image by factor {factor}")
    s = side // factor
    img = X.reshape(n, s, factor, s, factor)
    return img.mean(axis=(2, 4)).reshape(n, s * s)


class MeanStd:
    """(x - mean) / std normalizer; fit on the train split only.

    per_feature=False uses one global mean/std scalar pair (the usual
    image convention).
    """

    def __init__(self, per_feature=True):
        self.per_feature = per_feature
        self.mean = None
        self.std = None

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        axis = 0 if self.per_feature else None
        self.mean = X.mean(axis=axis)
        self.std = X.std(axis=axis)
        self.std = np.where(np.asarray(self.std) == 0, 1.0, self.std)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def inverse(self, Z):
        return np.asarray(Z) * self.std + self.mean


class MinMax:
    """Scale features to [0, 1] using train-split extremes."""

    def __init__(self):
        self.lo = None
        self.span = None

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        self.lo = X.min(axis=0)
        span = X.max(axis=0) - self.lo
        self.span = np.where(span == 0, 1.0, span)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.lo) / self.span

    def inverse(self, Z):
        return np.asarray(Z) * self.span + self.lo


def export_csv(path, X, y, feature_names=None, label_name="target"):
    """Write a feature matrix plus targets as a headered CSV file."""
    X = np.asarray(X)
    y = np.asarray(y).reshape(X.shape[0], -1)
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(X.shape[1])]
    labels = [label_name] if y.shape[1] == 1 else [
        f"{label_name}{i}" for i in range(y.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(feature_names) + labels)
        for xi, yi in zip(X, y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(v)) for v in yi])
