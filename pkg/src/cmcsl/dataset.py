"""Multimodal dataset model, file ingestion, synthetic generation and fold splitting.

Instances are aligned across modalities by row index: row ``i`` of every
modality matrix and entry ``i`` of the label vector describe the same object.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import DataError, check_labels, check_matrix

__all__ = [
    "ModalityView",
    "MultimodalDataset",
    "FoldPair",
    "ModalitySpec",
    "SyntheticSpec",
    "load_multimodal",
    "save_multimodal",
    "read_feature_file",
    "write_binary",
    "read_binary",
    "make_synthetic",
    "stratified_two_fold",
]

BINARY_MAGIC = b"CMML"
BINARY_VERSION = 1
_BINARY_HEADER = struct.Struct("<4sBII")


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModalityView:
    name: str
    matrix: np.ndarray

    def __post_init__(self):
        X = check_matrix(self.matrix, name=f"modality {self.name!r}")
        if X.shape[1] < 1:
            raise DataError(f"modality {self.name!r} has no features")
        object.__setattr__(self, "matrix", _frozen(X))

    @property
    def d(self):
        return self.matrix.shape[1]

    def __len__(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MultimodalDataset:
    """``N`` paired instances observed through two or more modalities.

    Parameters
    ----------
    modalities : sequence of ModalityView
        At least two views, each with exactly ``N`` rows.
    labels : array-like of int, shape (N,)
        Class labels in ``0..n_classes-1``; every class must occur.
    n_classes : int, optional
        Inferred as ``max(labels) + 1`` when omitted.
    name : str
        Identifier used in experiment records and seed derivation.
    """

    modalities: tuple
    labels: np.ndarray
    n_classes: int = None
    name: str = "dataset"

    def __post_init__(self):
        mods = tuple(self.modalities)
        if len(mods) < 2:
            raise DataError(f"a multimodal dataset needs at least 2 modalities, got {len(mods)}")
        n = len(mods[0])
        for view in mods:
            if len(view) != n:
                raise DataError(
                    f"row-count mismatch: modality {view.name!r} has {len(view)} rows, "
                    f"modality {mods[0].name!r} has {n}"
                )
        names = [v.name for v in mods]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate modality names: {names}")
        y = check_labels(self.labels, n_samples=n)
        if y.size and y.min() < 0:
            raise DataError("labels must be non-negative")
        n_classes = int(y.max()) + 1 if self.n_classes is None else int(self.n_classes)
        y = check_labels(y, n_classes=n_classes)
        counts = np.bincount(y, minlength=n_classes)
        if np.any(counts == 0):
            raise DataError(f"class {int(np.flatnonzero(counts == 0)[0])} never occurs in labels")
        object.__setattr__(self, "modalities", mods)
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "n_classes", n_classes)

    @property
    def n_samples(self):
        return self.labels.shape[0]

    @property
    def views(self):
        return [v.matrix for v in self.modalities]

    @property
    def modality_names(self):
        return [v.name for v in self.modalities]

    def subset(self, indices):
        """Return the instances at ``indices`` as a new dataset (classes kept)."""
        idx = np.asarray(indices, dtype=np.int64)
        return MultimodalDataset(
            modalities=tuple(ModalityView(v.name, v.matrix[idx]) for v in self.modalities),
            labels=self.labels[idx],
            n_classes=self.n_classes,
            name=self.name,
        )


@dataclass(frozen=True)
class FoldPair:
    fold_a: np.ndarray
    fold_b: np.ndarray

    def __iter__(self):
        # (train, test) in both directions, the 2-fold CV order
        yield self.fold_a, self.fold_b
        yield self.fold_b, self.fold_a


# --------------------------------------------------------------------------
# File formats


def _parse_csv_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: file is empty")

    def numeric(row):
        try:
            [float(c) for c in row]
        except ValueError:
            return False
        return True

    if not numeric(rows[0]):
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=1):
        if not numeric(row):
            raise DataError(f"{path}: non-numeric value in data row {lineno}")
    return rows


def read_feature_file(path):
    """Read one modality matrix from a CSV or ``CMML`` binary file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    if path.suffix.lower() in (".cmml", ".bin"):
        return read_binary(path)
    rows = _parse_csv_rows(path)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: rows have differing lengths {sorted(widths)}")
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        r, c = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"{path}: non-finite value at data row {r + 1}, column {c + 1}")
    return X


def _read_labels(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    rows = _parse_csv_rows(path)
    if any(len(r) != 1 for r in rows):
        raise DataError(f"{path}: labels file must hold one value per row")
    values = np.array([float(r[0]) for r in rows])
    if not np.all(np.isfinite(values)) or np.any(values != np.round(values)) or np.any(values < 0):
        raise DataError(f"{path}: labels must be non-negative integers")
    return values.astype(np.int64)


def write_binary(path, X):
    X = np.ascontiguousarray(X, dtype="<f8")
    n, d = X.shape
    with open(path, "wb") as fh:
        fh.write(_BINARY_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, n, d))
        fh.write(X.tobytes(order="C"))


def read_binary(path):
    raw = Path(path).read_bytes()
    if len(raw) < _BINARY_HEADER.size:
        raise DataError(f"{path}: truncated binary header")
    magic, version, n, d = _BINARY_HEADER.unpack_from(raw)
    if magic != BINARY_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise DataError(f"{path}: unsupported binary version {version}")
    body = raw[_BINARY_HEADER.size:]
    if len(body) != 8 * n * d:
        raise DataError(f"{path}: expected {n}x{d} float64 values, got {len(body)} bytes")
    X = np.frombuffer(body, dtype="<f8").reshape(n, d).astype(np.float64)
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite value")
    return X


def load_multimodal(manifest_path):
    """Load a dataset described by a JSON manifest.

    The manifest holds ``name``, ``labels`` (path) and ``modalities``, a list of
    ``{"name", "path"}`` objects; paths are resolved relative to the manifest.
    An optional integer ``n_classes`` overrides label-based inference.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"missing file: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON ({exc.msg}, line {exc.lineno})") from exc
    for key in ("labels", "modalities"):
        if key not in manifest:
            raise DataError(f"{manifest_path}: manifest lacks key {key!r}")
    entries = manifest["modalities"]
    if not isinstance(entries, list) or len(entries) < 2:
        raise DataError(f"{manifest_path}: at least 2 modalities are required")
    base = manifest_path.parent
    labels = _read_labels(base / manifest["labels"])
    views = []
    for m, entry in enumerate(entries):
        if "path" not in entry:
            raise DataError(f"{manifest_path}: modality {m} lacks 'path'")
        X = read_feature_file(base / entry["path"])
        views.append(ModalityView(str(entry.get("name", f"m{m}")), X))
    return MultimodalDataset(
        modalities=tuple(views),
        labels=labels,
        n_classes=manifest.get("n_classes"),
        name=str(manifest.get("name", manifest_path.stem)),
    )


def save_multimodal(dataset, out_dir, binary=False):
    """Write ``dataset`` as CSV (or ``CMML`` binary) files plus ``manifest.json``.

    Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels_file = "labels.csv"
    np.savetxt(out / labels_file, dataset.labels, fmt="%d")
    entries = []
    for view in dataset.modalities:
        if binary:
            fname = f"{view.name}.cmml"
            write_binary(out / fname, view.matrix)
        else:
            fname = f"{view.name}.csv"
            header = ",".join(f"f{j}" for j in range(view.d))
            np.savetxt(out / fname, view.matrix, fmt="%.17g", delimiter=",",
                       header=header, comments="")
        entries.append({"name": view.name, "path": fname})
    manifest = {
        "name": dataset.name,
        "n_classes": dataset.n_classes,
        "labels": labels_file,
        "modalities": entries,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


# --------------------------------------------------------------------------
# Synthetic data


@dataclass(frozen=True)
class ModalitySpec:
    name: str
    d: int
    separation: float
    std: float = 1.0

    @classmethod
    def parse(cls, text):
        """Parse ``name:d:separation:std`` (std optional, default 1)."""
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValueError(f"modality spec {text!r} is not name:d:separation[:std]")
        std = float(parts[3]) if len(parts) == 4 else 1.0
        return cls(parts[0], int(parts[1]), float(parts[2]), std)


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int = 2
    samples_per_class: int = 50
    modalities: tuple = field(default_factory=lambda: (
        ModalitySpec("visual", 8, 1.5), ModalitySpec("text", 8, 8.0)))
    seed: int = 0
    name: str = "synthetic"

    def validate(self):
        if self.n_classes < 2:
            raise ValueError("n_classes must be at least 2")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be positive")
        if len(self.modalities) < 2:
            raise ValueError("at least 2 modalities are required")
        for mod in self.modalities:
            if mod.d < self.n_classes:
                raise ValueError(
                    f"modality {mod.name!r}: d={mod.d} is below n_classes={self.n_classes}; "
                    "class centers need one axis each"
                )
            if mod.separation < 0:
                raise ValueError(f"modality {mod.name!r}: separation must be >= 0")
            if mod.std <= 0:
                raise ValueError(f"modality {mod.name!r}: std must be positive")


def make_synthetic(spec):
    """Draw isotropic Gaussian class blobs, one set per modality.

    Class ``k`` is centered at ``separation / sqrt(2) * e_k`` so that every pair
    of centers lies exactly ``separation`` apart.  The instance order is a
    seeded shuffle shared by all modalities.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_classes * spec.samples_per_class
    labels = np.repeat(np.arange(spec.n_classes), spec.samples_per_class)
    order = rng.permutation(n)
    labels = labels[order]
    views = []
    for mod in spec.modalities:
        centers = np.zeros((spec.n_classes, mod.d))
        centers[np.arange(spec.n_classes), np.arange(spec.n_classes)] = mod.separation / np.sqrt(2.0)
        X = centers[labels] + rng.normal(0.0, mod.std, size=(n, mod.d))
        views.append(ModalityView(mod.name, X))
    return MultimodalDataset(tuple(views), labels, spec.n_classes, spec.name)


# --------------------------------------------------------------------------
# Resampling


def stratified_two_fold(labels, rng_seed):
    """Split indices into two class-stratified halves.

    Within each class the members are shuffled; an odd member goes to
    ``fold_a`` for even class labels and to ``fold_b`` for odd ones.
    """
    y = check_labels(labels)
    rng = np.random.default_rng(rng_seed)
    fold_a, fold_b = [], []
    for k in np.unique(y):
        members = np.flatnonzero(y == k)
        if members.size < 2:
            raise DataError(f"class {int(k)} has {members.size} member(s); 2-fold CV needs at least 2")
        members = rng.permutation(members)
        half = members.size // 2
        if members.size % 2 and k % 2 == 0:
            half += 1
        fold_a.append(members[:half])
        fold_b.append(members[half:])
    return FoldPair(np.sort(np.concatenate(fold_a)), np.sort(np.concatenate(fold_b)))
