"""Clustering-based self-labeling with cross-modal label resolution.

A small budget of true labels is bought per class.  The labeled instances
become fixed centroids in every modality; each instance joins the cluster of
its nearest centroid (one k-means assignment pass, no centroid update) and
inherits that centroid's label.  Where modalities disagree, the label comes
from the modality in which the instance lies closest to its own centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import BudgetError, DataError, check_labels, check_matrix, check_views
from .preprocess import PreprocessKind, apply_scaler, fit_scaler

__all__ = [
    "PRELABELED",
    "AGREED",
    "PROPAGATED",
    "CentroidSet",
    "ClusterAssignment",
    "PseudoLabeling",
    "select_prelabeled",
    "assign_clusters",
    "propagate_labels",
    "resolve_cross_modal",
    "propagate_views",
    "cmcsl",
    "unimodal_pseudolabels",
    "CrossModalSelfLabeling",
]

# Provenance codes; a value k >= 0 means "resolved from modality k".
PRELABELED = -1
AGREED = -2
PROPAGATED = -3

# Upper bound on the size of the (rows, centroids, features) difference block.
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class CentroidSet:
    """Pre-labeled instances acting as fixed cluster centers.

    ``indices`` point into the training partition and are grouped by class in
    ascending class order; ``coordinates`` (one ``c x d_m`` array per modality)
    is filled by :meth:`with_coordinates`.
    """

    indices: np.ndarray
    labels: np.ndarray
    b_class: int
    coordinates: tuple = None

    @property
    def c(self):
        return self.indices.shape[0]

    def with_coordinates(self, views):
        coords = tuple(np.asarray(X)[self.indices] for X in views)
        return CentroidSet(self.indices, self.labels, self.b_class, coords)


@dataclass(frozen=True)
class ClusterAssignment:
    assignment: np.ndarray
    distances: np.ndarray


@dataclass(frozen=True)
class PseudoLabeling:
    """Pseudo-labels for a training partition.

    Attributes
    ----------
    labels : ndarray of int, shape (n,)
        Final pseudo-label per instance.
    provenance : ndarray of int, shape (n,)
        ``PRELABELED``, ``AGREED``, ``PROPAGATED`` (single-modality labeling)
        or the index of the modality a disputed label was taken from.
    raw_labels : ndarray of int, shape (n_modalities, n)
        Per-modality propagated labels before resolution.
    distances : ndarray of float, shape (n_modalities, n)
        Distance of each instance to its own centroid in each modality.
    prelabeled : ndarray of int
        Training-partition indices of the pre-labeled instances.
    """

    labels: np.ndarray
    provenance: np.ndarray
    raw_labels: np.ndarray
    distances: np.ndarray
    prelabeled: np.ndarray

    @property
    def resolved_mask(self):
        return self.provenance >= 0

    @property
    def resolved_fraction(self):
        return float(np.mean(self.resolved_mask)) if self.labels.size else 0.0

    @property
    def agreed_fraction(self):
        return float(np.mean(self.provenance == AGREED)) if self.labels.size else 0.0

    def tags(self):
        names = {PRELABELED: "prelabeled", AGREED: "agreed", PROPAGATED: "propagated"}
        return [names.get(int(p), f"resolved:{int(p)}") for p in self.provenance]


def select_prelabeled(labels, n_classes, b_class, rng_seed):
    """Draw ``b_class`` instances per class uniformly without replacement."""
    y = check_labels(labels, n_classes=n_classes)
    b_class = int(b_class)
    if b_class < 1:
        raise ValueError(f"b_class must be >= 1, got {b_class}")
    rng = np.random.default_rng(rng_seed)
    chosen = []
    for k in range(n_classes):
        members = np.flatnonzero(y == k)
        if members.size < b_class:
            raise BudgetError(k, members.size, b_class)
        chosen.append(rng.choice(members, size=b_class, replace=False))
    indices = np.concatenate(chosen).astype(np.int64)
    return CentroidSet(indices, y[indices], b_class)


def assign_clusters(X, centroids):
    """Assign each row of ``X`` to its nearest centroid (Euclidean).

    Distances are formed from explicit coordinate differences so that a
    centroid's own row has distance exactly 0.  Ties go to the lowest
    centroid index.
    """
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(centroids, dtype=np.float64)
    if X.ndim != 2 or C.ndim != 2 or X.shape[1] != C.shape[1]:
        raise DataError(f"incompatible shapes {X.shape} and {C.shape}")
    if C.shape[0] == 0:
        raise DataError("at least one centroid is required")
    n = X.shape[0]
    assignment = np.empty(n, dtype=np.int64)
    sq = np.empty(n, dtype=np.float64)
    step = max(1, _BLOCK_ELEMENTS // max(1, C.shape[0] * C.shape[1]))
    for start in range(0, n, step):
        block = X[start:start + step]
        diff = block[:, None, :] - C[None, :, :]
        d2 = np.einsum("ncd,ncd->nc", diff, diff)
        best = np.argmin(d2, axis=1)
        assignment[start:start + step] = best
        sq[start:start + step] = d2[np.arange(block.shape[0]), best]
    return ClusterAssignment(assignment, np.sqrt(sq))


def propagate_labels(assignment, centroid_labels):
    """Give every instance the label of its assigned centroid."""
    idx = assignment.assignment if isinstance(assignment, ClusterAssignment) else assignment
    return np.asarray(centroid_labels, dtype=np.int64)[np.asarray(idx)]


def resolve_cross_modal(raw_labels, distances, prelabeled=None):
    """Merge per-modality labels into one shared labeling.

    Instances whose modalities all agree keep that label; the rest take the
    label of the modality with the smallest distance to its own centroid
    (lowest modality index on ties).  Indices in ``prelabeled`` are tagged as
    such; they are their own centroids and therefore always agree.
    """
    raw = np.atleast_2d(np.asarray(raw_labels, dtype=np.int64))
    dist = np.atleast_2d(np.asarray(distances, dtype=np.float64))
    if raw.shape != dist.shape:
        raise DataError(f"labels {raw.shape} and distances {dist.shape} differ in shape")
    agree = np.all(raw == raw[0], axis=0)
    winner = np.argmin(dist, axis=0)
    cols = np.arange(raw.shape[1])
    labels = np.where(agree, raw[0], raw[winner, cols])
    provenance = np.where(agree, AGREED, winner).astype(np.int64)
    pre = np.array([], dtype=np.int64) if prelabeled is None else np.asarray(prelabeled, dtype=np.int64)
    provenance[pre] = PRELABELED
    return PseudoLabeling(labels, provenance, raw, dist, pre)


def propagate_views(views, centroid_set):
    """Run assignment and propagation in every (already preprocessed) view.

    Returns ``(raw_labels, distances)``, each of shape ``(n_modalities, n)``.
    """
    idx = centroid_set.indices
    raw, dist = [], []
    for X in views:
        X = np.asarray(X, dtype=np.float64)
        result = assign_clusters(X, X[idx])
        # a centroid row always belongs to its own cluster, even when another
        # centroid shares its coordinates
        result.assignment[idx] = np.arange(idx.size)
        result.distances[idx] = 0.0
        raw.append(propagate_labels(result, centroid_set.labels))
        dist.append(result.distances)
    return np.vstack(raw), np.vstack(dist)


def unimodal_labeling(raw_labels, distances, modality, prelabeled):
    """PseudoLabeling holding one modality's propagated labels, no exchange."""
    raw = np.atleast_2d(raw_labels)
    prov = np.full(raw.shape[1], PROPAGATED, dtype=np.int64)
    pre = np.asarray(prelabeled, dtype=np.int64)
    prov[pre] = PRELABELED
    return PseudoLabeling(raw[modality].copy(), prov, raw, np.atleast_2d(distances), pre)


def _preprocess_views(views, kind):
    kind = PreprocessKind.parse(kind)
    return [apply_scaler(fit_scaler(kind, X), X) for X in views]


def _prepare(dataset, b_class, kind, rng_seed):
    centroids = select_prelabeled(dataset.labels, dataset.n_classes, b_class, rng_seed)
    views = _preprocess_views(dataset.views, kind)
    raw, dist = propagate_views(views, centroids)
    return centroids, raw, dist


def cmcsl(dataset, b_class, preprocess=PreprocessKind.L2STD, rng_seed=0):
    """Cross-modal pseudo-labels for a training partition ``dataset``."""
    centroids, raw, dist = _prepare(dataset, b_class, preprocess, rng_seed)
    return resolve_cross_modal(raw, dist, centroids.indices)


def unimodal_pseudolabels(dataset, modality, b_class, preprocess=PreprocessKind.L2STD, rng_seed=0):
    """Propagated labels of a single modality, drawn with the same centroids as :func:`cmcsl`."""
    centroids, raw, dist = _prepare(dataset, b_class, preprocess, rng_seed)
    return unimodal_labeling(raw, dist, modality, centroids.indices)


class CrossModalSelfLabeling(BaseEstimator):
    """Transductive self-labeler for paired modality matrices.

    Parameters
    ----------
    b_class : int, default=1
        Number of instances per class whose true label is revealed.
    preprocess : {"raw", "l2", "std", "mm", "l2std"}, default="l2std"
        Preprocessing applied to each modality before distances are taken.
    modality : int or None, default=None
        ``None`` exchanges labels across modalities; an integer returns the
        labels propagated within that modality alone.
    random_state : int, default=0
        Seed for the pre-label draw.

    Attributes
    ----------
    centroids_ : CentroidSet
    labeling_ : PseudoLabeling
    transduction_ : ndarray of shape (n_samples,)

    Examples
    --------
    >>> labeler = CrossModalSelfLabeling(b_class=2, random_state=3)
    >>> y_pseudo = labeler.fit_predict([X_visual, X_text], y)  # doctest: +SKIP
    """

    def __init__(self, b_class=1, preprocess="l2std", modality=None, random_state=0):
        self.b_class = b_class
        self.preprocess = preprocess
        self.modality = modality
        self.random_state = random_state

    def fit(self, Xs, y, n_classes=None):
        """Fit on a list of modality matrices ``Xs`` and the full label vector ``y``.

        Only the labels of the drawn pre-labeled instances are read.
        """
        views = check_views(Xs)
        y = check_labels(y, n_samples=views[0].shape[0])
        n_classes = int(y.max()) + 1 if n_classes is None else int(n_classes)
        if self.modality is not None and not 0 <= self.modality < len(views):
            raise ValueError(f"modality {self.modality} out of range for {len(views)} views")
        self.centroids_ = select_prelabeled(y, n_classes, self.b_class, self.random_state)
        kind = PreprocessKind.parse(self.preprocess)
        self.scalers_ = [fit_scaler(kind, X) for X in views]
        pre = [apply_scaler(s, X) for s, X in zip(self.scalers_, views)]
        self.centroids_ = self.centroids_.with_coordinates(pre)
        raw, dist = propagate_views(pre, self.centroids_)
        if self.modality is None:
            self.labeling_ = resolve_cross_modal(raw, dist, self.centroids_.indices)
        else:
            self.labeling_ = unimodal_labeling(raw, dist, self.modality, self.centroids_.indices)
        self.transduction_ = self.labeling_.labels
        self.n_classes_ = n_classes
        return self

    def fit_predict(self, Xs, y, n_classes=None):
        return self.fit(Xs, y, n_classes).transduction_

    def predict(self, Xs):
        """Label new paired instances with the fitted centroids and scalers."""
        check_is_fitted(self, "labeling_")
        views = check_views(Xs)
        if len(views) != len(self.scalers_):
            raise DataError(f"expected {len(self.scalers_)} modalities, got {len(views)}")
        raw, dist = [], []
        for scaler, X, C in zip(self.scalers_, views, self.centroids_.coordinates):
            result = assign_clusters(apply_scaler(scaler, check_matrix(X)), C)
            raw.append(propagate_labels(result, self.centroids_.labels))
            dist.append(result.distances)
        if self.modality is not None:
            return raw[self.modality]
        return resolve_cross_modal(np.vstack(raw), np.vstack(dist)).labels
