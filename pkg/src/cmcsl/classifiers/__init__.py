"""Base classifiers exposing per-class supports, plus fusion wrappers."""

from .cart import DecisionTree
from .fusion import EarlyFusionClassifier, LateFusionClassifier
from .gnb import GaussianNB
from .lr import LogisticRegression

__all__ = [
    "GaussianNB",
    "LogisticRegression",
    "DecisionTree",
    "LateFusionClassifier",
    "EarlyFusionClassifier",
    "CLASSIFIERS",
    "make_classifier",
    "gnb_fit",
    "lr_fit",
    "cart_fit",
]

CLASSIFIERS = {
    "gnb": GaussianNB,
    "lr": LogisticRegression,
    "cart": DecisionTree,
}


def make_classifier(tag, **params):
    """Instantiate a base classifier from its tag (``gnb``, ``lr``, ``cart``)."""
    try:
        cls = CLASSIFIERS[str(tag).lower()]
    except KeyError:
        raise ValueError(
            f"unknown classifier {tag!r}; expected one of {', '.join(CLASSIFIERS)}"
        ) from None
    return cls(**params)


def gnb_fit(X, y, n_classes=None):
    return GaussianNB().fit(X, y, n_classes=n_classes)


def lr_fit(X, y, n_classes=None):
    return LogisticRegression().fit(X, y, n_classes=n_classes)


def cart_fit(X, y, n_classes=None):
    return DecisionTree().fit(X, y, n_classes=n_classes)
