"""Cross-modality clustering-based self-labeling for multimodal feature data."""

from ._validation import BudgetError, DataError
from .dataset import (
    FoldPair,
    ModalitySpec,
    ModalityView,
    MultimodalDataset,
    SyntheticSpec,
    load_multimodal,
    make_synthetic,
    save_multimodal,
    stratified_two_fold,
)
from .preprocess import ModalityScaler, PreprocessKind, apply_scaler, fit_scaler, l2_normalize_rows
from .propagate import CrossModalSelfLabeling, PseudoLabeling, cmcsl, unimodal_pseudolabels

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "DataError",
    "FoldPair",
    "ModalitySpec",
    "ModalityView",
    "MultimodalDataset",
    "SyntheticSpec",
    "load_multimodal",
    "make_synthetic",
    "save_multimodal",
    "stratified_two_fold",
    "ModalityScaler",
    "PreprocessKind",
    "apply_scaler",
    "fit_scaler",
    "l2_normalize_rows",
    "CrossModalSelfLabeling",
    "PseudoLabeling",
    "cmcsl",
    "unimodal_pseudolabels",
]
