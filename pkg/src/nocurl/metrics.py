"""Structural Hamming distance between two graph patterns."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import DimensionError, as_square
from .objectives import Dataset, least_squares_loss


@dataclass(frozen=True)
class ShdReport:
    shd: int
    extra: int
    missing: int
    reverse: int

    def as_dict(self) -> dict:
        return asdict(self)


def shd(a_hat, a_true) -> ShdReport:
    """Compare nonzero patterns.

    A predicted edge whose flip is a true edge counts as reversed, a
    predicted edge absent in both orientations as extra, and a true edge
    absent in both orientations from the prediction as missing.
    """
    pred = as_square(a_hat, "a_hat") != 0
    true = as_square(a_true, "a_true") != 0
    if pred.shape != true.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {true.shape}")
    reverse = int(np.sum(pred & ~true & true.T))
    extra = int(np.sum(pred & ~true & ~true.T))
    missing = int(np.sum(true & ~pred & ~pred.T))
    return ShdReport(extra + missing + reverse, extra, missing, reverse)


def delta_f(a_hat, a_true, data: Dataset) -> float:
    """Loss of the learned graph minus loss of the ground truth on the same data."""
    return least_squares_loss(a_hat, data) - least_squares_loss(a_true, data)
