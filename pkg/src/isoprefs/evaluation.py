#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Detection quality and the axis-parallel baseline.

ROC AUC is computed as the Mann-Whitney rank statistic: the probability
that a random anomaly scores above a random genuine point, ties counting
one half.
"""
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from scipy.stats import mannwhitneyu
from sklearn.ensemble import IsolationForest

from isoprefs.exceptions import DegenerateLabelsError, ValidationError
from isoprefs.validation import (
    validate_points,
    validate_positive_int,
    validate_same_length,
    validate_seed,
)


def roc_auc(scores: Any, labels: Any) -> float:
    """Area under the ROC curve of ``scores`` against binary ``labels``.

    :param scores: Finite scores, higher meaning more anomalous
    :param labels: 1 for anomalies, 0 for genuine points

    :return: AUC in [0, 1]

    :raises DegenerateLabelsError: If only one class is present
    :raises ValidationError: On non-finite scores or non-binary labels

    Example::

        roc_auc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])  # 0.75
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    validate_same_length(scores, labels)
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite", field="scores")
    if not np.all(np.isin(labels, (0, 1))):
        raise ValidationError("labels must be 0 or 1", field="labels")
    positives = scores[labels == 1]
    negatives = scores[labels == 0]
    if len(positives) == 0 or len(negatives) == 0:
        raise DegenerateLabelsError()
    statistic = mannwhitneyu(positives, negatives, alternative="two-sided").statistic
    return float(statistic) / (len(positives) * len(negatives))


def score_map_auc(score_map: np.ndarray, gt_mask: np.ndarray) -> float:
    """Pixel ROC AUC of a score map, over the pixels that received a score."""
    score_map = np.asarray(score_map, dtype=np.float64)
    gt_mask = np.asarray(gt_mask, dtype=bool)
    if score_map.shape != gt_mask.shape:
        raise ValidationError("score map and mask differ in shape", field="gt_mask")
    scored = np.isfinite(score_map)
    return roc_auc(score_map[scored], gt_mask[scored].astype(np.int64))


def baseline_iforest(X: Any, t: int = 100, psi: int = 256, seed: Optional[int] = None) -> np.ndarray:
    """Axis-parallel isolation forest scores 2^(-E(D)/c(psi)).

    Trees are capped at depth ceil(log2 psi) on subsamples of
    min(psi, n) rows.

    :param X: Numeric matrix of shape (n, d)
    :param t: Number of trees
    :param psi: Subsample size
    :param seed: Random seed

    :return: Scores in (0, 1], higher meaning more anomalous
    """
    X = validate_points(X, min_rows=1, field="X")
    t = validate_positive_int(t, "t")
    psi = validate_positive_int(psi, "psi")
    forest = IsolationForest(
        n_estimators=t,
        max_samples=min(psi, len(X)),
        random_state=validate_seed(seed),
    )
    forest.fit(X)
    return -forest.score_samples(X)


@dataclass
class RunSummary:
    """Mean and sample standard deviation over repeated runs."""

    mean: float
    std: float
    runs: int

    def __str__(self) -> str:
        return f"{self.mean:.4f} ± {self.std:.4f} ({self.runs} runs)"


def summarize_runs(values: Sequence[float]) -> RunSummary:
    """Summarize per-run values; the std is 0 for a single run."""
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValidationError("no runs to summarize", field="values")
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    mean = float(np.mean(arr))
    return RunSummary(mean=mean, std=0.0 if math.isnan(std) else std, runs=int(arr.size))
