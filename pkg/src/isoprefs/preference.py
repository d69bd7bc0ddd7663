#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Preference embedding and preference-space distances.

A point is mapped to the preference space ``[0, 1]^m`` by evaluating its
residual to each of ``m`` sampled models: residuals above the inlier
threshold ``epsilon = k * sigma`` give 0, smaller ones give a Gaussian
preference (continuous mode) or 1 (binary mode).

Three distances suit this space: Jaccard (binary vectors), Ruzicka and
Tanimoto (continuous vectors). All three are metrics with range [0, 1].

Example::

    from isoprefs.preference import PreferenceConfig, embed, tanimoto

    config = PreferenceConfig(sigma=0.02, k_multiplier=3.0)
    P = embed(dataset, models, config)
    tanimoto(P.values[0], P.values[1])
"""
import math
import threading
from dataclasses import dataclass
from typing import Any, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist

from isoprefs.exceptions import ValidationError
from isoprefs.geometry import LabeledDataset, ModelInstance, residuals
from isoprefs.validation import (
    validate_choice,
    validate_positive_float,
    validate_same_length,
)

METRICS = ("jaccard", "ruzicka", "tanimoto", "euclidean")
MODES = ("continuous", "binary")


class CallCounter:
    """Thread-safe counter of distance evaluations."""

    def __init__(self) -> None:
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        """Number of distances evaluated since the last reset."""
        return self._count

    def increment(self, n: int = 1) -> None:
        with self._lock:
            self._count += n

    def reset(self) -> None:
        with self._lock:
            self._count = 0


# Every scalar or vectorized distance evaluation is counted here
DISTANCE_CALLS = CallCounter()


@dataclass
class PreferenceConfig:
    """Configuration of the preference function.

    Attributes:
        sigma: Noise standard deviation (> 0)
        k_multiplier: Inlier threshold multiple, epsilon = k * sigma (default: 3)
        mode: ``continuous`` (Gaussian preferences) or ``binary``
        dtype: Storage type of the preference matrix (default: float32)

    Example::

        config = PreferenceConfig(sigma=0.02, k_multiplier=3.0, mode="binary")
        config.epsilon()  # 0.06
    """

    sigma: float
    k_multiplier: float = 3.0
    mode: str = "continuous"
    dtype: str = "float32"

    def __post_init__(self) -> None:
        self.sigma = validate_positive_float(self.sigma, "sigma")
        self.k_multiplier = validate_positive_float(self.k_multiplier, "k_multiplier")
        self.mode = validate_choice(self.mode, "mode", MODES)

    def epsilon(self) -> float:
        """Inlier threshold k * sigma."""
        return self.k_multiplier * self.sigma

    @property
    def binary(self) -> bool:
        return self.mode == "binary"


@dataclass
class PreferenceMatrix:
    """Dense n x m matrix of preferences in [0, 1].

    Attributes:
        values: Array of shape (n, m)
        binary: Whether the entries are restricted to {0, 1}
    """

    values: np.ndarray
    binary: bool = False

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def nbytes(self) -> int:
        """Bytes used by the matrix storage."""
        return int(self.values.nbytes)

    def to_csv(self, path: str) -> int:
        """Dump the matrix, one row per point, 9 significant digits.

        :param path: Output CSV path

        :return: Number of rows written
        """
        from isoprefs.streaming import write_preference_csv

        return write_preference_csv(path, self.values)


def preference_value(delta: float, config: PreferenceConfig) -> float:
    """Preference of a point with residual ``delta`` to one model.

    :param delta: Non-negative finite residual
    :param config: Preference configuration

    :return: 0 above epsilon; otherwise exp(-delta² / (2 sigma²)) in
        continuous mode and 1 in binary mode

    Example::

        config = PreferenceConfig(sigma=1.0, k_multiplier=3.0)
        preference_value(1.0, config)  # 0.60653...
    """
    if not math.isfinite(delta) or delta < 0:
        raise ValidationError("delta must be finite and >= 0", field="delta", value=delta)
    if delta > config.epsilon():
        return 0.0
    if config.binary:
        return 1.0
    return math.exp(-(delta * delta) / (2.0 * config.sigma * config.sigma))


def preference_values(R: np.ndarray, config: PreferenceConfig) -> np.ndarray:
    """Vectorized :func:`preference_value` over a residual matrix."""
    R = np.asarray(R, dtype=np.float64)
    inlier = R <= config.epsilon()
    if config.binary:
        out = inlier.astype(config.dtype)
    else:
        out = np.where(inlier, np.exp(-(R * R) / (2.0 * config.sigma**2)), 0.0)
        out = out.astype(config.dtype)
    return out


def embed(
    data: Union[LabeledDataset, np.ndarray],
    models: Sequence[ModelInstance],
    config: PreferenceConfig,
) -> PreferenceMatrix:
    """Map every point to its preference vector over ``models``.

    Entry (j, i) is ``preference_value(residual(models[i], x_j), config)``.
    Rows depend only on their own point.

    :param data: Dataset or array of shape (n, d)
    :param models: Sampled models, all of one family
    :param config: Preference configuration

    :return: :class:`PreferenceMatrix` of shape (n, m)
    """
    X = data.points if isinstance(data, LabeledDataset) else np.asarray(data, dtype=np.float64)
    if len(models) == 0:
        return PreferenceMatrix(np.zeros((len(X), 0), dtype=config.dtype), config.binary)
    return PreferenceMatrix(preference_values(residuals(models, X), config), config.binary)


def _as_vectors(p: Any, q: Any) -> tuple:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    validate_same_length(p, q)
    return p, q


def jaccard(p: Any, q: Any) -> float:
    """Jaccard distance between two binary preference vectors.

    ``1 - |p and q| / |p or q|``; 0 when both vectors are all-zero.

    :raises LengthMismatchError: If the vectors differ in length
    :raises ValidationError: If an entry is not 0 or 1
    """
    p, q = _as_vectors(p, q)
    if not (np.all((p == 0) | (p == 1)) and np.all((q == 0) | (q == 1))):
        raise ValidationError("jaccard expects binary vectors", field="p")
    DISTANCE_CALLS.increment()
    pb, qb = p.astype(bool), q.astype(bool)
    union = np.count_nonzero(pb | qb)
    if union == 0:
        return 0.0
    return 1.0 - np.count_nonzero(pb & qb) / union


def ruzicka(p: Any, q: Any) -> float:
    """Ruzicka (generalized Jaccard) distance.

    ``1 - sum(min(p_i, q_i)) / sum(max(p_i, q_i))``; 0 when both are all-zero.

    :raises LengthMismatchError: If the vectors differ in length
    """
    p, q = _as_vectors(p, q)
    DISTANCE_CALLS.increment()
    smax = float(np.maximum(p, q).sum())
    if smax == 0.0:
        return 0.0
    return 1.0 - float(np.minimum(p, q).sum()) / smax


def tanimoto(p: Any, q: Any) -> float:
    """Tanimoto distance.

    ``1 - <p, q> / (|p|² + |q|² - <p, q>)``; 0 when both are all-zero.

    :raises LengthMismatchError: If the vectors differ in length
    """
    p, q = _as_vectors(p, q)
    DISTANCE_CALLS.increment()
    dot = float(p @ q)
    denom = float(p @ p) + float(q @ q) - dot
    if denom == 0.0:
        return 0.0
    return 1.0 - dot / denom


DISTANCES = {"jaccard": jaccard, "ruzicka": ruzicka, "tanimoto": tanimoto}


def distances_to_seeds(P: np.ndarray, S: np.ndarray, metric: str) -> np.ndarray:
    """Distances from every row of ``P`` to every seed row of ``S``.

    :param P: Points, shape (n, m)
    :param S: Seeds, shape (b, m)
    :param metric: One of jaccard, ruzicka, tanimoto, euclidean

    :return: Array of shape (n, b)
    """
    P = np.asarray(P)
    S = np.asarray(S)
    DISTANCE_CALLS.increment(P.shape[0] * S.shape[0])

    if metric == "euclidean":
        return cdist(P, S, "euclidean")

    if metric == "jaccard":
        return cdist(P != 0, S != 0, "jaccard")

    if metric == "tanimoto":
        Pf = P.astype(np.float64, copy=False)
        Sf = S.astype(np.float64, copy=False)
        dots = Pf @ Sf.T
        denom = (Pf * Pf).sum(axis=1)[:, None] + (Sf * Sf).sum(axis=1)[None, :] - dots
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(denom > 0, 1.0 - dots / denom, 0.0)
        return np.clip(dist, 0.0, 1.0)

    if metric == "ruzicka":
        out = np.empty((P.shape[0], S.shape[0]))
        for j in range(S.shape[0]):
            smin = np.minimum(P, S[j]).sum(axis=1, dtype=np.float64)
            smax = np.maximum(P, S[j]).sum(axis=1, dtype=np.float64)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[:, j] = np.where(smax > 0, 1.0 - smin / smax, 0.0)
        return np.clip(out, 0.0, 1.0)

    raise ValidationError(
        message=f"Unknown metric '{metric}'. Use one of {', '.join(METRICS)}",
        field="metric",
        value=metric,
    )
