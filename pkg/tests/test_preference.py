#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests for isoprefs.preference module."""
import math

import numpy as np
import pytest
import sys
sys.path.insert(0, 'src')

from isoprefs.preference import (
    DISTANCE_CALLS,
    DISTANCES,
    PreferenceConfig,
    PreferenceMatrix,
    distances_to_seeds,
    embed,
    jaccard,
    preference_value,
    preference_values,
    ruzicka,
    tanimoto,
)
from isoprefs.geometry import LINE2D, fit_minimal
from isoprefs.exceptions import LengthMismatchError, ValidationError


def random_vectors(rng, count, m=20, sparsity=0.5):
    """Preference-like vectors with a share of exact zeros."""
    values = rng.uniform(size=(count, m))
    values[rng.uniform(size=(count, m)) < sparsity] = 0.0
    return values


class TestPreferenceConfig:
    """Tests for PreferenceConfig dataclass."""

    def test_defaults(self):
        """Test default values and epsilon."""
        config = PreferenceConfig(sigma=0.02)
        assert config.k_multiplier == 3.0
        assert config.mode == "continuous"
        assert config.dtype == "float32"
        assert config.epsilon() == pytest.approx(0.06)
        assert config.binary is False

    def test_invalid(self):
        """Test sigma, k and mode are validated."""
        with pytest.raises(ValidationError):
            PreferenceConfig(sigma=0)
        with pytest.raises(ValidationError):
            PreferenceConfig(sigma=1.0, k_multiplier=-1)
        with pytest.raises(ValidationError):
            PreferenceConfig(sigma=1.0, mode="fuzzy")


class TestPreferenceValue:
    """Tests for the preference function."""

    def test_gaussian(self):
        """Test the continuous preference."""
        config = PreferenceConfig(sigma=1.0, k_multiplier=3.0)
        assert preference_value(0.0, config) == 1.0
        assert preference_value(1.0, config) == pytest.approx(math.exp(-0.5))
        assert preference_value(3.0, config) == pytest.approx(math.exp(-4.5))
        assert preference_value(3.0001, config) == 0.0

    def test_binary(self):
        """Test the binary preference."""
        config = PreferenceConfig(sigma=1.0, mode="binary")
        assert preference_value(2.9, config) == 1.0
        assert preference_value(3.1, config) == 0.0

    def test_invalid_delta(self):
        """Test negative and non-finite residuals fail."""
        config = PreferenceConfig(sigma=1.0)
        with pytest.raises(ValidationError):
            preference_value(-0.1, config)
        with pytest.raises(ValidationError):
            preference_value(math.nan, config)

    def test_vectorized_matches_scalar(self):
        """Test the matrix form agrees with the scalar form."""
        config = PreferenceConfig(sigma=0.5, k_multiplier=2.0)
        R = np.array([[0.0, 0.4, 1.0], [1.1, 0.2, 5.0]])
        values = preference_values(R, config)
        assert values.dtype == np.float32
        for (j, i), delta in np.ndenumerate(R):
            assert values[j, i] == pytest.approx(preference_value(delta, config), rel=1e-6)


class TestEmbed:
    """Tests for embed function."""

    def test_shape_and_range(self):
        """Test the matrix shape and value range."""
        models = [fit_minimal(LINE2D, [(0, 0), (1, 0)]), fit_minimal(LINE2D, [(0, 0), (0, 1)])]
        X = np.array([[0.5, 0.0], [0.0, 0.5], [0.5, 0.5]])
        P = embed(X, models, PreferenceConfig(sigma=0.1))
        assert isinstance(P, PreferenceMatrix)
        assert P.shape == (3, 2)
        assert (P.rows, P.cols) == (3, 2)
        assert P.nbytes == 3 * 2 * 4
        assert P.values[0, 0] == 1.0 and P.values[0, 1] == 0.0
        assert P.values[1, 1] == 1.0 and P.values[1, 0] == 0.0
        assert not P.values[2].any()

    def test_binary_embedding(self):
        """Test binary matrices only hold 0 and 1."""
        models = [fit_minimal(LINE2D, [(0, 0), (1, 0)])]
        P = embed(np.array([[0.0, 0.05], [0.0, 0.5]]), models, PreferenceConfig(sigma=0.1, mode="binary"))
        assert P.binary
        assert P.values[:, 0].tolist() == [1.0, 0.0]

    def test_no_models(self):
        """Test an empty model list."""
        assert embed(np.zeros((4, 2)), [], PreferenceConfig(sigma=1.0)).shape == (4, 0)

    def test_rows_are_independent(self):
        """Test a row depends only on its own point."""
        models = [fit_minimal(LINE2D, [(0, 0), (1, 1)])]
        config = PreferenceConfig(sigma=0.2)
        full = embed(np.array([[0.1, 0.2], [3.0, 1.0]]), models, config).values
        single = embed(np.array([[0.1, 0.2]]), models, config).values
        assert np.array_equal(full[:1], single)


class TestDistances:
    """Tests for Jaccard, Ruzicka and Tanimoto distances."""

    def test_known_values(self):
        """Test hand-computed distances."""
        assert jaccard([1, 1, 0], [1, 0, 1]) == pytest.approx(2 / 3)
        assert ruzicka([0.5, 1.0], [1.0, 0.5]) == pytest.approx(1 - 1.0 / 2.0)
        assert tanimoto([1.0, 0.0], [1.0, 1.0]) == pytest.approx(1 - 1 / (1 + 2 - 1))

    @pytest.mark.parametrize("name", ["jaccard", "ruzicka", "tanimoto"])
    def test_zero_vectors(self, name):
        """Test two zero vectors are at distance 0 and zero vs non-zero at 1."""
        distance = DISTANCES[name]
        assert distance([0, 0, 0], [0, 0, 0]) == 0.0
        assert distance([0, 0, 0], [0, 1, 0]) == 1.0

    def test_length_mismatch(self):
        """Test vectors of different length fail."""
        with pytest.raises(LengthMismatchError):
            ruzicka([0.1, 0.2], [0.1])

    def test_jaccard_needs_binary(self):
        """Test Jaccard refuses continuous vectors."""
        with pytest.raises(ValidationError):
            jaccard([0.5, 1.0], [1.0, 0.0])

    def test_binary_reduction(self):
        """Test Ruzicka and Tanimoto equal Jaccard on binary vectors."""
        rng = np.random.default_rng(8)
        for _ in range(200):
            p, q = rng.integers(0, 2, size=(2, 15)).astype(float)
            assert ruzicka(p, q) == pytest.approx(jaccard(p, q))
            assert tanimoto(p, q) == pytest.approx(jaccard(p, q))

    @pytest.mark.parametrize("name", ["ruzicka", "tanimoto"])
    def test_metric_properties(self, name):
        """Test range, identity, symmetry and the triangle inequality."""
        distance = DISTANCES[name]
        rng = np.random.default_rng(21)
        triples = random_vectors(rng, 3 * 2000).reshape(2000, 3, -1)
        for p, q, r in triples:
            d_pq, d_qr, d_pr = distance(p, q), distance(q, r), distance(p, r)
            assert 0.0 <= d_pq <= 1.0
            assert distance(p, p) == pytest.approx(0.0, abs=1e-12)
            assert d_pq == pytest.approx(distance(q, p))
            assert d_pr <= d_pq + d_qr + 1e-9


class TestDistancesToSeeds:
    """Tests for the vectorized seed distances."""

    @pytest.mark.parametrize("name", ["ruzicka", "tanimoto"])
    def test_matches_scalar(self, name):
        """Test the vectorized form agrees with the scalar distances."""
        rng = np.random.default_rng(2)
        P = random_vectors(rng, 30)
        S = random_vectors(rng, 4)
        S[0] = 0.0
        D = distances_to_seeds(P, S, name)
        assert D.shape == (30, 4)
        for j in range(30):
            for i in range(4):
                assert D[j, i] == pytest.approx(DISTANCES[name](P[j], S[i]), abs=1e-9)

    def test_jaccard_and_euclidean(self):
        """Test the binary and ambient metrics."""
        P = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        S = np.array([[1.0, 1.0, 0.0]])
        assert distances_to_seeds(P, S, "jaccard")[0, 0] == pytest.approx(2 / 3)
        assert distances_to_seeds(P, S, "euclidean")[1, 0] == pytest.approx(math.sqrt(2))

    def test_unknown_metric(self):
        """Test unknown metrics fail."""
        with pytest.raises(ValidationError):
            distances_to_seeds(np.zeros((1, 2)), np.zeros((1, 2)), "cosine")

    def test_counts_calls(self):
        """Test every distance evaluation is counted."""
        DISTANCE_CALLS.reset()
        distances_to_seeds(np.ones((5, 3)), np.ones((2, 3)), "tanimoto")
        ruzicka([1.0], [1.0])
        assert DISTANCE_CALLS.count == 11


class TestPreferenceMatrixCsv:
    """Tests for the preference dump."""

    def test_to_csv(self, tmp_path):
        """Test one line per point."""
        P = PreferenceMatrix(np.array([[0.5, 1.0], [0.0, 0.25]], dtype=np.float32))
        path = tmp_path / "prefs.csv"
        assert P.to_csv(str(path)) == 2
        assert path.read_text().splitlines() == ["0.5,1", "0,0.25"]
