#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Tests for the streaming module."""
import os

import numpy as np
import pytest
import sys
sys.path.insert(0, 'src')

from isoprefs.datasets import generate_primitive_2d, generate_surface_grid
from isoprefs.exceptions import DataFileError
from isoprefs.geometry import LabeledDataset
from isoprefs.sliding import RangeImage
from isoprefs.streaming import (
    CsvExporter,
    append_manifest,
    fmt,
    iter_dataset_rows,
    read_dataset_csv,
    read_manifest,
    read_rimg,
    read_scores_csv,
    write_dataset_csv,
    write_preference_csv,
    write_rimg,
    write_score_map_csv,
    write_scores_csv,
)


class TestCsvExporter:
    """Tests for CsvExporter class."""

    def test_init_with_headers(self, tmp_path):
        """Test initialization writes the header row."""
        filepath = str(tmp_path / "out.csv")
        CsvExporter(filepath=filepath, headers=["index", "score"]).close()
        with open(filepath) as f:
            assert f.read() == "index,score\n"

    def test_write_rows(self, tmp_path):
        """Test writing multiple rows."""
        filepath = str(tmp_path / "out.csv")
        with CsvExporter(filepath=filepath) as exporter:
            count = exporter.write_rows([["a", "b"], ["c", "d"]])
        assert count == 2
        assert exporter.total_rows_written == 2

    def test_counts_across_calls(self, tmp_path):
        """Test write_rows returns only the rows of its own call."""
        filepath = str(tmp_path / "out.csv")
        with CsvExporter(filepath=filepath, headers=["v"]) as exporter:
            exporter.write_row([0])
            assert exporter.write_rows([[i] for i in range(1, 5)]) == 4
        assert exporter.total_rows_written == 5
        with open(filepath) as f:
            assert f.read() == "v\n0\n1\n2\n3\n4\n"

    def test_write_after_close(self, tmp_path):
        """Test writing to a closed exporter fails."""
        exporter = CsvExporter(filepath=str(tmp_path / "out.csv"))
        exporter.close()
        with pytest.raises(DataFileError):
            exporter.write_row([1])

    def test_unwritable(self, tmp_path):
        """Test a missing directory is a file error."""
        with pytest.raises(DataFileError):
            CsvExporter(filepath=str(tmp_path / "missing" / "out.csv"))


class TestDatasetFiles:
    """Tests for dataset CSV reading and writing."""

    def test_round_trip(self, tmp_path):
        """Test a dataset survives writing and reading."""
        data = generate_primitive_2d("stair4", seed=1)
        path = str(tmp_path / "data.csv")
        assert write_dataset_csv(path, data) == len(data)
        loaded = read_dataset_csv(path, noise_sigma=0.02)
        assert np.allclose(loaded.points, data.points, rtol=1e-8)
        assert np.array_equal(loaded.labels, data.labels)
        assert np.array_equal(loaded.structure_id, data.structure_id)

    def test_header(self, tmp_path):
        """Test the column layout."""
        path = str(tmp_path / "data.csv")
        write_dataset_csv(path, LabeledDataset(points=[[0.5, 0.25, 1.0]], labels=[1]))
        with open(path) as f:
            assert f.read() == "x1,x2,x3,label\n0.5,0.25,1,1\n"

    def test_stream_rows(self, tmp_path):
        """Test rows stream with their index."""
        path = tmp_path / "data.csv"
        path.write_text("x1,x2,label,structure\n1,2,0,0\n3,4,1,-1\n")
        rows = list(iter_dataset_rows(str(path)))
        assert [r.index for r in rows] == [0, 1]
        assert rows[1].point.tolist() == [3.0, 4.0]
        assert rows[1].label == 1 and rows[1].structure == -1

    @pytest.mark.parametrize(
        "content",
        [
            "",
            "a,b,label\n1,2,0\n",
            "x1,x2,label\n1,2\n",
            "x1,x2,label\n1,abc,0\n",
            "x1,x2,label\n1,2,5\n",
            "x1,x2,label\n",
        ],
    )
    def test_malformed(self, tmp_path, content):
        """Test malformed files are data errors."""
        path = tmp_path / "bad.csv"
        path.write_text(content)
        with pytest.raises(DataFileError):
            read_dataset_csv(str(path))

    def test_missing(self, tmp_path):
        """Test a missing file is a data error."""
        with pytest.raises(DataFileError):
            read_dataset_csv(str(tmp_path / "nope.csv"))


class TestScoreFiles:
    """Tests for score and preference files."""

    def test_scores_with_labels(self, tmp_path):
        """Test index, score and label columns."""
        path = str(tmp_path / "scores.csv")
        write_scores_csv(path, [0.5, 1 / 3], labels=[0, 1])
        with open(path) as f:
            assert f.read() == "index,score,label\n0,0.5,0\n1,0.333333333,1\n"
        indices, scores, labels = read_scores_csv(path)
        assert indices.tolist() == [0, 1]
        assert scores[1] == pytest.approx(1 / 3)
        assert labels.tolist() == [0, 1]

    def test_scores_without_labels(self, tmp_path):
        """Test labels are optional."""
        path = str(tmp_path / "scores.csv")
        write_scores_csv(path, np.array([0.1, 0.2, 0.3]))
        _, scores, labels = read_scores_csv(path)
        assert labels is None
        assert len(scores) == 3

    def test_bad_scores_header(self, tmp_path):
        """Test an unexpected header fails."""
        path = tmp_path / "scores.csv"
        path.write_text("row,col,score\n0,0,1\n")
        with pytest.raises(DataFileError):
            read_scores_csv(str(path))

    def test_score_map(self, tmp_path):
        """Test row-major pixels with nan for unscored ones."""
        path = str(tmp_path / "map.csv")
        assert write_score_map_csv(path, np.array([[0.5, np.nan]])) == 2
        with open(path) as f:
            assert f.read() == "row,col,score\n0,0,0.5\n0,1,nan\n"

    def test_preferences(self, tmp_path):
        """Test one line per point."""
        path = str(tmp_path / "prefs.csv")
        assert write_preference_csv(path, np.array([[1.0, 0.0], [0.25, 0.5]], dtype=np.float32)) == 2
        with open(path) as f:
            assert f.read().splitlines() == ["1,0", "0.25,0.5"]

    def test_fmt(self):
        """Test nine significant digits."""
        assert fmt(2 / 3) == "0.666666667"
        assert fmt(np.float32(0.5)) == "0.5"


class TestRimg:
    """Tests for the range-image codec."""

    def test_round_trip(self, tmp_path):
        """Test geometry and masks survive the codec."""
        image = generate_surface_grid("paraboloid", 16, defect=((4, 4), 1.0, 5.0), seed=2)
        path = str(tmp_path / "img.rimg")
        write_rimg(path, image)
        assert os.path.getsize(path) == 12 + 16 * 16 * 14
        loaded = read_rimg(path)
        assert np.allclose(loaded.xyz, image.xyz, atol=1e-6)
        assert np.array_equal(loaded.valid, image.valid)
        assert np.array_equal(loaded.gt_mask, image.gt_mask)

    def test_without_gt(self, tmp_path):
        """Test the ground-truth mask is optional."""
        image = RangeImage(xyz=np.zeros((2, 3, 3)), valid=np.array([[1, 0, 1], [1, 1, 1]]))
        path = str(tmp_path / "img.rimg")
        write_rimg(path, image)
        loaded = read_rimg(path)
        assert loaded.gt_mask is None
        assert loaded.valid.tolist() == [[True, False, True], [True, True, True]]

    def test_bad_magic(self, tmp_path):
        """Test files without the magic fail."""
        path = tmp_path / "img.rimg"
        path.write_bytes(b"PNG\x00" + bytes(8))
        with pytest.raises(DataFileError):
            read_rimg(str(path))

    def test_truncated(self, tmp_path):
        """Test a short body fails."""
        image = RangeImage(xyz=np.zeros((2, 2, 3)), valid=np.ones((2, 2)))
        path = tmp_path / "img.rimg"
        write_rimg(str(path), image)
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(DataFileError):
            read_rimg(str(path))


class TestManifest:
    """Tests for JSON-lines manifests."""

    def test_append_and_read(self, tmp_path):
        """Test records accumulate with numpy values converted."""
        path = str(tmp_path / "runs.jsonl")
        append_manifest(path, {"command": "score", "auc": np.float64(0.9), "n": np.int64(3)})
        append_manifest(path, {"command": "eval", "histogram": np.array([1, 2])})
        records = read_manifest(path)
        assert records[0] == {"auc": 0.9, "command": "score", "n": 3}
        assert records[1]["histogram"] == [1, 2]

    def test_corrupt(self, tmp_path):
        """Test a corrupt manifest is a data error."""
        path = tmp_path / "runs.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(DataFileError):
            read_manifest(str(path))
