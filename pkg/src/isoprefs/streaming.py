#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""File formats and streaming I/O.

Features:
    - Row-at-a-time CSV writing
    - Dataset CSV (``x1..xd,label[,structure]``) writer and readers,
      including a row-by-row stream reader
    - Scores CSVs (``index,score``, ``index,score,label``, ``row,col,score``)
      and preference-matrix dumps, 9 significant digits
    - RIMG range-image codec
    - JSON-lines run manifests

RIMG layout, little endian: magic ``RIMG``, u32 height, u32 width,
height*width*3 f32 (x, y, z row-major), height*width u8 valid mask,
then an optional height*width u8 ground-truth mask.
"""
import csv
import json
from typing import Any, Dict, Iterator, List, NamedTuple, Optional, TextIO, Tuple

import numpy as np

from isoprefs.exceptions import DataFileError, ValidationError
from isoprefs.geometry import LabeledDataset
from isoprefs.iso_logs import add_log
from isoprefs.sliding import RangeImage

RIMG_MAGIC = b"RIMG"


def fmt(value: float) -> str:
    """Format a real with 9 significant digits."""
    return f"{float(value):.9g}"


class CsvExporter:
    """Row-at-a-time CSV writer for score, dataset and timing outputs.

    Example::

        from isoprefs.streaming import CsvExporter

        with CsvExporter("scores.csv", headers=["index", "score"]) as exp:
            for i, s in enumerate(scores):
                exp.write_row([i, fmt(s)])
    """

    def __init__(self, filepath: str, headers: Optional[List[str]] = None) -> None:
        """Open ``filepath`` and write the header row, if any.

        :raises DataFileError: If the file cannot be opened
        """
        self.filepath = filepath
        try:
            self._file: Optional[TextIO] = open(filepath, "w", newline="", encoding="utf-8")
        except OSError as e:
            raise DataFileError(message=str(e), filename=filepath, operation="write")
        self._writer: Any = csv.writer(self._file, lineterminator="\n")
        self._rows = 0
        if headers:
            self._writer.writerow(headers)

    def write_row(self, row: List[Any]) -> None:
        if self._writer is None:
            raise DataFileError(message="Exporter is closed", filename=self.filepath, operation="write")
        self._writer.writerow(row)
        self._rows += 1

    def write_rows(self, rows: Iterator[List[Any]]) -> int:
        """Write every row of an iterator and return how many were written."""
        before = self._rows
        for row in rows:
            self.write_row(row)
        return self._rows - before

    @property
    def total_rows_written(self) -> int:
        return self._rows

    def close(self) -> None:
        if self._file:
            self._file.close()
            self._file = None
            self._writer = None
            add_log(f"Wrote {self._rows} rows to {self.filepath}", "debug")

    def __enter__(self) -> "CsvExporter":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()


class DatasetRow(NamedTuple):
    """One row of a dataset CSV."""

    index: int
    point: np.ndarray
    label: int
    structure: Optional[int]


def write_dataset_csv(path: str, data: LabeledDataset) -> int:
    """Write a dataset as ``x1..xd,label[,structure]``; returns the row count."""
    headers = [f"x{i + 1}" for i in range(data.dim)] + ["label"]
    with_structure = data.structure_id is not None
    if with_structure:
        headers.append("structure")
    with CsvExporter(path, headers=headers) as exporter:
        for j in range(len(data)):
            row = [fmt(v) for v in data.points[j]] + [int(data.labels[j])]
            if with_structure:
                row.append(int(data.structure_id[j]))
            exporter.write_row(row)
        return exporter.total_rows_written


def _parse_header(path: str, header: List[str]) -> Tuple[int, bool]:
    coords = [name for name in header if name.startswith("x")]
    expected = [f"x{i + 1}" for i in range(len(coords))]
    tail = header[len(coords):]
    if not coords or header[: len(coords)] != expected or tail not in (["label"], ["label", "structure"]):
        raise DataFileError(
            message=f"unexpected dataset header {header}", filename=path, operation="parse"
        )
    return len(coords), tail == ["label", "structure"]


def iter_dataset_rows(path: str) -> Iterator[DatasetRow]:
    """Stream the rows of a dataset CSV one at a time.

    :raises DataFileError: If the file is missing or a row is malformed
    """
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise DataFileError(message=str(e), filename=path, operation="read")
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataFileError(message="empty file", filename=path, operation="parse")
        d, with_structure = _parse_header(path, header)
        for index, row in enumerate(reader):
            try:
                if len(row) != len(header):
                    raise ValueError(f"expected {len(header)} fields, got {len(row)}")
                point = np.array([float(v) for v in row[:d]])
                label = int(row[d])
                structure = int(row[d + 1]) if with_structure else None
            except ValueError as e:
                raise DataFileError(
                    message=f"row {index + 1}: {e}", filename=path, operation="parse"
                )
            yield DatasetRow(index, point, label, structure)


def read_dataset_csv(path: str, noise_sigma: float = 0.02) -> LabeledDataset:
    """Read a whole dataset CSV.

    :raises DataFileError: If the file is missing or malformed
    """
    rows = list(iter_dataset_rows(path))
    if not rows:
        raise DataFileError(message="dataset has no rows", filename=path, operation="parse")
    structure = None if rows[0].structure is None else [r.structure for r in rows]
    try:
        return LabeledDataset(
            points=np.array([r.point for r in rows]),
            labels=[r.label for r in rows],
            structure_id=structure,
            noise_sigma=noise_sigma,
        )
    except ValidationError as e:
        raise DataFileError(message=str(e), filename=path, operation="parse")


def write_scores_csv(path: str, scores: Any, labels: Optional[Any] = None) -> int:
    """Write ``index,score`` rows, or ``index,score,label`` when labels are given."""
    headers = ["index", "score"] + (["label"] if labels is not None else [])
    with CsvExporter(path, headers=headers) as exporter:
        for i, score in enumerate(np.asarray(scores).reshape(-1)):
            row = [i, fmt(score)]
            if labels is not None:
                row.append(int(labels[i]))
            exporter.write_row(row)
        return exporter.total_rows_written


def read_scores_csv(path: str) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Read a scores CSV.

    :return: (indices, scores, labels or None)

    :raises DataFileError: If the file is missing or malformed
    """
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise DataFileError(message=str(e), filename=path, operation="read")
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header not in (["index", "score"], ["index", "score", "label"]):
            raise DataFileError(
                message=f"unexpected scores header {header}", filename=path, operation="parse"
            )
        try:
            rows = [(int(r[0]), float(r[1]), int(r[2]) if len(r) > 2 else 0) for r in reader]
        except (ValueError, IndexError) as e:
            raise DataFileError(message=str(e), filename=path, operation="parse")
    indices = np.array([r[0] for r in rows], dtype=np.int64)
    scores = np.array([r[1] for r in rows])
    labels = np.array([r[2] for r in rows], dtype=np.int64) if len(header) == 3 else None
    return indices, scores, labels


def write_score_map_csv(path: str, score_map: np.ndarray) -> int:
    """Write a per-pixel score map as ``row,col,score``; NaN is written as ``nan``."""
    with CsvExporter(path, headers=["row", "col", "score"]) as exporter:
        height, width = score_map.shape
        for r in range(height):
            for c in range(width):
                exporter.write_row([r, c, fmt(score_map[r, c])])
        return exporter.total_rows_written


def write_preference_csv(path: str, values: np.ndarray) -> int:
    """Dump a preference matrix, one row per point."""
    with CsvExporter(path) as exporter:
        return exporter.write_rows([fmt(v) for v in row] for row in values)


def write_rimg(path: str, image: RangeImage) -> None:
    """Write a range image in the RIMG binary format."""
    try:
        with open(path, "wb") as handle:
            handle.write(RIMG_MAGIC)
            handle.write(np.array([image.height, image.width], dtype="<u4").tobytes())
            handle.write(image.xyz.astype("<f4").tobytes(order="C"))
            handle.write(image.valid.astype(np.uint8).tobytes(order="C"))
            if image.gt_mask is not None:
                handle.write(image.gt_mask.astype(np.uint8).tobytes(order="C"))
    except OSError as e:
        raise DataFileError(message=str(e), filename=path, operation="write")


def read_rimg(path: str) -> RangeImage:
    """Read a range image in the RIMG binary format.

    :raises DataFileError: On a missing file, a bad magic or a truncated body
    """
    try:
        with open(path, "rb") as handle:
            blob = handle.read()
    except OSError as e:
        raise DataFileError(message=str(e), filename=path, operation="read")
    if blob[:4] != RIMG_MAGIC or len(blob) < 12:
        raise DataFileError(message="not a RIMG file", filename=path, operation="parse")
    height, width = (int(v) for v in np.frombuffer(blob, dtype="<u4", count=2, offset=4))
    pixels = height * width
    xyz_end = 12 + 12 * pixels
    valid_end = xyz_end + pixels
    if len(blob) not in (valid_end, valid_end + pixels):
        raise DataFileError(
            message=f"RIMG body has {len(blob)} bytes for a {height}x{width} image",
            filename=path,
            operation="parse",
        )
    xyz = np.frombuffer(blob, dtype="<f4", count=3 * pixels, offset=12).reshape(height, width, 3)
    valid = np.frombuffer(blob, dtype=np.uint8, count=pixels, offset=xyz_end).reshape(height, width)
    gt_mask = None
    if len(blob) == valid_end + pixels:
        gt_mask = np.frombuffer(blob, dtype=np.uint8, count=pixels, offset=valid_end)
        gt_mask = gt_mask.reshape(height, width).astype(bool)
    return RangeImage(xyz=xyz.astype(np.float64), valid=valid.astype(bool), gt_mask=gt_mask)


def append_manifest(path: str, record: Dict[str, Any]) -> None:
    """Append one JSON record to a JSON-lines manifest."""
    try:
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True, default=_json_default) + "\n")
    except OSError as e:
        raise DataFileError(message=str(e), filename=path, operation="write")


def read_manifest(path: str) -> List[Dict[str, Any]]:
    """Read every record of a JSON-lines manifest."""
    try:
        with open(path, encoding="utf-8") as handle:
            return [json.loads(line) for line in handle if line.strip()]
    except OSError as e:
        raise DataFileError(message=str(e), filename=path, operation="read")
    except json.JSONDecodeError as e:
        raise DataFileError(message=str(e), filename=path, operation="parse")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
