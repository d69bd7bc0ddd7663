#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Iterator utilities for isoprefs.

This module provides the batch iterator used to feed streams to the
online forest a fixed number of rows at a time.
"""
from typing import Any, Iterable, Iterator, List, Union

import numpy as np

from isoprefs.validation import validate_positive_int


class Batches:
    """Iterate over consecutive batches of rows.

    Arrays are sliced without copying; any other iterable is consumed
    lazily and its batches come out as lists. The last batch may be
    shorter.

    Example 1::

        from isoprefs.iterators import Batches

        X = np.arange(10).reshape(5, 2)
        [len(b) for b in Batches(X, 2)]
        # [2, 2, 1]

    Example 2::

        # rows streamed from a dataset file
        for batch in Batches(iter_dataset_rows("stream.csv"), 100):
            points = np.array([row.point for row in batch])
    """

    def __init__(self, data: Union[np.ndarray, Iterable[Any]], size: int) -> None:
        """Initialize the iterator.

        :param data: Array of rows or an iterable of rows
        :param size: Rows per batch (>= 1)

        :return: None
        """
        self.size = validate_positive_int(size, "size")
        self.data = data if isinstance(data, np.ndarray) else None
        self._rows: Iterator[Any] = iter(()) if self.data is not None else iter(data)
        self.index = 0

    def __iter__(self) -> "Batches":
        """Return the iterator object."""
        return self

    def __next__(self) -> Union[np.ndarray, List[Any]]:
        """Return the next batch."""
        if self.data is not None:
            if self.index >= len(self.data):
                raise StopIteration
            batch = self.data[self.index : self.index + self.size]
            self.index += len(batch)
            return batch

        rows: List[Any] = []
        for row in self._rows:
            rows.append(row)
            if len(rows) == self.size:
                break
        if not rows:
            raise StopIteration
        self.index += len(rows)
        return rows
