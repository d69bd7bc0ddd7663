#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Input validation utilities for isoprefs.

This module provides functions for validating parameters before they
reach the detection engines, so that bad input fails early with a
:class:`ValidationError` naming the offending field.

Example::

    from isoprefs.validation import validate_positive_int, validate_points

    psi = validate_positive_int(256, "psi")
    X = validate_points(rows, min_dim=2)
"""
import math
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from isoprefs.exceptions import LengthMismatchError, ValidationError


def validate_positive_int(value: Any, field: str, minimum: int = 1) -> int:
    """Validate an integer parameter with a lower bound.

    :param value: The value to validate
    :param field: Name of the parameter, used in the error
    :param minimum: Smallest accepted value (default: 1)

    :return: The value as ``int``

    :raises ValidationError: If the value is not an integer or too small

    Example::

        t = validate_positive_int(100, "t")
        m = validate_positive_int(0, "m", minimum=0)
    """
    if isinstance(value, bool):
        raise ValidationError(
            message=f"{field} must be an integer, got a boolean",
            field=field,
            value=value,
        )
    try:
        as_int = int(value)
    except (TypeError, ValueError):
        raise ValidationError(
            message=f"{field} must be an integer, got {value!r}",
            field=field,
            value=value,
        )
    if as_int != value and not isinstance(value, (np.integer, str)):
        raise ValidationError(
            message=f"{field} must be an integer, got {value!r}",
            field=field,
            value=value,
        )
    if as_int < minimum:
        raise ValidationError(
            message=f"{field} must be >= {minimum}, got {as_int}",
            field=field,
            value=value,
        )
    return as_int


def validate_positive_float(
    value: Any, field: str, allow_zero: bool = False
) -> float:
    """Validate a finite real parameter that must be positive.

    :param value: The value to validate
    :param field: Name of the parameter, used in the error
    :param allow_zero: Accept 0 as well (default: False)

    :return: The value as ``float``

    :raises ValidationError: If the value is not finite or not positive
    """
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ValidationError(
            message=f"{field} must be a number, got {value!r}",
            field=field,
            value=value,
        )
    if not math.isfinite(as_float):
        raise ValidationError(
            message=f"{field} must be finite, got {as_float}",
            field=field,
            value=value,
        )
    if as_float < 0 or (as_float == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(
            message=f"{field} must be {bound}, got {as_float}",
            field=field,
            value=value,
        )
    return as_float


def validate_fraction(
    value: Any,
    field: str,
    upper: float = 1.0,
    inclusive_upper: bool = False,
) -> float:
    """Validate a fraction in ``[0, upper)`` (or ``[0, upper]``).

    :param value: The value to validate
    :param field: Name of the parameter
    :param upper: Upper bound (default: 1.0)
    :param inclusive_upper: Whether ``upper`` itself is accepted

    :return: The value as ``float``

    :raises ValidationError: If the value is outside the range
    """
    as_float = validate_positive_float(value, field, allow_zero=True)
    too_big = as_float > upper if inclusive_upper else as_float >= upper
    if too_big:
        bracket = "]" if inclusive_upper else ")"
        raise ValidationError(
            message=f"{field} must lie in [0, {upper}{bracket}, got {as_float}",
            field=field,
            value=value,
        )
    return as_float


def validate_choice(value: Any, field: str, choices: Iterable[str]) -> str:
    """Validate that a string belongs to a fixed set of choices.

    :param value: The value to validate
    :param field: Name of the parameter
    :param choices: Accepted values

    :return: The value, lower-cased and stripped

    :raises ValidationError: If the value is not one of the choices
    """
    options = tuple(choices)
    if not isinstance(value, str) or value.strip().lower() not in options:
        raise ValidationError(
            message=f"{field} must be one of {', '.join(options)}; got {value!r}",
            field=field,
            value=value,
        )
    return value.strip().lower()


def validate_seed(seed: Any) -> Optional[int]:
    """Validate a random seed.

    :param seed: ``None`` or a non-negative integer

    :return: The seed as ``int`` or ``None``

    :raises ValidationError: If the seed is negative or not an integer
    """
    if seed is None:
        return None
    return validate_positive_int(seed, "seed", minimum=0)


def validate_points(
    points: Any,
    min_dim: int = 1,
    min_rows: int = 0,
    field: str = "points",
    dim: Optional[int] = None,
) -> np.ndarray:
    """Validate and convert a point set to a finite 2-D float array.

    :param points: Array-like of shape (n, d)
    :param min_dim: Smallest accepted dimension d
    :param min_rows: Smallest accepted number of rows
    :param field: Name used in error messages
    :param dim: Exact dimension required, if any

    :return: ``numpy.ndarray`` of dtype float64 and shape (n, d)

    :raises ValidationError: On wrong shape, too few rows or non-finite values
    """
    try:
        arr = np.asarray(points, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ValidationError(
            message=f"{field} is not numeric: {e}",
            field=field,
        )
    if arr.ndim == 1 and arr.size > 0 and min_rows <= 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValidationError(
            message=f"{field} must be 2-D, got shape {arr.shape}",
            field=field,
        )
    n, d = arr.shape
    if d < min_dim:
        raise ValidationError(
            message=f"{field} must have dimension >= {min_dim}, got {d}",
            field=field,
        )
    if dim is not None and d != dim:
        raise ValidationError(
            message=f"{field} must have dimension {dim}, got {d}",
            field=field,
        )
    if n < min_rows:
        raise ValidationError(
            message=f"{field} needs at least {min_rows} rows, got {n}",
            field=field,
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(
            message=f"{field} contains non-finite coordinates",
            field=field,
        )
    return arr


def validate_same_length(p: Sequence, q: Sequence) -> None:
    """Raise :class:`LengthMismatchError` when two vectors differ in length."""
    if len(p) != len(q):
        raise LengthMismatchError(left=len(p), right=len(q))
