#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Exception classes for isoprefs.

This module provides a hierarchy of exception classes for the error
conditions raised by the detection engines, the generators and the
command line.

Exception Hierarchy:
    IsoPrefsError (base)
    ├── ValidationError - Invalid parameters or run configuration
    │   └── LengthMismatchError - Preference vectors of different length
    ├── GeometryError - Model fitting failures
    │   ├── DegenerateSampleError - Rank-deficient minimal sample
    │   └── SamplingExhaustedError - Too many consecutive degenerate draws
    ├── UnderflowViolationError - Online bin height would go negative
    ├── WindowTooSparseError - Window with too few valid pixels
    ├── DegenerateLabelsError - Single-class labels for ROC-AUC
    └── DataFileError - Unreadable or malformed input/output files
"""
from typing import Any, Optional


class IsoPrefsError(Exception):
    """Base class for all isoprefs exceptions.

    Attributes:
        errors: Error category string.
        messages: Error message string.
    """

    def __init__(
        self,
        errors: Optional[str] = None,
        messages: Optional[str] = None,
        *args: Any,
        **kwargs: Any
    ) -> None:
        """Initialize the exception.

        :param errors: Error category (value, geometry, stream, data, runtime)
        :param messages: Custom error message
        :param args: Additional positional arguments
        :param kwargs: Additional keyword arguments
        """
        self.errors = errors
        self.messages = messages
        super().__init__(self.__str__())

    def __invalid_value__(self) -> None:
        """A parameter value is invalid."""
        pass

    def __geometry_failure__(self) -> None:
        """A model could not be fitted to the sample."""
        pass

    def __stream_failure__(self) -> None:
        """The online forest received an inconsistent update."""
        pass

    def __data_failure__(self) -> None:
        """An input or output file could not be processed."""
        pass

    def __runtime_failure__(self) -> None:
        """The computation could not be completed."""
        pass

    def __str__(self) -> str:
        """Return the representation of the error messages."""
        err = self.errors
        if err == "value":
            msg = self.messages or self.__invalid_value__.__doc__
        elif err == "geometry":
            msg = self.messages or self.__geometry_failure__.__doc__
        elif err == "stream":
            msg = self.messages or self.__stream_failure__.__doc__
        elif err == "data":
            msg = self.messages or self.__data_failure__.__doc__
        else:
            msg = self.messages or self.__runtime_failure__.__doc__
        return f"<IsoPrefsError: {msg}>"


class ValidationError(IsoPrefsError):
    """Raised when a parameter or a run configuration is invalid.

    Example::

        if psi < 1:
            raise ValidationError("psi must be positive", field="psi", value=psi)
    """

    def __init__(
        self,
        message: str = "Validation failed",
        field: Optional[str] = None,
        value: Any = None,
    ) -> None:
        """Initialize the validation error.

        :param message: Error description
        :param field: Name of the parameter that failed validation
        :param value: The invalid value
        """
        self.field = field
        self.value = value
        super().__init__("value", message)

    def __str__(self) -> str:
        """Return formatted error message."""
        if self.field:
            return f"<ValidationError: {self.messages} (field: {self.field})>"
        return f"<ValidationError: {self.messages}>"


class LengthMismatchError(ValidationError):
    """Raised when two preference vectors have different lengths."""

    def __init__(
        self,
        message: str = "Vectors have different lengths",
        left: Optional[int] = None,
        right: Optional[int] = None,
    ) -> None:
        """Initialize the length mismatch error.

        :param message: Error description
        :param left: Length of the first vector
        :param right: Length of the second vector
        """
        self.left = left
        self.right = right
        super().__init__(message=message, field="length", value=(left, right))

    def __str__(self) -> str:
        """Return formatted error message."""
        if self.left is not None and self.right is not None:
            return f"<LengthMismatchError: {self.messages} ({self.left} != {self.right})>"
        return f"<LengthMismatchError: {self.messages}>"


class GeometryError(IsoPrefsError):
    """Raised when a parametric model cannot be produced.

    Attributes:
        family: Name of the model family involved.
    """

    def __init__(
        self,
        message: str = "Model fitting failed",
        family: Optional[str] = None,
    ) -> None:
        """Initialize the geometry error.

        :param message: Error description
        :param family: Model family kind, e.g. ``circle2d``
        """
        self.family = family
        super().__init__("geometry", message)

    def __str__(self) -> str:
        """Return formatted error message."""
        name = type(self).__name__
        if self.family:
            return f"<{name}: {self.messages} (family: {self.family})>"
        return f"<{name}: {self.messages}>"


class DegenerateSampleError(GeometryError):
    """Raised when a minimal sample does not constrain a unique model.

    Coincident points, collinear points for circles and planes, or any
    other rank-deficient configuration. The caller must resample.
    """

    def __init__(
        self,
        message: str = "Degenerate minimal sample",
        family: Optional[str] = None,
    ) -> None:
        super().__init__(message=message, family=family)


class SamplingExhaustedError(GeometryError):
    """Raised when too many consecutive minimal samples were degenerate.

    Attributes:
        attempts: Number of draws performed before giving up.
    """

    def __init__(
        self,
        message: str = "Sampling budget exhausted",
        family: Optional[str] = None,
        attempts: Optional[int] = None,
    ) -> None:
        """Initialize the sampling error.

        :param message: Error description
        :param family: Model family kind
        :param attempts: Number of consecutive degenerate draws
        """
        self.attempts = attempts
        super().__init__(message=message, family=family)

    def __str__(self) -> str:
        """Return formatted error message."""
        parts = [f"<SamplingExhaustedError: {self.messages}"]
        if self.family:
            parts.append(f" (family: {self.family})")
        if self.attempts is not None:
            parts.append(f" [{self.attempts} attempts]")
        parts.append(">")
        return "".join(parts)


class UnderflowViolationError(IsoPrefsError):
    """Raised when a bin height of an online tree would become negative.

    This signals that a point is forgotten which was never learned.
    """

    def __init__(
        self,
        message: str = "Bin height underflow",
        depth: Optional[int] = None,
    ) -> None:
        """Initialize the underflow error.

        :param message: Error description
        :param depth: Depth of the node where the underflow happened
        """
        self.depth = depth
        super().__init__("stream", message)

    def __str__(self) -> str:
        """Return formatted error message."""
        if self.depth is not None:
            return f"<UnderflowViolationError: {self.messages} (depth: {self.depth})>"
        return f"<UnderflowViolationError: {self.messages}>"


class WindowTooSparseError(IsoPrefsError):
    """Raised when a window holds fewer valid pixels than a minimal sample."""

    def __init__(
        self,
        message: str = "Window has too few valid pixels",
        window: Optional[tuple] = None,
        valid: Optional[int] = None,
    ) -> None:
        """Initialize the sparse window error.

        :param message: Error description
        :param window: (row0, col0) of the window
        :param valid: Number of valid pixels found
        """
        self.window = window
        self.valid = valid
        super().__init__("runtime", message)

    def __str__(self) -> str:
        """Return formatted error message."""
        if self.window is not None:
            return (
                f"<WindowTooSparseError: {self.messages} "
                f"(window: {self.window}, valid: {self.valid})>"
            )
        return f"<WindowTooSparseError: {self.messages}>"


class DegenerateLabelsError(IsoPrefsError):
    """Raised when ROC-AUC is requested on single-class labels."""

    def __init__(self, message: str = "Labels contain a single class") -> None:
        super().__init__("value", message)

    def __str__(self) -> str:
        """Return formatted error message."""
        return f"<DegenerateLabelsError: {self.messages}>"


class DataFileError(IsoPrefsError):
    """Raised when a dataset, scores or range-image file cannot be used.

    Example::

        try:
            data = read_dataset_csv("missing.csv")
        except DataFileError as e:
            print(f"File error: {e}")
    """

    def __init__(
        self,
        message: str = "File operation failed",
        filename: Optional[str] = None,
        operation: Optional[str] = None,
    ) -> None:
        """Initialize the file error.

        :param message: Error description
        :param filename: Name of the file
        :param operation: Operation that failed (read, write, parse)
        """
        self.filename = filename
        self.operation = operation
        super().__init__("data", message)

    def __str__(self) -> str:
        """Return formatted error message."""
        parts = [f"<DataFileError: {self.messages}"]
        if self.operation:
            parts.append(f" ({self.operation})")
        if self.filename:
            parts.append(f" [{self.filename}]")
        parts.append(">")
        return "".join(parts)


# Exit codes of the command line
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the exit code of the command line.

    :param exc: The exception that stopped a command

    :return: 2 for argument errors, 3 for data errors, 4 otherwise
    """
    if isinstance(exc, ValidationError):
        return EXIT_USAGE
    if isinstance(exc, (DataFileError, DegenerateLabelsError, OSError)):
        return EXIT_DATA
    return EXIT_RUNTIME
