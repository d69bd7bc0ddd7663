#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Unit tests for isoprefs.exceptions module."""
import pytest
import sys
sys.path.insert(0, 'src')

from isoprefs.exceptions import (
    IsoPrefsError,
    ValidationError,
    LengthMismatchError,
    GeometryError,
    DegenerateSampleError,
    SamplingExhaustedError,
    UnderflowViolationError,
    WindowTooSparseError,
    DegenerateLabelsError,
    DataFileError,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_DATA,
    EXIT_RUNTIME,
    exit_code_for,
)


class TestIsoPrefsError:
    """Tests for the base exception class."""

    def test_custom_message(self):
        """Test the message is wrapped in the representation."""
        error = IsoPrefsError("value", "psi is too small")
        assert str(error) == "<IsoPrefsError: psi is too small>"

    def test_default_messages_per_category(self):
        """Test each category falls back to its own description."""
        assert "parameter value is invalid" in str(IsoPrefsError("value"))
        assert "could not be fitted" in str(IsoPrefsError("geometry"))
        assert "inconsistent update" in str(IsoPrefsError("stream"))
        assert "file could not be processed" in str(IsoPrefsError("data"))
        assert "could not be completed" in str(IsoPrefsError())

    def test_attributes(self):
        """Test errors and messages are kept."""
        error = IsoPrefsError("runtime", "boom")
        assert error.errors == "runtime"
        assert error.messages == "boom"


class TestValidationError:
    """Tests for ValidationError."""

    def test_with_field(self):
        """Test the field name is reported."""
        error = ValidationError("t must be >= 1", field="t", value=0)
        assert "field: t" in str(error)
        assert error.value == 0
        assert error.errors == "value"

    def test_without_field(self):
        """Test the plain representation."""
        assert str(ValidationError("bad")) == "<ValidationError: bad>"

    def test_is_isoprefs_error(self):
        """Test the hierarchy."""
        assert isinstance(ValidationError(), IsoPrefsError)


class TestLengthMismatchError:
    """Tests for LengthMismatchError."""

    def test_lengths_in_message(self):
        """Test both lengths are reported."""
        error = LengthMismatchError(left=3, right=4)
        assert "3 != 4" in str(error)
        assert error.field == "length"
        assert isinstance(error, ValidationError)


class TestGeometryErrors:
    """Tests for the geometry error family."""

    def test_family_reported(self):
        """Test the model family is part of the message."""
        error = GeometryError("cannot fit", family="circle2d")
        assert "family: circle2d" in str(error)

    def test_degenerate_sample_name(self):
        """Test subclasses report their own name."""
        error = DegenerateSampleError(family="line2d")
        assert str(error).startswith("<DegenerateSampleError:")
        assert isinstance(error, GeometryError)

    def test_sampling_exhausted_attempts(self):
        """Test the attempt count is reported."""
        error = SamplingExhaustedError(family="plane3d", attempts=1001)
        assert "[1001 attempts]" in str(error)
        assert error.attempts == 1001


class TestStreamAndWindowErrors:
    """Tests for UnderflowViolationError and WindowTooSparseError."""

    def test_underflow_depth(self):
        """Test the node depth is reported."""
        error = UnderflowViolationError(depth=0)
        assert "depth: 0" in str(error)
        assert error.errors == "stream"

    def test_window_details(self):
        """Test the window origin and valid count are reported."""
        error = WindowTooSparseError(window=(0, 20), valid=2)
        assert "window: (0, 20)" in str(error)
        assert "valid: 2" in str(error)


class TestDataFileError:
    """Tests for DataFileError."""

    def test_full_message(self):
        """Test operation and filename are reported."""
        error = DataFileError("no such file", filename="d.csv", operation="read")
        assert str(error) == "<DataFileError: no such file (read) [d.csv]>"


class TestExitCodeFor:
    """Tests for the exit code mapping."""

    def test_codes(self):
        """Test every category maps to its exit code."""
        assert EXIT_OK == 0
        assert exit_code_for(ValidationError()) == EXIT_USAGE == 2
        assert exit_code_for(LengthMismatchError()) == EXIT_USAGE
        assert exit_code_for(DataFileError()) == EXIT_DATA == 3
        assert exit_code_for(DegenerateLabelsError()) == EXIT_DATA
        assert exit_code_for(FileNotFoundError()) == EXIT_DATA
        assert exit_code_for(SamplingExhaustedError()) == EXIT_RUNTIME == 4
        assert exit_code_for(RuntimeError()) == EXIT_RUNTIME

    def test_raise_and_catch(self):
        """Test errors can be caught through the base class."""
        with pytest.raises(IsoPrefsError):
            raise WindowTooSparseError()
