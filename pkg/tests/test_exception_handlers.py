"""Tests for the command-line exception handler."""
# ruff: noqa: S101

import click
import pytest
from pydantic import BaseModel, Field, ValidationError

from src.handlers.exception_handlers import EXIT_NUMERICAL, EXIT_VALIDATION, handle_cli_exception
from src.handlers.exceptions import NumericalFailureError, SlmError, ValidationFailedError


class _Bounded(BaseModel):
    size: int = Field(ge=2)


def _pydantic_error() -> ValidationError:
    try:
        _Bounded(size=0)
    except ValidationError as exc:
        return exc
    msg = "validation unexpectedly passed"
    raise AssertionError(msg)


class TestExceptionHierarchy:
    """Tests for the exception classes."""

    def test_builtin_bases(self) -> None:
        """Package errors are also the matching builtin errors."""
        assert issubclass(ValidationFailedError, ValueError)
        assert issubclass(NumericalFailureError, ArithmeticError)
        assert issubclass(ValidationFailedError, SlmError)
        assert issubclass(NumericalFailureError, SlmError)


class TestHandleCliException:
    """Tests for handle_cli_exception."""

    @pytest.mark.parametrize(
        "exception",
        [
            ValidationFailedError("bad shape"),
            FileNotFoundError("missing.cxg.bin"),
            click.UsageError("no such option"),
        ],
    )
    def test_validation_exit_code(self, exception: Exception) -> None:
        """Usage and input problems exit with 1."""
        assert handle_cli_exception(exception) == EXIT_VALIDATION

    def test_pydantic_error_exit_code(self) -> None:
        """Schema violations exit with 1."""
        assert handle_cli_exception(_pydantic_error()) == EXIT_VALIDATION

    @pytest.mark.parametrize(
        "exception",
        [
            NumericalFailureError("nonfinite"),
            ZeroDivisionError("division by zero"),
            RuntimeError("boom"),
        ],
    )
    def test_numerical_exit_code(self, exception: Exception) -> None:
        """Numerical failures and unexpected errors exit with 2."""
        assert handle_cli_exception(exception) == EXIT_NUMERICAL

    def test_usage_error_is_shown(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Click errors print their own message."""
        handle_cli_exception(click.UsageError("no such option: --frobnicate"))
        assert "--frobnicate" in capsys.readouterr().err
