"""Exception handlers."""

import traceback

import click
from loguru import logger
from pydantic import ValidationError

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def handle_cli_exception(exception: BaseException) -> int:
    """Log an exception raised by a command and choose the process exit code.

    Args:
        exception (BaseException): The exception raised while running a command.

    Returns:
        int: 1 for validation and usage errors, 2 for numerical failures and anything unexpected.
    """
    if isinstance(exception, click.ClickException):
        exception.show()
        return EXIT_VALIDATION

    if isinstance(exception, ValidationFailedError | ValidationError | FileNotFoundError):
        logger.error(f"Validation error: {exception}")
        return EXIT_VALIDATION

    if isinstance(exception, NumericalFailureError | ArithmeticError):
        logger.error(f"Numerical failure: {exception}")
        return EXIT_NUMERICAL

    logger.error(
        "Unexpected error",
        exception_class=str(exception.__class__),
        traceback="".join(traceback.TracebackException.from_exception(exception).format()),
    )
    return EXIT_NUMERICAL
