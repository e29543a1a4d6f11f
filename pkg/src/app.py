"""App entrypoints."""

import sys
from collections.abc import Sequence

import click

from src.commands import evaluate_commands, recon_commands, simulate_commands, theory_commands
from src.commands.groups import cli
from src.containers.containers import AppContainer, init_app_container
from src.handlers.exception_handlers import EXIT_OK, EXIT_VALIDATION, handle_cli_exception
from src.settings import settings

PROG_NAME = "slm-ghost"


def create_app() -> AppContainer:
    """Wire the container into every command module and configure the logger.

    Returns:
        AppContainer: The wired container.
    """
    modules_to_inject = [
        simulate_commands,
        recon_commands,
        evaluate_commands,
        theory_commands,
    ]
    return init_app_container(modules_to_inject, settings)


def dispatch(argv: Sequence[str]) -> int:
    """Run one command line and return its exit code instead of exiting.

    Args:
        argv (Sequence[str]): Arguments after the program name.

    Returns:
        int: 0 on success, 1 on usage or validation errors, 2 on numerical failures.
    """
    args = list(argv)
    if not args:
        with click.Context(cli, info_name=PROG_NAME) as ctx:
            click.echo(ctx.get_help(), err=True)
        return EXIT_VALIDATION

    create_app()
    try:
        result = cli.main(args=args, prog_name=PROG_NAME, standalone_mode=False, obj={"argv": args})
    except Exception as exc:
        return handle_cli_exception(exc)
    return result if isinstance(result, int) else EXIT_OK


def main(argv: Sequence[str] | None = None) -> None:
    """Console-script entrypoint."""
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
