"""Initialize the command group every subcommand registers on."""

import click

from src.settings import settings

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


@click.group(name="slm-ghost", context_settings=CONTEXT_SETTINGS)
@click.version_option(settings.app_version, prog_name=settings.app_name)
def cli() -> None:
    """Structured low-rank modeling for navigator-free EPI Nyquist-ghost correction.

    Every subcommand accepts --seed, --out-dir and --config; flags override the JSON config
    file, which overrides the SLM_* environment settings. Machine outputs go to files in
    --out-dir together with a manifest.json; diagnostics go to standard error.
    """
