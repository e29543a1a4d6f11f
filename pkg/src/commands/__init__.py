"""Command-line subcommands of the application."""
