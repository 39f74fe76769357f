"""Command-line surface: run configuration, report persistence, typer commands."""
