import logging
import sys
from typing import Optional, Sequence

import click
import typer
from rich.console import Console

from isps_cli.commands.analysis_commands import analyze, axioms, pipeline, prolong
from isps_cli.commands.bench_commands import bench, catalog
from isps_cli.commands.falsify_commands import falsify
from isps_cli.core.logging_setup import setup_logging
from isps_engine.tools.errors import IspsError

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="isps",
    help="Sampled ISpS/ISS analysis of control systems: estimators, certificates, prolongation, falsification.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)

app.command("axioms")(axioms)
app.command("analyze")(analyze)
app.command("prolong")(prolong)
app.command("pipeline")(pipeline)
app.command("falsify")(falsify)
app.command("bench")(bench)
app.command("catalog")(catalog)

err_console = Console(stderr=True)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """0 consistent, 2 falsified, 3 inconclusive, 1 usage or configuration error."""
    setup_logging()
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = app(args=args, prog_name="isps", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        err_console.print("Aborted")
        return 1
    except IspsError as e:
        logger.debug(f"{type(e).__name__}: {e}")
        err_console.print(f"[red]error:[/red] {e}")
        return 1
    return result if isinstance(result, int) else 0
