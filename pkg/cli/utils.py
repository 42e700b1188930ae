import logging
import os
from contextlib import contextmanager
from typing import Iterator, List, Optional

import pandas as pd
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from cli.models import CommandResult
from spectralct.dataflows import get_log_level, get_output_dir
from spectralct.error_diagnostics import ErrorDiagnostics, exit_code_for

console = Console()


def setup_logging(level: Optional[str] = None) -> None:
    """Route library logging through rich at SPECTRALCT_LOG_LEVEL (default INFO)."""
    level = (level or get_log_level() or "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=False, show_path=False)],
        force=True,
    )


def resolve_out_dir(out: Optional[str], configured: Optional[str] = None) -> str:
    """--out, else the run configuration's output_dir, else SPECTRALCT_OUTPUT_DIR / config default."""
    out_dir = out or configured or get_output_dir()
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def default_path(explicit: Optional[str], out_dir: str, name: str) -> str:
    return explicit or os.path.join(out_dir, name)


@contextmanager
def command_errors(command: str) -> Iterator[None]:
    """Print a diagnosis for any failure and exit with the mapped code."""
    try:
        yield
    except typer.Exit:
        raise
    except Exception as e:
        error_type = type(e).__name__
        report = ErrorDiagnostics.generate_error_report(str(e), error_type, command=command)
        console.print(Panel(report, title=f"[red]{command} failed[/red]", border_style="red"))
        logging.getLogger("cli").debug("Traceback", exc_info=True)
        raise typer.Exit(code=exit_code_for(e)) from e


def print_result(result: CommandResult) -> None:
    table = Table(show_header=True, header_style="bold cyan", box=None)
    table.add_column("Artifact")
    table.add_column("Path")
    for name, path in result.artifacts.items():
        table.add_row(name, path)
    console.print(Panel(table, title=f"[bold green]{result.command}[/bold green] → {result.out_dir}", border_style="green"))
    for note in result.notes:
        console.print(f"  [dim]{note}[/dim]")


def frame_table(frame: pd.DataFrame, title: str, float_format: str = "{:.4g}") -> Table:
    table = Table(title=title, header_style="bold magenta")
    for column in frame.columns:
        table.add_column(str(column), justify="right" if pd.api.types.is_numeric_dtype(frame[column]) else "left")
    for _, row in frame.iterrows():
        cells: List[str] = []
        for value in row:
            cells.append(float_format.format(value) if isinstance(value, float) else str(value))
        table.add_row(*cells)
    return table


def parse_values(values: str) -> List[float]:
    try:
        parsed = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated numbers, got '{values}'") from None
    if not parsed:
        raise typer.BadParameter("no values given")
    return parsed
