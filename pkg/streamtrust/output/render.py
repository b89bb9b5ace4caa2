"""Human-readable summaries rendered with Rich."""

from io import StringIO

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from streamtrust.output.report import MetricsReport


def _console(buffer: StringIO, color: bool) -> Console:
    return Console(file=buffer, width=100, force_terminal=color, no_color=not color)


def render_report(report: MetricsReport, title: str = "Evaluation", color: bool = True) -> str:
    """
    Render a metrics report as a two-column table.

    Skipped metrics are shown dimmed with their reason.
    """
    buffer = StringIO()
    console = _console(buffer, color)

    header = Text()
    header.append(f"stream-trust · {title}", style="bold cyan")
    console.print(Panel(header, border_style="cyan", box=box.ROUNDED))

    table = Table(show_header=True, header_style="bold cyan", box=box.ROUNDED, border_style="blue")
    table.add_column("Metric", style="cyan", no_wrap=True)
    table.add_column("Value", justify="right")
    for entry in report.entries:
        if entry.skipped is not None:
            table.add_row(entry.name, Text(f"skipped: {entry.skipped}", style="dim"))
        else:
            table.add_row(entry.name, entry.render_value())
    console.print(table)
    return buffer.getvalue()


def render_sweep(rows: list[dict[str, float]], color: bool = True) -> str:
    """Render per-severity drop-detection AUPRC for the monitor, its ablations and the baseline."""
    buffer = StringIO()
    console = _console(buffer, color)
    keys = list(rows[0]) if rows else []
    ablations = [k for k in keys if k not in ("severity", "monitor", "maxprob") and not k.endswith("_detected")]

    table = Table(
        title="Drop-detection AUPRC by severity",
        show_header=True,
        header_style="bold cyan",
        box=box.ROUNDED,
        border_style="blue",
        row_styles=["", "dim"],
    )
    table.add_column("Severity", justify="right")
    table.add_column("Monitor", justify="right")
    for name in ablations:
        table.add_column(name.replace("_", "-").capitalize(), justify="right")
    table.add_column("Max-prob", justify="right")
    table.add_column("Gain", justify="right")
    for row in rows:
        gain = row["monitor"] - row["maxprob"]
        style = "bold green" if gain > 0 else "bold red"
        table.add_row(
            str(int(row["severity"])),
            f"{row['monitor']:.3f}",
            *(f"{row[name]:.3f}" for name in ablations),
            f"{row['maxprob']:.3f}",
            Text(f"{gain:+.3f}", style=style),
        )
    console.print(table)
    return buffer.getvalue()


def render_fit_summary(params_weights: tuple[float, ...], bias: float, log_loss: float,
                       accuracy: float, examples: int, color: bool = True) -> str:
    buffer = StringIO()
    console = _console(buffer, color)

    grid = Table.grid(padding=(0, 2))
    grid.add_column(style="bold cyan", justify="right")
    grid.add_column()
    names = ("divergence", "instability", "inconsistency", "proxy")
    for name, w in zip(names, params_weights):
        grid.add_row(Text(f"w[{name}]:"), f"{w:+.6f}")
    grid.add_row("bias:", f"{bias:+.6f}")
    grid.add_row("examples:", str(examples))
    grid.add_row("log_loss:", f"{log_loss:.6f}")
    grid.add_row("accuracy:", f"{accuracy:.4f}")
    console.print(Panel(grid, title="[bold]Combiner fit[/bold]", border_style="blue", box=box.ROUNDED))
    return buffer.getvalue()
