"""Command-line interface for stream-trust."""

import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Iterator, Optional

import typer
from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn, TimeRemainingColumn

from streamtrust import __version__
from streamtrust.config import Config, load_config, save_example_config
from streamtrust.experiments import SWEEP_VARIANTS, evaluate_run, severity_sweep, sweep_report
from streamtrust.fitting import eval_combiner, fit_combiner_detailed
from streamtrust.models import CombinerParams, MonitorStep, StreamRecord
from streamtrust.monitor import Monitor, MonitorVariant, collect_signals
from streamtrust.output import (
    build_manifest,
    file_digest,
    render_fit_summary,
    render_report,
    render_sweep,
    write_manifest,
)
from streamtrust.params import load_params, save_params
from streamtrust.streams import read_decisions, read_header, read_stream, write_decisions, write_stream
from streamtrust.streams.generator import SEVERITIES, generate
from streamtrust.streams.plan import load_plan


EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Label-free streaming uncertainty monitor with budgeted abstention.",
)
console = Console(stderr=True)


def version_callback(value: bool):
    """Print version and exit."""
    if value:
        print(f"stream-trust version {__version__}")
        raise typer.Exit()


@app.callback()
def root(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit"
    ),
) -> None:
    """
    Generate synthetic streams, fit the combiner, monitor streams and evaluate runs.

    Examples:
        stream-trust gen plan.json --out id.stream
        stream-trust fit dev.stream --out params.json
        stream-trust monitor id.stream --params params.json --out id.decisions
        stream-trust eval id.stream id.decisions --out id.report
    """


@contextmanager
def _handled(action: str) -> Iterator[None]:
    """Map failures to exit codes: 1 for invalid input, 2 for everything else."""
    try:
        yield
    except typer.Exit:
        raise
    except ValueError as e:
        console.print(f"[red]Error:[/red] {action}: {escape(str(e))}")
        raise typer.Exit(EXIT_VALIDATION)
    except Exception as e:
        console.print(f"[red]Error:[/red] {action}: {escape(str(e))}")
        raise typer.Exit(EXIT_RUNTIME)


def _progress(quiet: bool) -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[bold cyan]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeRemainingColumn(),
        console=console,
        transient=False,
        disable=quiet,
    )


def _tracked(items: Iterable, progress: Progress, description: str, total: int | None = None) -> Iterator:
    task = progress.add_task(description, total=total)
    for item in items:
        yield item
        progress.advance(task)


def _load_config(config_file: Optional[Path]) -> Config:
    config = load_config(config_file)
    if config_file:
        console.print(f"[green]✓[/green] Configuration loaded from {config_file}")
    return config


@app.command()
def gen(
    plan_file: Path = typer.Argument(..., help="Stream plan (.json, or YAML with the config extra)"),
    out: Path = typer.Option(..., "--out", help="Stream file to write"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Base seed; overrides the plan's seed"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress bars"),
) -> None:
    """
    Generate a synthetic stream from a plan of ID, CID and OOD segments.

    Segment seeds default to base seed + position + 1, so the same plan and
    seed always produce the same bytes.
    """
    with _handled("stream generation failed"):
        plan = load_plan(plan_file, seed)
        model = plan.model
        with _progress(quiet) as progress:
            records = _tracked(generate(plan.segments, model), progress, "Generating stream...", plan.length)
            count = write_stream(out, records, model.num_classes, model.feature_dim)
        console.print(f"[green]✓[/green] Stream written to {out} ([bold]{count}[/bold] records)")

        manifest = build_manifest(
            "gen",
            config=model.model_dump(),
            inputs={"plan": plan_file},
            outputs={"stream": out},
            seeds={"seed": plan.seed},
            extra={"plan": plan.model_dump(), "records": count, "sha256": {"stream": file_digest(out)}},
        )
        write_manifest(out, manifest)


@app.command()
def fit(
    stream_file: Path = typer.Argument(..., help="Labeled development stream"),
    out: Path = typer.Option(..., "--out", help="Params file to write"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="Configuration file"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress bars"),
) -> None:
    """Fit the logistic combiner on a labeled development stream."""
    with _handled("fit failed"):
        config = _load_config(config_file)
        with _progress(quiet) as progress:
            records = list(_tracked(read_stream(stream_file), progress, "Reading dev stream..."))
        if not any(r.label is not None for r in records):
            raise ValueError(f"{stream_file} has no labels; fitting needs a labeled dev stream")

        examples = collect_signals(records, config.signal)
        result = fit_combiner_detailed(examples, config.fit)
        log_loss, accuracy = eval_combiner(result.params, examples, config.fit.class_balance)
        diagnostics = {
            "accuracy": accuracy,
            "converged": result.converged,
            "examples": len(examples),
            "gradient_norm": result.gradient_norm,
            "iterations": result.iterations,
            "log_loss": log_loss,
        }
        save_params(out, result.params, diagnostics)
        print(render_fit_summary(result.params.weights, result.params.bias, log_loss, accuracy,
                                 len(examples), color=sys.stdout.isatty()))
        if not result.converged:
            console.print(f"[yellow]![/yellow] Fit stopped after {result.iterations} iterations without converging")
        console.print(f"[green]✓[/green] Params written to {out}")

        manifest = build_manifest(
            "fit",
            config=config.snapshot(),
            inputs={"stream": stream_file, "config": config_file},
            outputs={"params": out},
            extra={
                "diagnostics": diagnostics,
                "sha256": {"stream": file_digest(stream_file), "params": file_digest(out)},
            },
        )
        write_manifest(out, manifest)


@app.command()
def monitor(
    stream_file: Path = typer.Argument(..., help="Stream to monitor"),
    out: Path = typer.Option(..., "--out", help="Decisions file to write"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="Configuration file"),
    params_file: Optional[Path] = typer.Option(None, "--params", help="Fitted combiner params (default: built-in weights)"),
    quantized: bool = typer.Option(False, "--quantized", help="Use the integer/lookup-table signal kernels"),
    variant: str = typer.Option("full", "--variant", help="full, no_temporal, no_conformal or maxprob"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress bars"),
) -> None:
    """Run the online monitor over a stream and write one decision per step."""
    with _handled("monitoring failed"):
        config = _load_config(config_file)
        chosen = MonitorVariant.parse(variant)
        if params_file:
            params = load_params(params_file)
        else:
            params = CombinerParams.default()
            console.print("[yellow]![/yellow] No --params given, using built-in combiner weights")

        header = read_header(stream_file)
        engine = Monitor(config, params, header.num_classes, header.feature_dim,
                         quantized=quantized, variant=chosen)
        abstentions = 0

        def counted(steps: Iterable[MonitorStep]) -> Iterator[MonitorStep]:
            nonlocal abstentions
            for step in steps:
                abstentions += step.decision.abstained
                yield step

        with _progress(quiet) as progress:
            records = _tracked(read_stream(stream_file), progress, "Monitoring stream...")
            count = write_decisions(out, counted(engine.run(records)))
        rate = abstentions / count if count else 0.0
        console.print(
            f"[green]✓[/green] Decisions written to {out} "
            f"([bold]{count}[/bold] steps, {abstentions} abstentions, rate {rate:.3f})"
        )

        manifest = build_manifest(
            "monitor",
            config=config.snapshot(),
            inputs={"stream": stream_file, "config": config_file, "params": params_file},
            outputs={"decisions": out},
            extra={
                "params": params.model_dump(),
                "quantized": quantized,
                "variant": chosen.value,
                "state_nbytes": engine.state_nbytes(),
                "sha256": {"stream": file_digest(stream_file), "decisions": file_digest(out)},
            },
        )
        write_manifest(out, manifest)


def _read_all(path: Path, progress: Progress, description: str) -> list[StreamRecord]:
    return list(_tracked(read_stream(path), progress, description))


@app.command(name="eval")
def evaluate(
    stream_file: Path = typer.Argument(..., help="Monitored stream"),
    decisions_file: Path = typer.Argument(..., help="Decisions written by 'monitor'"),
    out: Path = typer.Option(..., "--out", help="Report file to write"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="Configuration file"),
    id_stream: Optional[Path] = typer.Option(
        None, "--id-stream", help="Separate ID stream for the drop band (default: head of the stream)"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress bars"),
) -> None:
    """Score a monitored stream: calibration, failure detection, drop detection and budget adherence."""
    with _handled("evaluation failed"):
        config = _load_config(config_file)
        with _progress(quiet) as progress:
            records = _read_all(stream_file, progress, "Reading stream...")
            id_records = _read_all(id_stream, progress, "Reading ID stream...") if id_stream else None
        steps = read_decisions(decisions_file)
        report = evaluate_run(records, steps, config, id_records)
        written = report.write(out)
        print(render_report(report, title="Evaluation", color=sys.stdout.isatty()))
        console.print(f"[green]✓[/green] Report written to {out}")

        manifest = build_manifest(
            "eval",
            config=config.snapshot(),
            inputs={"stream": stream_file, "decisions": decisions_file, "config": config_file, "id_stream": id_stream},
            outputs={p.name: p for p in written},
            extra={"sha256": {p.name: file_digest(p) for p in written}},
        )
        write_manifest(out, manifest)


@app.command()
def sweep(
    out: Path = typer.Option(..., "--out", help="Report file to write"),
    seeds: int = typer.Option(20, "--seeds", help="Number of seeded replicas per severity"),
    seed: int = typer.Option(0, "--seed", help="First replica seed"),
    config_file: Optional[Path] = typer.Option(None, "--config", help="Configuration file"),
    params_file: Optional[Path] = typer.Option(
        None, "--params", help="Combiner params for every seed (default: fit one per seed on a dev mixture)"
    ),
    id_length: int = typer.Option(1000, "--id-length", help="ID steps before the shift"),
    cid_length: int = typer.Option(1000, "--cid-length", help="CID steps after the shift"),
    dev_length: int = typer.Option(2000, "--dev-length", help="Development mixture steps per seed"),
    ablations: bool = typer.Option(
        True, "--ablations/--no-ablations", help="Also score no_temporal, no_conformal and frozen weights"
    ),
    fast: bool = typer.Option(False, "--fast", help="Run seeds in worker processes"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide progress bars"),
) -> None:
    """Compare drop-detection AUPRC of the monitor, its ablations and max-probability over CID severities."""
    with _handled("sweep failed"):
        if seeds < 1:
            raise ValueError(f"--seeds must be >= 1, got {seeds}")
        config = _load_config(config_file)
        params = load_params(params_file) if params_file else None
        variants = SWEEP_VARIANTS if ablations else ()
        seed_list = list(range(seed, seed + seeds))
        with _progress(quiet) as progress:
            task = progress.add_task("Running seeds...", total=len(seed_list))
            rows = severity_sweep(
                seed_list,
                SEVERITIES,
                config=config,
                params=params,
                variants=variants,
                id_length=id_length,
                cid_length=cid_length,
                dev_length=dev_length,
                parallel=fast,
                on_replica=lambda: progress.advance(task),
            )
        report = sweep_report(rows)
        report.write(out)
        print(render_sweep(rows, color=sys.stdout.isatty()))
        console.print(f"[green]✓[/green] Sweep report written to {out}")

        manifest = build_manifest(
            "sweep",
            config=config.snapshot(),
            inputs={"config": config_file, "params": params_file},
            outputs={"report": out},
            seeds={"first": seed, "count": seeds},
            extra={
                "id_length": id_length,
                "cid_length": cid_length,
                "dev_length": dev_length if params_file is None else None,
                "variants": list(variants),
                "sha256": {"report": file_digest(out)},
            },
        )
        write_manifest(out, manifest)


@app.command("init-config")
def init_config(
    path: Path = typer.Argument(..., help="Where to write the example configuration"),
) -> None:
    """Write a documented example configuration file."""
    with _handled("error generating config"):
        save_example_config(path)
        console.print(f"[green]✓[/green] Example configuration saved to {path}")


def main() -> None:
    """Entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
