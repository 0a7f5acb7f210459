import json
import logging
import os
import sys
from typing import Any, Callable, Optional

import click
from dotenv import load_dotenv

from errors import (
    CapacityError,
    ConfigError,
    GradcheckFailure,
    RelflatError,
    TrainingDivergedError,
)
from flatness import FlatnessConfig, measure_kappa
from harness import (
    BENCH_BATCH,
    GradcheckConfig,
    bench_csv,
    load_data_argument,
    load_run_config,
    load_study_config,
    parse_model,
    parse_sizes,
    read_json,
    run_bench,
    run_gradcheck,
    run_study,
    train,
)
from model import evaluate, forward_loss, load_checkpoint

# Load environment variables
load_dotenv()

logger = logging.getLogger("relflat")

EXIT_CODES = (
    (ConfigError, 2),
    (TrainingDivergedError, 3),
    (CapacityError, 4),
    (GradcheckFailure, 5),
)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def run_command(action: Callable[[], Any]) -> Any:
    """Run a command body, turning relflat errors into their exit codes."""
    try:
        return action()
    except RelflatError as e:
        code = exit_code_for(e)
        logger.error("%s: %s", type(e).__name__, e)
        if code == 4:
            click.echo("hint: rerun with --mode trace-hutchinson", err=True)
        sys.exit(code)


def emit_json(payload: Any) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@click.group()
@click.option(
    "--log-level",
    default=lambda: os.getenv("RELFLAT_LOG_LEVEL", "INFO"),
    show_default="RELFLAT_LOG_LEVEL or INFO",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Logging verbosity (logs go to stderr).",
)
def cli(log_level: str):
    """Relative flatness measures and flatness-aware training."""
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


@cli.command("train")
@click.argument("config_path", type=click.Path(dir_okay=False))
def train_command(config_path: str):
    """Train from a JSON run config; writes metrics.csv, checkpoint.json and summary.json."""

    def action():
        cfg = load_run_config(config_path)
        result = train(cfg)
        emit_json(result.summary())

    run_command(action)


@cli.command("flatness")
@click.argument("checkpoint", type=click.Path(dir_okay=False))
@click.argument("data", type=click.Path(dir_okay=False))
@click.option(
    "--mode",
    type=click.Choice(["neuronwise", "trace-exact", "trace-hutchinson"]),
    default="neuronwise",
    show_default=True,
)
@click.option("--samples", "-V", type=int, default=100, show_default=True, help="Hutchinson probes.")
@click.option("--labels", type=click.Path(dir_okay=False), default=None, help="IDX label file for IDX data.")
@click.option("--seed", type=int, default=0, show_default=True, help="Probe and split seed.")
@click.option("--dense-cap", type=int, default=None, help="Dense-Hessian parameter cap.")
def flatness_command(checkpoint: str, data: str, mode: str, samples: int, labels: Optional[str], seed: int, dense_cap: Optional[int]):
    """Measure κ of a checkpoint over a full dataset and print the report as JSON."""

    def action():
        from tensor import RngStream, Stream

        state = load_checkpoint(checkpoint)
        ds = load_data_argument(data, labels, part="train", seed=seed)
        options = {"mode": mode, "samples": samples, "hessian_batch": "full-set"}
        if dense_cap is not None:
            options["dense_cap"] = dense_cap
        cfg = parse_model(FlatnessConfig, options)
        forward = forward_loss(state, ds.batch)
        report = measure_kappa(forward.loss, forward.flatness_weight, cfg, RngStream(seed, Stream.KAPPA_EVAL))
        emit_json(report.to_dict())

    run_command(action)


@cli.command("eval")
@click.argument("checkpoint", type=click.Path(dir_okay=False))
@click.argument("data", type=click.Path(dir_okay=False))
@click.option("--labels", type=click.Path(dir_okay=False), default=None, help="IDX label file for IDX data.")
@click.option("--part", type=click.Choice(["train", "val", "test"]), default="test", show_default=True,
              help="Split to use when DATA is a JSON dataset spec.")
@click.option("--seed", type=int, default=0, show_default=True)
def eval_command(checkpoint: str, data: str, labels: Optional[str], part: str, seed: int):
    """Loss and accuracy of a checkpoint on a dataset."""

    def action():
        state = load_checkpoint(checkpoint)
        ds = load_data_argument(data, labels, part=part, seed=seed)
        result = evaluate(state, ds.batch)
        emit_json({"loss": result.loss, "accuracy": result.accuracy, "n": result.n})

    run_command(action)


@cli.command("gradcheck")
@click.argument("config_path", type=click.Path(dir_okay=False), required=False)
def gradcheck_command(config_path: Optional[str]):
    """Finite-difference and closed-form checks of the flatness gradient."""

    def action():
        cfg = parse_model(GradcheckConfig, read_json(config_path)) if config_path else GradcheckConfig()
        report = run_gradcheck(cfg)
        emit_json(report.to_dict())
        report.raise_for_failure()

    run_command(action)


@cli.command("bench")
@click.option("--sizes", default="8x8,16x16,32x32", show_default=True, help="Layer sizes d x m.")
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--samples", "-V", type=int, default=10, show_default=True, help="Hutchinson probes.")
@click.option(
    "--batch-size", type=click.IntRange(min=1), default=BENCH_BATCH, show_default=True, help="Rows in the timed batch."
)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Write the CSV here instead of stdout.")
def bench_command(sizes: str, repeats: int, samples: int, batch_size: int, output: Optional[str]):
    """Time the flatness measures across layer sizes; prints CSV."""

    def action():
        rows = run_bench(parse_sizes(sizes), repeats=repeats, samples=samples, batch_size=batch_size)
        text = bench_csv(rows)
        if output:
            with open(output, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        else:
            click.echo(text, nl=False)

    run_command(action)


@cli.command("study")
@click.argument("config_path", type=click.Path(dir_okay=False), required=False)
def study_command(config_path: Optional[str]):
    """Baseline / FAM / SAM comparison on noisy two moons."""

    def action():
        from harness import StudyConfig

        cfg = load_study_config(config_path) if config_path else StudyConfig()
        emit_json(run_study(cfg))

    run_command(action)


if __name__ == "__main__":
    cli()
