import click
from dotenv import load_dotenv

from cli.commands import register

load_dotenv()


@click.group(
    help="Numerical extremal distances to weighted Bergman spaces on the half-plane and the ball.",
    context_settings={"help_option_names": ["-h", "--help"]},
)
@click.option("--config", "config", type=click.Path(dir_okay=False), default=None, help="Run configuration JSON.")
@click.option("--out", "out", type=click.Path(file_okay=False), default=None, help="Artifact directory.")
@click.option("--seed", "seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Monte Carlo seed.")
@click.option("--threads", "threads", type=click.IntRange(1), default=None, help="Worker threads (speed only).")
@click.option("--log-level", "log_level", default=None, help="Logging level (default from BERGDIST_LOG_LEVEL).")
@click.version_option("1.0.0", prog_name="bergdist")
@click.pass_context
def cli(ctx: click.Context, config, out, seed, threads, log_level):
    ctx.obj = {"config": config, "out": out, "seed": seed, "threads": threads, "log_level": log_level}


# Register commands
register(cli)


if __name__ == "__main__":
    cli()
