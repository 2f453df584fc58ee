import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
from pydantic import ValidationError

from core.config import env_settings, settings_scope
from core.errors import BergdistError
from core.logging_config import configure_logging
from core.schemas.run_config import RunConfig
from service.command_service import CommandService
from service.storage_service import ArtifactStorageService
from service.suite_service import SuiteService

logger = logging.getLogger(__name__)


def load_config(path: Optional[str], seed: Optional[int]) -> RunConfig:
    """Read the run configuration; --seed overrides the seed stored in it"""
    config = RunConfig.load(path) if path else RunConfig()
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    return config


def _emit(payload: Dict[str, Any]) -> None:
    click.echo(json.dumps(payload, sort_keys=True, allow_nan=True, default=str))


def _fail(payload: Dict[str, Any], code: int) -> None:
    _emit(payload)
    sys.exit(code)


def execute(ctx: click.Context, command: str) -> None:
    """Run one command with the group options; errors leave as JSON with their exit code"""
    opts = ctx.obj
    configure_logging(opts["log_level"] or env_settings().log_level)
    try:
        config = load_config(opts["config"], opts["seed"])
        with settings_scope(config.effective_settings()) as settings:
            out = Path(opts["out"] or settings.out_dir)
            store = ArtifactStorageService(out, config.config_hash(), settings.seed)
            store.write_json("config.json", {"config": config.model_dump(mode="json")})
            threads = opts["threads"] or settings.threads
            if command == "suite":
                report = SuiteService(store, settings.seed, threads).run(config.command.criteria)
                _emit({"command": "suite", "passed": report.passed, "exit_code": report.exit_code})
                sys.exit(report.exit_code)
            summary = CommandService(config, store, threads).run(command)
            _emit({**summary, "artifacts": list(store.written)})
    except BergdistError as exc:
        logger.error("%s: %s", type(exc).__name__, exc.message)
        _fail(exc.to_dict(), exc.exit_code)
    except ValidationError as exc:
        logger.error("invalid configuration: %d error(s)", exc.error_count())
        _fail({"error": "ValidationError", "message": str(exc), "exit_code": 2, "details": {}}, 2)
    except FileNotFoundError as exc:
        _fail({"error": "FileNotFoundError", "message": str(exc), "exit_code": 2, "details": {}}, 2)


def _make(name: str, help_text: str) -> click.Command:
    @click.command(name=name, help=help_text)
    @click.pass_context
    def command(ctx: click.Context) -> None:
        execute(ctx, name)

    return command


COMMAND_HELP = {
    "norm": "Weighted Bergman norm and sup-norm of the configured function, with verdicts.",
    "kernel-verify": "Residual table of the reproducing formula at sample points.",
    "whitney": "Whitney squares of a rectangle with overlap count and mean-value ratios.",
    "lemma3": "Ratio table of the weighted kernel integral over points w.",
    "levelset": "Level-set heatmap PNG and member-pixel CSV.",
    "phi": "Ladder and verdict of the half-plane distance functional at eps.",
    "psi": "Ladder and verdict of the ball distance functional at eps.",
    "dist": "Bisection bracket of the distance to the Bergman space.",
    "decompose": "Split f = f1 + f2 at eps and check both halves.",
    "fr-check": "Forelli-Rudin type ratio tables.",
    "suite": "Run the acceptance criteria.",
}


def register(group: click.Group) -> None:
    for name, help_text in COMMAND_HELP.items():
        group.add_command(_make(name, help_text))
