"""
selgauss - experiment runner
Bayesian spatial inversion with selection Gaussian priors: prior simulation,
conditioning, parameter inference and the synthetic seismic study.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import sys
import os
import argparse
import asyncio
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from pydantic import ValidationError

from experiment_framework.command_registry import get_command, get_registry
from selgauss.commands import register_all
from selgauss.errors import ConfigError, NumericalError, ParameterDomainError
from selgauss.io.tables import read_json
from selgauss.logger import setup_logger
from selgauss.recipes import RECIPES

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger("selgauss.main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selgauss",
        description="Selection Gaussian spatial inversion experiments",
    )
    parser.add_argument("verb", choices=sorted(RECIPES), help="Experiment to run")
    parser.add_argument("--config", type=Path, default=None, help="JSON config (default: built-in recipe)")
    parser.add_argument("--seed", type=int, default=None, help="Run seed (default: the config's seed)")
    parser.add_argument("--out", type=Path, default=None, help="Output directory")
    parser.add_argument("--threads", type=int, default=None, help="Concurrent replicate jobs")
    parser.add_argument("--debug", action="store_true", help="Debug logging")
    return parser


def load_config(verb: str, path: Optional[Path], model: type) -> Any:
    """Validated config document, or the verb's recipe when no path is given"""
    if path is None:
        return RECIPES[verb]()
    data = read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


async def run_verb(verb: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Initialize, run and clean up one command"""
    if not get_registry().is_command_registered(verb):
        raise ConfigError(f"Unknown command: {verb}")
    command = get_command(verb)

    config = load_config(verb, args.config, command.config_model)
    seed = config.seed if args.seed is None else args.seed
    out_dir = args.out or Path(os.getenv("SELGAUSS_OUTPUT_DIR", "results")) / verb
    threads = args.threads or int(os.getenv("SELGAUSS_THREADS", "1"))

    await command.initialize(out_dir, threads)
    try:
        return await command.run(config, seed)
    finally:
        await command.cleanup()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = "DEBUG" if args.debug else os.getenv("SELGAUSS_LOG_LEVEL", "INFO")
    setup_logger("selgauss", os.getenv("SELGAUSS_LOG_FILE"), level)

    register_all()
    logger.debug(f"Registered commands: {get_registry().list_commands()}")

    try:
        response = asyncio.run(run_verb(args.verb, args))
    except (ConfigError, ParameterDomainError) as exc:
        logger.error(f"Configuration error: {exc}")
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error(f"Numerical failure: {exc}")
        return EXIT_NUMERICAL

    if not response.get("success"):
        logger.error(f"{args.verb} failed: {response.get('error', 'unknown error')}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
