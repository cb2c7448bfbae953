"""
Base command interface for experiment verbs
Every verb validates its config, runs, and reports through one response shape
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import asyncio
import logging

from pydantic import BaseModel


class BaseCommand(ABC):
    """
    Abstract base class for all experiment commands
    Each verb (simulate-prior, invert, fit, ...) should inherit from this
    """

    # pydantic model of the verb's config document
    config_model: type = BaseModel

    def __init__(self, name: str):
        """
        Initialize base command

        Args:
            name: Verb name for logging and identification
        """
        self.name = name
        self.logger = logging.getLogger(f"selgauss.{name}")
        self.out_dir: Optional[Path] = None
        self.threads = 1

    async def initialize(self, out_dir: Path, threads: int = 1) -> bool:
        """
        Prepare the output directory

        Args:
            out_dir: Directory receiving every output file
            threads: Upper bound on concurrent replicate jobs

        Returns:
            True if the directory is usable
        """
        out_dir.mkdir(parents=True, exist_ok=True)
        self.out_dir = out_dir
        self.threads = max(1, int(threads))
        return True

    @abstractmethod
    async def run(self, config: BaseModel, seed: int) -> Dict[str, Any]:
        """
        Execute the verb

        Args:
            config: Validated config document
            seed: Run seed

        Returns:
            Response dictionary (see create_response)
        """
        pass

    async def run_jobs(self, jobs: Sequence[Callable[[], Any]]) -> List[Any]:
        """
        Run blocking jobs in worker threads, at most self.threads at a time

        Returns:
            Job results in submission order
        """
        semaphore = asyncio.Semaphore(self.threads)

        async def guarded(job: Callable[[], Any]) -> Any:
            async with semaphore:
                return await asyncio.to_thread(job)

        return list(await asyncio.gather(*(guarded(job) for job in jobs)))

    async def cleanup(self) -> bool:
        """Release resources; commands hold none by default"""
        return True

    def output_path(self, *parts: str) -> Path:
        if self.out_dir is None:
            raise RuntimeError(f"Command {self.name} used before initialize()")
        return self.out_dir.joinpath(*parts)

    def create_response(
        self,
        success: bool,
        action: str,
        data: Optional[Dict[str, Any]] = None,
        error: Optional[str] = None
    ) -> Dict[str, Any]:
        """
        Create standardized response

        Args:
            success: Whether the verb succeeded
            action: Verb name
            data: Optional data to include
            error: Optional error message

        Returns:
            Standardized response dictionary
        """
        response = {
            "success": success,
            "action": action,
        }

        if data:
            response.update(data)

        if error:
            response["error"] = error

        return response
