"""
Base Experiment Node
Defines the core functionality for the experiment nodes behind each
command-line subcommand.
"""

import asyncio
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from pydantic import BaseModel

from config.config import RunConfig

logger = logging.getLogger("dac.workflow")

T = TypeVar("T")


class NodeState(BaseModel):
    """Represents the current state of an experiment node."""
    active: bool = False
    completed: bool = False
    iteration: int = 0
    results: Dict[str, Any] = {}
    errors: List[str] = []


class NodeConfig(BaseModel):
    """Configuration for an experiment node."""
    name: str
    description: str
    max_concurrent_tasks: int = 3


class BaseExperimentNode(ABC):
    """Abstract base class for all experiment nodes."""

    def __init__(self, config: NodeConfig, run: RunConfig):
        self.config = config
        self.run = run
        self.state = NodeState()

    @property
    def output_dir(self) -> Path:
        return Path(self.run.output_dir)

    def seed_dir(self, seed: int) -> Path:
        return self.output_dir / f"seed_{seed}"

    @abstractmethod
    async def process(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run the experiment of this node.

        Args:
            input_data: Extra inputs (empty when called from the command line)

        Returns:
            Dict containing the results
        """
        pass

    async def run_seeds(self, job: Callable[[int], T], seeds: Optional[Sequence[int]] = None) -> List[T]:
        """
        Run job(seed) for every seed in worker threads.

        At most max_concurrent_tasks seeds run at once; results come back in
        seed order.
        """
        seeds = list(self.run.seeds if seeds is None else seeds)
        semaphore = asyncio.Semaphore(max(1, self.config.max_concurrent_tasks))

        async def guarded(seed: int) -> T:
            async with semaphore:
                result = await asyncio.to_thread(job, seed)
                self.state.iteration += 1
                logger.info(f"{self.config.name}: seed {seed} finished ({self.state.iteration}/{len(seeds)})")
                return result

        return list(await asyncio.gather(*(guarded(seed) for seed in seeds)))

    async def execute(self, input_data: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Start, process and complete the node; errors are recorded and re-raised."""
        await self.start()
        try:
            results = await self.process(input_data or {})
        except Exception as e:
            await self.handle_error(e)
            raise
        await self.complete(results)
        return results

    async def start(self):
        """Prepare the node for processing."""
        self.state.active = True
        self.state.iteration = 0
        self.state.completed = False
        self.state.results.clear()
        self.state.errors.clear()
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"{self.config.name}: {self.config.description}")

    async def complete(self, results: Dict[str, Any]):
        """
        Mark the node as completed with the given results.

        Args:
            results: The final results from this node's processing
        """
        self.state.active = False
        self.state.completed = True
        self.state.results = results

    async def handle_error(self, error: Exception):
        """
        Record an error that stopped processing.

        Args:
            error: The error that occurred
        """
        self.state.active = False
        self.state.errors.append(f"{type(error).__name__}: {error}")
        logger.error(f"{self.config.name} failed: {error}")

    def __str__(self) -> str:
        return f"{self.config.name} Node (Active: {self.state.active}, Completed: {self.state.completed})"
