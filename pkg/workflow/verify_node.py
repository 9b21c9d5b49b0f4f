"""
Verification Node
Runs every property suite and prints a pass/fail report.
"""

from typing import Any, Dict

from rich.table import Table

from config.config import RunConfig
from utils.logging_setup import console
from verification.suites import Mutations, run_all
from .base_node import BaseExperimentNode, NodeConfig


class VerifyNode(BaseExperimentNode):
    """Executes the property suites; `passed` is False when any suite fails."""

    def __init__(self, config: NodeConfig, run: RunConfig, mutations: Mutations = Mutations(), quick: bool = False):
        super().__init__(config, run)
        self.mutations = mutations
        self.quick = quick

    async def process(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        results = run_all(seed=self.run.seeds[0], mutations=self.mutations, quick=self.quick)
        table = Table(title="Verification suites")
        table.add_column("suite")
        table.add_column("tolerance", justify="right")
        table.add_column("max error", justify="right")
        table.add_column("seconds", justify="right")
        table.add_column("result")
        for result in results:
            table.add_row(
                result.name,
                f"{result.tolerance:.0e}",
                f"{result.max_error:.3e}",
                f"{result.seconds:.2f}",
                "[green]pass[/green]" if result.passed else "[red]FAIL[/red]",
            )
        console.print(table)
        return {"passed": all(r.passed for r in results), "results": results}
