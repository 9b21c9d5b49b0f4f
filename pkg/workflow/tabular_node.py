"""
Tabular Nodes
Exact diverse policy iteration on an MDP table file and the one-step toy
example.
"""

import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd
from rich.table import Table

from tabular.diverse_policy_iteration import run_dpi, toy_example
from tabular.finite_mdp import TabularActionDistribution, TabularPolicy, read_mdp
from utils.csv_io import write_frame
from utils.logging_setup import console
from .base_node import BaseExperimentNode

logger = logging.getLogger("dac.workflow.tabular")

BUNDLED_MDP = Path(__file__).resolve().parents[1] / "data" / "six_state.mdp"
TOY_SCHEMA = "toy"


class TabularDpiNode(BaseExperimentNode):
    """Runs diverse policy iteration and writes the per-iteration J trace."""

    async def process(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        path = self.run.mdp_path or BUNDLED_MDP
        mdp = read_mdp(path)
        logger.info(f"Loaded MDP {path} ({mdp.n_states} states, {mdp.n_actions} actions, gamma {mdp.gamma})")
        q = input_data.get("buffer") or TabularActionDistribution.uniform(mdp.n_states, mdp.n_actions)
        start = TabularPolicy.uniform(mdp.n_states, mdp.n_actions)
        # MonotonicityViolation propagates to the caller
        trace = run_dpi(mdp, q, self.run.dpi, start)
        trace_path = self.output_dir / "dpi_trace.csv"
        trace.write_csv(trace_path)

        table = Table(title=f"Diverse policy iteration (alpha={self.run.dpi.alpha}, {self.run.dpi.improvement_mode})")
        table.add_column("state", justify="right")
        table.add_column("J", justify="right")
        for s, value in enumerate(trace.final.j_values):
            table.add_row(str(s), f"{value:.6f}")
        console.print(table)
        logger.info(f"{len(trace.iterates)} iterations, converged={trace.converged}; trace written to {trace_path}")
        return {
            "converged": trace.converged,
            "iterations": len(trace.iterates),
            "trace_path": trace_path,
            "final_j": trace.final.j_values.tolist(),
        }


class ToyNode(BaseExperimentNode):
    """Solves the one-step toy problem and reports expected steps to the unseen action."""

    async def process(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        n_actions = self.run.n_actions
        result = toy_example(n_actions, beta=self.run.dpi.beta)
        frame = pd.DataFrame({
            "action": range(n_actions),
            "policy": result.policy_row,
            "mixture": result.mixture_row,
        })
        path = write_frame(frame, self.output_dir / "toy.csv", TOY_SCHEMA)

        table = Table(title=f"One-step toy problem, N_a={n_actions}")
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_row(f"pi*(A_{n_actions})", f"{result.policy_row[-1]:.6f}")
        table.add_row("expected steps, alpha=1/N_a", f"{result.dac_expected_steps:.6f}")
        table.add_row("expected steps, alpha=1", f"{result.uniform_expected_steps:.6f}")
        console.print(table)
        return {
            "unseen_probability": float(result.policy_row[-1]),
            "dac_expected_steps": result.dac_expected_steps,
            "uniform_expected_steps": result.uniform_expected_steps,
            "path": path,
        }
