"""
Maze Exploration Node
Reward-free exploration of the four-room maze for every seed and mixture
weight variant, with visitation curves, histograms at checkpoint steps and a
paired sign test across seeds.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from rich.table import Table
from scipy.stats import binomtest

from agents.dac_agent import DacAgent
from agents.replay_buffer import ReplayBuffer
from agents.training import run_training
from envs.base_env import StepResult
from envs.maze import FourRoomMaze
from envs.visitation import VisitationGrid
from utils.csv_io import write_frame
from utils.logging_setup import console
from utils.records import METRICS_SCHEMA, metrics_frame
from .base_node import BaseExperimentNode

logger = logging.getLogger("dac.workflow.maze")

CURVE_SCHEMA = "visitation_curve"
CHECKPOINT_SCHEMA = "visitation_checkpoints"
SUMMARY_SCHEMA = "maze_summary"
SIGN_TEST_SCHEMA = "sign_test"


def variant_label(alpha: float) -> str:
    return f"alpha_{alpha:g}"


class MazeExploreNode(BaseExperimentNode):
    """Pure-exploration sweep over seeds and mixture weights."""

    def explore(self, seed: int, alpha: float) -> int:
        """
        One seeded run of one variant.

        Returns:
            Unique cells visited after the last step
        """
        run = self.run
        out = self.seed_dir(seed) / variant_label(alpha)
        maze = FourRoomMaze(run.maze)
        hyper = run.hyper.for_env(maze.action_dim, alpha=alpha, alpha_mode="fixed", gamma=run.maze.gamma)
        agent = DacAgent(maze.state_dim, maze.action_dim, hyper, seed)
        buffer = ReplayBuffer(hyper.buffer_capacity)
        grid = VisitationGrid(run.maze.side)
        checkpoints = {step for step in run.checkpoint_steps if step <= run.total_steps}
        curve: List[Dict[str, Any]] = []
        snapshots: List[Dict[str, Any]] = []

        def on_step(step: int, result: StepResult) -> None:
            grid.record_visit(result.info["position"])
            if step % hyper.log_interval == 0 or step == run.total_steps:
                curve.append({"step": step, "unique_cells": grid.unique_cells})
            if step in checkpoints:
                last = agent.state.last_metrics
                snapshots.append({
                    "step": step,
                    "unique_cells": grid.unique_cells,
                    "mean_js_div": last.get("mean_js_div", float("nan")),
                    "mean_entropy": last.get("mean_entropy", float("nan")),
                })
                stem = out / f"hist_{step}"
                grid.write_csv(stem.with_suffix(".csv"))
                grid.write_pgm(stem.with_suffix(".pgm"))
                grid.write_png(stem.with_suffix(".png"), title=f"{variant_label(alpha)}, seed {seed}, step {step}")

        records = list(run_training(
            maze, agent, buffer, hyper, run.total_steps, np.random.default_rng(seed),
            run_id=variant_label(alpha), seed=seed, callbacks=[on_step],
        ))
        write_frame(pd.DataFrame(curve, columns=["step", "unique_cells"]), out / "visitation.csv", CURVE_SCHEMA)
        write_frame(
            pd.DataFrame(snapshots, columns=["step", "unique_cells", "mean_js_div", "mean_entropy"]),
            out / "checkpoints.csv",
            CHECKPOINT_SCHEMA,
        )
        write_frame(metrics_frame(records), out / "metrics.csv", METRICS_SCHEMA)
        logger.info(f"seed {seed} {variant_label(alpha)}: {grid.unique_cells} unique cells after {run.total_steps} steps")
        return grid.unique_cells

    def run_seed(self, seed: int) -> Dict[float, int]:
        return {alpha: self.explore(seed, alpha) for alpha in self.run.variants}

    async def process(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        per_seed = await self.run_seeds(self.run_seed)
        seeds = list(self.run.seeds)
        rows = []
        for alpha in self.run.variants:
            counts = np.array([result[alpha] for result in per_seed], dtype=np.float64)
            rows.append({
                "variant": variant_label(alpha),
                "alpha": alpha,
                "n_seeds": len(seeds),
                "mean_unique_cells": float(counts.mean()),
                "std_unique_cells": float(counts.std(ddof=0)),
            })
        summary = pd.DataFrame(rows, columns=["variant", "alpha", "n_seeds", "mean_unique_cells", "std_unique_cells"])
        write_frame(summary, self.output_dir / "summary.csv", SUMMARY_SCHEMA)

        results: Dict[str, Any] = {"summary": summary}
        if 0.5 in self.run.variants and 1.0 in self.run.variants:
            results["sign_test"] = self.sign_test([r[0.5] for r in per_seed], [r[1.0] for r in per_seed])

        table = Table(title=f"Unique 1x1 cells after {self.run.total_steps} steps ({len(seeds)} seeds)")
        table.add_column("variant")
        table.add_column("mean", justify="right")
        table.add_column("std", justify="right")
        for row in rows:
            table.add_row(row["variant"], f"{row['mean_unique_cells']:.1f}", f"{row['std_unique_cells']:.1f}")
        console.print(table)
        return results

    def sign_test(self, diverse: List[int], baseline: List[int]) -> Dict[str, Any]:
        """One-sided paired sign test that the diverse variant visits more cells."""
        wins = sum(a > b for a, b in zip(diverse, baseline))
        losses = sum(a < b for a, b in zip(diverse, baseline))
        ties = len(diverse) - wins - losses
        p_value = binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue if wins + losses else 1.0
        frame = pd.DataFrame([{"wins": wins, "losses": losses, "ties": ties, "p_value": float(p_value)}])
        write_frame(frame, self.output_dir / "sign_test.csv", SIGN_TEST_SCHEMA)
        logger.info(f"sign test alpha=0.5 vs alpha=1: {wins} wins, {losses} losses, {ties} ties, p={p_value:.4g}")
        return {"wins": wins, "losses": losses, "ties": ties, "p_value": float(p_value)}
