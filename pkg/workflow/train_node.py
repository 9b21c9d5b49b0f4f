"""
Training Node
Seeded training runs of the diversity learner (or the SAC reference) on the
desk-scale environments, writing records, metrics and checkpoints per seed.
"""

import logging
from typing import Any, Dict

import numpy as np

from agents.base_agent import BaseLearner
from agents.dac_agent import DacAgent
from agents.replay_buffer import ReplayBuffer
from agents.sac_agent import SacAgent
from agents.training import run_training
from config.config import DacHyper, RunConfig
from envs.base_env import BaseEnv
from envs.chain import ChainEnv, past_threshold
from envs.maze import FourRoomMaze, in_upper_right_room
from envs.toy import OneStepToyEnv
from envs.wrappers import DelayedRewardWrapper, SparseThresholdWrapper
from utils.csv_io import write_frame
from utils.errors import ConfigurationError
from utils.records import METRICS_SCHEMA, RECORDS_SCHEMA, metrics_frame, records_frame
from .base_node import BaseExperimentNode

logger = logging.getLogger("dac.workflow.train")

ENV_NAMES = ("chain", "delayed_chain", "sparse_chain", "maze", "sparse_maze", "toy")


def build_env(run: RunConfig) -> BaseEnv:
    """Construct the environment named by run.env_name."""
    name = run.env_name
    if name == "chain":
        return ChainEnv(horizon=run.hyper.horizon)
    if name == "delayed_chain":
        return DelayedRewardWrapper(ChainEnv(horizon=run.hyper.horizon), run.delay)
    if name == "sparse_chain":
        chain = ChainEnv(horizon=run.hyper.horizon)
        return SparseThresholdWrapper(chain, past_threshold(0.75 * chain.length))
    if name == "maze":
        return FourRoomMaze(run.maze)
    if name == "sparse_maze":
        maze = FourRoomMaze(run.maze)
        return SparseThresholdWrapper(maze, in_upper_right_room(maze))
    if name == "toy":
        return OneStepToyEnv(run.n_actions)
    raise ConfigurationError(f"Unknown environment {name!r}; expected one of {', '.join(ENV_NAMES)}")


def build_agent(kind: str, env: BaseEnv, hyper: DacHyper, seed: int) -> BaseLearner:
    if kind == "sac":
        return SacAgent(env.state_dim, env.action_dim, hyper, seed)
    return DacAgent(env.state_dim, env.action_dim, hyper, seed)


class TrainNode(BaseExperimentNode):
    """Runs run_training for every seed."""

    def train_seed(self, seed: int) -> Dict[str, Any]:
        run = self.run
        env, eval_env = build_env(run), build_env(run)
        hyper = run.hyper.for_env(env.action_dim)
        agent = build_agent(run.agent, env, hyper, seed)
        if isinstance(env, OneStepToyEnv):
            buffer = env.preloaded_buffer(capacity=hyper.buffer_capacity)
        else:
            buffer = ReplayBuffer(hyper.buffer_capacity)
        out = self.seed_dir(seed)
        run_id = f"{run.agent}_{run.env_name}"

        records = list(run_training(
            env, agent, buffer, hyper, run.total_steps, np.random.default_rng(seed),
            run_id=run_id, seed=seed, eval_env=eval_env,
        ))
        write_frame(records_frame(records), out / "records.csv", RECORDS_SCHEMA)
        metrics = metrics_frame(records)
        write_frame(metrics, out / "metrics.csv", METRICS_SCHEMA)
        if run.total_steps > 0:
            agent.save_checkpoint(out / "checkpoint")
        return {"records": len(records), "updates": agent.state.updates, "metrics": metrics}

    async def process(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        build_env(self.run)  # fail fast on an unknown environment name
        per_seed = await self.run_seeds(self.train_seed)
        return {seed: result for seed, result in zip(self.run.seeds, per_seed)}
