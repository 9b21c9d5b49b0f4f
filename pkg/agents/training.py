"""
Training Loop
Alternates environment steps and gradient steps (one of each per step) and
streams ExperimentRecords.
"""

import logging
import math
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from config.config import DacHyper
from envs.base_env import BaseEnv, StepResult
from utils.errors import EnvironmentFault
from utils.records import METRIC_COLUMNS, ExperimentRecord
from .base_agent import BaseLearner, StepMetrics
from .replay_buffer import ReplayBuffer, Transition

logger = logging.getLogger("dac.training")

StepCallback = Callable[[int, StepResult], None]

EXTRA_METRICS = ["mean_ratio", "clip_min", "clip_max", "loss_alpha"]


def evaluate(env: BaseEnv, agent: BaseLearner, episodes: int, rng: np.random.Generator) -> float:
    """Mean undiscounted return of deterministic-policy episodes."""
    returns = []
    for _ in range(episodes):
        observation = env.reset()
        total, done = 0.0, False
        while not done:
            result = env.step(agent.act(observation, rng, deterministic=True))
            total += result.reward
            observation, done = result.observation, result.done
        returns.append(total)
    return float(np.mean(returns))


def _metric_records(
    run_id: str, seed: int, step: int, metrics: StepMetrics, episode_return: float
) -> Iterator[ExperimentRecord]:
    values = metrics.model_dump()
    values["episode_return"] = episode_return
    for name in [*METRIC_COLUMNS, *EXTRA_METRICS]:
        value = values.get(name)
        if value is not None:
            yield ExperimentRecord(run_id=run_id, seed=seed, step=step, metric=name, value=float(value))


def run_training(
    env: BaseEnv,
    agent: BaseLearner,
    buffer: ReplayBuffer,
    hyper: DacHyper,
    total_steps: int,
    rng: np.random.Generator,
    run_id: str = "run",
    seed: int = 0,
    eval_env: Optional[BaseEnv] = None,
    callbacks: Sequence[StepCallback] = (),
) -> Iterator[ExperimentRecord]:
    """
    Run the learner for total_steps environment steps.

    Args:
        env: Training environment
        agent: Learner (updated in place)
        buffer: Replay buffer receiving every transition
        hyper: Learner hyperparameters (start_steps, log_interval, eval cadence)
        total_steps: Number of environment steps
        rng: Source of exploration noise, minibatches and uniform warm-up actions
        run_id: Run identifier stamped on every record
        seed: Seed stamped on every record (also used for the first reset)
        eval_env: Environment for deterministic evaluation episodes, if any
        callbacks: Called as fn(step, result) after every environment step

    Yields:
        ExperimentRecord per metric at every log_interval and at the last step
    """
    if total_steps <= 0:
        return
    logger.info(f"Starting run {run_id} (seed {seed}) for {total_steps} steps")
    observation = env.reset(seed)
    episode_total, last_return = 0.0, math.nan
    metrics: Optional[StepMetrics] = None

    for step in range(1, total_steps + 1):
        if step <= hyper.start_steps:
            action = rng.uniform(-hyper.action_scale, hyper.action_scale, size=env.action_dim)
        else:
            action = agent.act(observation, rng)
        try:
            result = env.step(action)
        except Exception as e:
            raise EnvironmentFault(f"Environment {env.name} step {step} failed: {e}") from e

        buffer.push(Transition(observation, action, result.reward, result.observation, result.terminated))
        episode_total += result.reward
        for callback in callbacks:
            callback(step, result)
        if result.done:
            last_return, episode_total = episode_total, 0.0
            observation = env.reset()
        else:
            observation = result.observation

        metrics = agent.train_step(buffer, rng)

        if step % hyper.log_interval == 0 or step == total_steps:
            logger.debug(f"{run_id} seed {seed} step {step}: {metrics.model_dump(exclude_none=True)}")
            yield from _metric_records(run_id, seed, step, metrics, last_return)
        if eval_env is not None and step % hyper.eval_interval == 0:
            value = evaluate(eval_env, agent, hyper.eval_episodes, rng)
            yield ExperimentRecord(run_id=run_id, seed=seed, step=step, metric="eval_return", value=value)

    logger.info(f"Finished run {run_id} (seed {seed}) after {agent.state.updates} updates")
