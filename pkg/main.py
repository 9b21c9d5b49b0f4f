#!/usr/bin/env python3
"""
Diversity Actor-Critic Experiments
Command-line entry point: tabular diverse policy iteration, the one-step toy
problem, maze exploration sweeps, learner training and the verification
suites.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import torch

from config.config import RunConfig, build_run_config, load_config, read_manifest
from utils.errors import ConfigurationError, DacError, InputValidationError, MonotonicityViolation, UsageError
from utils.logging_setup import configure_logging
from verification.suites import Mutations
from workflow.base_node import BaseExperimentNode, NodeConfig
from workflow.maze_node import MazeExploreNode
from workflow.tabular_node import TabularDpiNode, ToyNode
from workflow.train_node import TrainNode
from workflow.verify_node import VerifyNode

logger = logging.getLogger("dac")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# argparse destinations that are not configuration keys
_CLI_ONLY = {"command", "config", "log_level", "quick", "mutate", "toy"}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key=value experiment manifest; flags win over its values")
    parser.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")
    parser.add_argument("--output-dir", dest="output_dir", help="directory receiving the artifacts")
    parser.add_argument("--log-level", dest="log_level", help="logging level (default from LOG_LEVEL)")


def _add_learner(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--total-steps", dest="total_steps", type=int)
    parser.add_argument("--alpha", type=float, help="mixture weight for fixed alpha mode")
    parser.add_argument("--alpha-mode", dest="alpha_mode", choices=["fixed", "adaptive"])
    parser.add_argument("--beta", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--hidden-sizes", dest="hidden_sizes", help="comma-separated hidden layer widths")
    parser.add_argument("--n-prime", dest="n_prime", type=int, help="q' window: newest N' transitions")
    parser.add_argument("--log-interval", dest="log_interval", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dac", description="Diversity actor-critic experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    dpi = sub.add_parser("tabular-dpi", help="exact diverse policy iteration on an MDP table file")
    _add_common(dpi)
    dpi.add_argument("--mdp", dest="mdp_path", help="MDP table file (bundled six-state MDP by default)")
    dpi.add_argument("--alpha", dest="dpi_alpha", type=float)
    dpi.add_argument("--beta", dest="dpi_beta", type=float)
    dpi.add_argument("--improvement-mode", dest="improvement_mode", choices=["closed_form", "exact_simplex"])
    dpi.add_argument("--max-iters", dest="max_iters", type=int)
    dpi.add_argument("--tol", type=float)
    dpi.add_argument("--toy", type=int, metavar="N_A", help="also solve the one-step toy problem with N_A actions")

    toy = sub.add_parser("toy", help="one-step toy problem")
    _add_common(toy)
    toy.add_argument("--n-actions", dest="n_actions", type=int)

    maze = sub.add_parser("maze-explore", help="reward-free maze exploration sweep")
    _add_common(maze)
    _add_learner(maze)
    maze.add_argument("--variants", help="comma-separated fixed alpha values (default 0.5,1,0)")
    maze.add_argument("--checkpoint-steps", dest="checkpoint_steps", help="comma-separated histogram steps")
    maze.add_argument("--horizon", dest="maze_horizon", type=int, help="episode length before reset")

    train = sub.add_parser("train", help="train a learner")
    _add_common(train)
    _add_learner(train)
    train.add_argument("--env", dest="env_name", help="chain, delayed_chain, sparse_chain, maze, sparse_maze or toy")
    train.add_argument("--agent", choices=["dac", "sac"])
    train.add_argument("--delay", type=int, help="delay D of the delayed-reward wrapper")
    train.add_argument("--n-actions", dest="n_actions", type=int)

    verify = sub.add_parser("verify", help="run every property suite")
    _add_common(verify)
    verify.add_argument("--quick", action="store_true", help="reduced trial counts")
    verify.add_argument("--mutate", action="append", default=[], choices=["flip-ratio-sign", "drop-clip"],
                        help="inject a fault to confirm the suites catch it")
    return parser


def _flag_values(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: value for key, value in vars(args).items() if key not in _CLI_ONLY and value is not None}


def _node(args: argparse.Namespace, run: RunConfig, max_concurrent: int) -> BaseExperimentNode:
    def cfg(name: str, description: str) -> NodeConfig:
        return NodeConfig(name=name, description=description, max_concurrent_tasks=max_concurrent)

    if args.command == "tabular-dpi":
        return TabularDpiNode(cfg("tabular-dpi", "exact diverse policy iteration"), run)
    if args.command == "toy":
        return ToyNode(cfg("toy", "one-step toy problem"), run)
    if args.command == "maze-explore":
        return MazeExploreNode(cfg("maze-explore", "maze exploration sweep"), run)
    if args.command == "train":
        return TrainNode(cfg("train", f"{run.agent} on {run.env_name}"), run)
    mutations = Mutations(flip_ratio_sign="flip-ratio-sign" in args.mutate, drop_clip="drop-clip" in args.mutate)
    return VerifyNode(cfg("verify", "property suites"), run, mutations=mutations, quick=args.quick)


async def run_command(args: argparse.Namespace, run: RunConfig, max_concurrent: int) -> int:
    results = await _node(args, run, max_concurrent).execute()
    if args.command == "tabular-dpi" and args.toy:
        toy_run = run.model_copy(update={"n_actions": args.toy})
        await ToyNode(NodeConfig(name="toy", description="one-step toy problem"), toy_run).execute()
    if args.command == "verify" and not results["passed"]:
        return EXIT_FAILURE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the subcommand and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        system = load_config()
        configure_logging(args.log_level or system.log_level, system.debug_mode)
        file_values: Dict[str, Any] = {"output_dir": system.output_dir}
        if args.config is not None:
            file_values.update(read_manifest(args.config))
        run = build_run_config(args.command, file_values, _flag_values(args))
    except (ConfigurationError, InputValidationError) as e:
        configure_logging()
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    torch.set_num_threads(1)
    try:
        return asyncio.run(run_command(args, run, system.max_concurrent_tasks))
    except (ConfigurationError, InputValidationError, UsageError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except MonotonicityViolation as e:
        logger.error(f"Monotonicity violated: {e}")
        return EXIT_FAILURE
    except DacError as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        logger.info("Run terminated by user")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
