"""
Continuous Four-Room Maze
Square arena split by one vertical and one horizontal wall, each with a door
in both of its segments. The agent moves by (dx, dy) ∈ [−1, 1]² and stops
just short of any wall it would cross. There is no reward.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config.config import MazeConfig
from utils.errors import InputValidationError
from .base_env import BaseEnv, StepResult

logger = logging.getLogger("dac.envs.maze")


@dataclass(frozen=True)
class Box:
    """Axis-aligned solid rectangle [x0, x1] × [y0, y1]."""
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, point: np.ndarray) -> bool:
        return self.x0 < point[0] < self.x1 and self.y0 < point[1] < self.y1


def wall_boxes(cfg: MazeConfig) -> List[Box]:
    """
    Solid wall pieces of the declared geometry.

    The internal walls occupy [h, h + thickness] across each axis, with
    h = side/2; each wall segment between the outer boundary and the crossing
    has one door of door_width centred in it.
    """
    h, t, side, w = cfg.side / 2.0, cfg.wall_thickness, cfg.side, cfg.door_width
    boxes: List[Box] = []
    # segment extents along the wall: [0, h] and [h + t, side]
    for lo, hi in ((0.0, h), (h + t, side)):
        centre = (lo + hi) / 2.0
        door_lo, door_hi = centre - w / 2.0, centre + w / 2.0
        for a, b in ((lo, door_lo), (door_hi, hi)):
            boxes.append(Box(h, a, h + t, b))  # vertical wall
            boxes.append(Box(a, h, b, h + t))  # horizontal wall
    boxes.append(Box(h, h, h + t, h + t))  # crossing
    return boxes


def segment_hit(start: np.ndarray, delta: np.ndarray, box: Box) -> Optional[float]:
    """
    Fraction t ∈ [0, 1] at which start + t·delta first enters the open box, or None.

    Slab intersection of the segment with the box interior.
    """
    t_enter, t_exit = 0.0, 1.0
    for axis, (lo, hi) in enumerate(((box.x0, box.x1), (box.y0, box.y1))):
        p, d = start[axis], delta[axis]
        if d == 0.0:
            if not lo < p < hi:
                return None
            continue
        t0, t1 = (lo - p) / d, (hi - p) / d
        if t0 > t1:
            t0, t1 = t1, t0
        t_enter, t_exit = max(t_enter, t0), min(t_exit, t1)
        if t_enter >= t_exit:
            return None
    return t_enter


class FourRoomMaze(BaseEnv):
    """Continuous 4-room maze; state is the (x, y) position."""

    name = "maze"

    def __init__(self, cfg: Optional[MazeConfig] = None):
        self.cfg = cfg or MazeConfig()
        super().__init__(state_dim=2, action_dim=2, horizon=self.cfg.horizon)
        self.walls = wall_boxes(self.cfg)
        self.start = np.asarray(self.cfg.start, dtype=np.float64)
        self.position = self.start.copy()
        if self.inside_wall(self.start):
            raise InputValidationError(f"start {self.cfg.start} lies inside a wall")

    def inside_wall(self, point: np.ndarray) -> bool:
        return any(box.contains(point) for box in self.walls)

    def in_bounds(self, point: np.ndarray) -> bool:
        return bool(np.all(point >= 0.0) and np.all(point <= self.cfg.side))

    def observe(self) -> np.ndarray:
        if self.cfg.normalize_observations:
            return 2.0 * self.position / self.cfg.side - 1.0
        return self.position.copy()

    def raw_position(self, observation: np.ndarray) -> np.ndarray:
        """Invert observe() for an observation of this maze."""
        observation = np.asarray(observation, dtype=np.float64)
        if self.cfg.normalize_observations:
            return (observation + 1.0) * self.cfg.side / 2.0
        return observation.copy()

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        self.position = self.start.copy()
        self.elapsed = 0
        return self.observe()

    def move(self, position: np.ndarray, action: np.ndarray) -> np.ndarray:
        """
        Straight-line move from position by the clamped action.

        The move stops skin short of the first wall or boundary contact.
        """
        delta = np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[:2], -1.0, 1.0)
        length = float(np.linalg.norm(delta))
        if length == 0.0:
            return position.copy()
        t_hit = 1.0
        for box in self.walls:
            t = segment_hit(position, delta, box)
            if t is not None:
                t_hit = min(t_hit, t)
        side = self.cfg.side
        for axis in range(2):
            d = delta[axis]
            if d > 0.0 and position[axis] + d > side:
                t_hit = min(t_hit, (side - position[axis]) / d)
            elif d < 0.0 and position[axis] + d < 0.0:
                t_hit = min(t_hit, -position[axis] / d)
        if t_hit < 1.0:
            t_hit = max(t_hit - self.cfg.skin / length, 0.0)
        return position + t_hit * delta

    def step(self, action: np.ndarray) -> StepResult:
        previous = self.position.copy()
        self.position = self.move(self.position, action)
        truncated = self._tick()
        return StepResult(
            observation=self.observe(),
            reward=0.0,
            terminated=False,
            truncated=truncated,
            info={"position": self.position.copy(), "previous": previous},
        )

    def room_of(self, point: np.ndarray) -> Tuple[int, int]:
        """(column, row) of the room containing point; 0 is left/lower."""
        h = self.cfg.side / 2.0
        return int(point[0] >= h), int(point[1] >= h)


def maze_step(maze: FourRoomMaze, position, action) -> np.ndarray:
    """Pure transition: next position from position under action."""
    return maze.move(np.asarray(position, dtype=np.float64), action)


def in_upper_right_room(maze: FourRoomMaze):
    """Predicate (s, a, s') → True when s' lies in the upper-right room."""
    h = maze.cfg.side / 2.0 + maze.cfg.wall_thickness

    def predicate(state, action, next_state) -> bool:
        x, y = maze.raw_position(next_state)
        return bool(x >= h and y >= h)

    return predicate
