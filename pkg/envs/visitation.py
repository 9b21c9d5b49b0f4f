"""
Visitation Grid
Counts of visits per 1×1 cell of the maze and their export as a CSV grid, a
portable graymap and a PNG heatmap.
"""

import logging
import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from utils.csv_io import read_frame, write_frame
from utils.errors import InputValidationError

logger = logging.getLogger("dac.envs.visitation")

VISITATION_SCHEMA = "visitation_grid"


class VisitationGrid:
    """Integer visit counts over floor-quantised cells; counts[y, x]."""

    def __init__(self, side: float = 100.0):
        if side <= 0:
            raise InputValidationError(f"side must be > 0, got {side}")
        self.side = float(side)
        self.cells = int(math.ceil(self.side))
        self.counts = np.zeros((self.cells, self.cells), dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def unique_cells(self) -> int:
        return int(np.count_nonzero(self.counts))

    def cell_of(self, position) -> tuple:
        x, y = (float(v) for v in np.asarray(position, dtype=np.float64).reshape(-1)[:2])
        if not (0.0 <= x <= self.side and 0.0 <= y <= self.side):
            raise InputValidationError(f"position ({x}, {y}) lies outside [0, {self.side}]²")
        # the far boundary belongs to the last cell
        return min(int(math.floor(x)), self.cells - 1), min(int(math.floor(y)), self.cells - 1)

    def record_visit(self, position) -> None:
        cx, cy = self.cell_of(position)
        self.counts[cy, cx] += 1

    def merge(self, other: "VisitationGrid") -> "VisitationGrid":
        if other.counts.shape != self.counts.shape:
            raise InputValidationError("cannot merge grids of different sizes")
        merged = VisitationGrid(self.side)
        merged.counts = self.counts + other.counts
        return merged

    def to_frame(self) -> pd.DataFrame:
        """Rows are y (0 first), columns are x."""
        return pd.DataFrame(self.counts, columns=[str(x) for x in range(self.cells)])

    def write_csv(self, path: Union[str, Path]) -> Path:
        return write_frame(self.to_frame(), path, VISITATION_SCHEMA)

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "VisitationGrid":
        frame = read_frame(path, VISITATION_SCHEMA)
        grid = cls(float(frame.shape[1]))
        grid.counts = frame.to_numpy(dtype=np.int64)
        return grid

    def log_scaled(self) -> np.ndarray:
        """Counts mapped to 0..255 by log(1 + count), the most visited cell at 255."""
        peak = self.counts.max()
        if peak == 0:
            return np.zeros_like(self.counts, dtype=np.uint8)
        scaled = np.log1p(self.counts) / np.log1p(peak)
        return np.rint(255.0 * scaled).astype(np.uint8)

    def write_pgm(self, path: Union[str, Path]) -> Path:
        """Binary graymap (P5); the top image row is the highest y."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        pixels = self.log_scaled()[::-1]
        header = f"P5\n{self.cells} {self.cells}\n255\n".encode("ascii")
        path.write_bytes(header + np.ascontiguousarray(pixels).tobytes())
        return path

    def write_png(self, path: Union[str, Path], title: Optional[str] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        # Figure without pyplot: seeds render from worker threads
        fig = Figure(figsize=(6, 6))
        ax = fig.subplots()
        im = ax.imshow(np.log1p(self.counts), cmap="viridis", origin="lower")
        fig.colorbar(im, ax=ax, label="log(1 + visits)")
        if title:
            ax.set_title(title)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        return path


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    """Pixel array of a P5 graymap written by write_pgm."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise InputValidationError(f"{path} is not a binary graymap")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)


def record_visit(grid: VisitationGrid, position) -> None:
    """Increment the cell (floor(x), floor(y)) of position."""
    grid.record_visit(position)
