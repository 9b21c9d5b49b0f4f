"""
Experiment Records
Long-format metric records emitted by training runs and their pivot into the
wide metrics table.
"""

from typing import Iterable, List

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .errors import InputValidationError

METRICS_SCHEMA = "metrics"
RECORDS_SCHEMA = "records"
METRIC_COLUMNS: List[str] = [
    "episode_return",
    "loss_q1",
    "loss_q2",
    "loss_v",
    "obj_pi",
    "obj_ratio",
    "mean_alpha",
    "mean_entropy",
    "mean_js_div",
]


class ExperimentRecord(BaseModel):
    """One metric value observed at one step of one seeded run."""
    run_id: str
    seed: int
    step: int
    metric: str
    value: float


def records_frame(records: Iterable[ExperimentRecord]) -> pd.DataFrame:
    """Long-format frame; rejects duplicate (run_id, seed, step, metric) keys."""
    frame = pd.DataFrame(
        [r.model_dump() for r in records], columns=["run_id", "seed", "step", "metric", "value"]
    )
    keys = ["run_id", "seed", "step", "metric"]
    if frame.duplicated(subset=keys).any():
        dup = frame[frame.duplicated(subset=keys, keep=False)].iloc[0]
        raise InputValidationError(
            f"duplicate record for run={dup.run_id} seed={dup.seed} step={dup.step} metric={dup.metric}"
        )
    return frame


def metrics_frame(records: Iterable[ExperimentRecord]) -> pd.DataFrame:
    """
    Pivot records into the wide metrics table (one row per step).

    Metrics outside METRIC_COLUMNS are ignored; missing ones are NaN.
    """
    frame = records_frame(records)
    frame = frame[frame["metric"].isin(METRIC_COLUMNS)]
    if frame.empty:
        return pd.DataFrame(columns=["step", *METRIC_COLUMNS])
    if frame[["run_id", "seed"]].drop_duplicates().shape[0] > 1:
        raise InputValidationError("metrics_frame expects the records of a single run")
    wide = frame.pivot(index="step", columns="metric", values="value").reindex(columns=METRIC_COLUMNS)
    wide = wide.sort_index().reset_index()
    wide.columns.name = None
    return wide.astype({"step": np.int64})
