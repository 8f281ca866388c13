"""Safety metrics per trial and their aggregation over a batch.

Conventions declared once:

* Unsafe time counts the dt-long interval that starts at each sample with
  force magnitude strictly above the unsafe bound; the final sample has no
  following interval, so the unsafe time never exceeds the total time.
* The mean force weights all samples equally (fixed dt).
* The "most probable" force is the center of the most populated 5 mN
  histogram bin (ties go to the lower bin), clamped into the observed force
  range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .control import ControllerParams
from .sim import EVENT_SWITCH_ON, TrialLog

HIST_BIN_WIDTH = 5.0  # mN

METRIC_FIELDS = (
    "total_time",
    "time_over_unsafe",
    "mean_force",
    "max_probable_force",
    "n_switches",
)


@dataclass(frozen=True)
class TrialMetrics:
    total_time: float  # s
    time_over_unsafe: float  # s spent above the unsafe bound
    mean_force: float  # mN
    max_probable_force: float  # mN, histogram mode
    n_switches: int  # adaptive engagements (0 in passive trials)


def _histogram_mode(fs: np.ndarray, bin_width: float = HIST_BIN_WIDTH) -> float:
    indices = np.floor(fs / bin_width).astype(np.int64)
    counts = np.bincount(indices)
    best = int(np.argmax(counts))  # argmax takes the first maximum: lower bin on ties
    center = (best + 0.5) * bin_width
    return float(min(max(center, fs.min()), fs.max()))


def compute_metrics(log: TrialLog, params: ControllerParams) -> TrialMetrics:
    """Safety statistics of one trial log.

    Requires a non-empty, time-sorted log; sortedness is asserted rather
    than repaired.
    """
    if log.n_samples == 0:
        raise ValueError("cannot compute metrics of an empty log")
    t = np.asarray(log.t, dtype=float)
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise ValueError("log samples must be strictly increasing in time")
    fs = np.asarray(log.fs, dtype=float)
    over = float(log.dt * np.count_nonzero(fs[:-1] > params.L3))
    return TrialMetrics(
        total_time=float(t[-1]),
        time_over_unsafe=over,
        mean_force=float(fs.mean()),
        max_probable_force=_histogram_mode(fs),
        n_switches=sum(1 for e in log.events if e.kind == EVENT_SWITCH_ON),
    )


@dataclass(frozen=True)
class AggregateStats:
    """Per-field mean and sample standard deviation over a batch of trials.

    ``std`` is None for a single trial (the n-1 denominator needs at least
    two trials).
    """

    n_trials: int
    mean: dict[str, float]
    std: dict[str, float] | None

    def as_dict(self) -> dict:
        return {"n_trials": self.n_trials, "mean": self.mean, "std": self.std}


def aggregate(metrics: Sequence[TrialMetrics]) -> AggregateStats:
    """Mean and sample standard deviation (ddof=1) of each metric field."""
    if len(metrics) == 0:
        raise ValueError("cannot aggregate an empty batch")
    columns = {
        name: np.asarray([getattr(m, name) for m in metrics], dtype=float)
        for name in METRIC_FIELDS
    }
    mean = {name: float(col.mean()) for name, col in columns.items()}
    if len(metrics) < 2:
        return AggregateStats(n_trials=len(metrics), mean=mean, std=None)
    std = {name: float(col.std(ddof=1)) for name, col in columns.items()}
    return AggregateStats(n_trials=len(metrics), mean=mean, std=std)
