"""Window and multi-scale history index arithmetic.

A window anchored at t covers inputs [t - tau, t) and targets [t, t + horizon).
Its memory segments address the recent past plus same-clock-time neighborhoods
of previous days and weeks; anchors whose history would fall outside the
dataset are excluded rather than padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class SegmentSpec:
    """Parameters controlling window extent and multi-scale history indices."""

    tau: int = 12
    horizon: int = 12
    n_h: int = 2                  # recent periods of tau steps each
    n_d: int = 2                  # past days sampled
    n_w: int = 2                  # past weeks sampled
    samples_per_day: int = 288    # T_d; 288 for 5-minute data
    samples_per_week: int = 2016  # T_w
    lookback: int = 12            # L, temporal look-back for local statistics

    def __post_init__(self):
        if self.tau < 1 or self.horizon < 1:
            raise DataError("tau and horizon must be >= 1")
        if min(self.n_h, self.n_d, self.n_w) < 0 or self.n_h + self.n_d + self.n_w < 1:
            raise DataError("need at least one memory segment")
        if self.n_d > 0 and self.samples_per_day < self.tau:
            raise DataError("samples_per_day must be >= tau")
        if self.n_w > 0 and self.samples_per_week < self.samples_per_day:
            raise DataError("samples_per_week must be >= samples_per_day")
        if self.lookback < 1:
            raise DataError("lookback must be >= 1")

    @property
    def n_slots(self) -> int:
        return (self.n_h + self.n_d + self.n_w) * self.tau


@dataclass(frozen=True)
class SegmentIndex:
    """Absolute timestamp indices of one window's memory segments."""

    hourly: np.ndarray
    daily: np.ndarray
    weekly: np.ndarray

    @property
    def all(self) -> np.ndarray:
        return np.concatenate([self.hourly, self.daily, self.weekly])


def segment_index(anchor: int, spec: SegmentSpec) -> SegmentIndex:
    """Memory indices for a window anchored at ``anchor``.

    Hourly: the n_h * tau steps immediately before the anchor. Daily/weekly:
    tau consecutive steps starting at anchor - j*period - tau//2 for
    j = n_d..1 (oldest first), analogously for weeks.
    """
    half = spec.tau // 2
    hourly = np.arange(anchor - spec.n_h * spec.tau, anchor, dtype=np.int64)

    def periodic(n: int, period: int) -> np.ndarray:
        chunks = [np.arange(anchor - j * period - half, anchor - j * period - half + spec.tau,
                            dtype=np.int64)
                  for j in range(n, 0, -1)]
        return np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)

    return SegmentIndex(hourly=hourly,
                        daily=periodic(spec.n_d, spec.samples_per_day),
                        weekly=periodic(spec.n_w, spec.samples_per_week))


def first_admissible_anchor(spec: SegmentSpec) -> int:
    """Earliest anchor whose input, look-back, and history all fit the past."""
    half = spec.tau // 2
    bounds = [spec.tau + spec.lookback, spec.n_h * spec.tau]
    if spec.n_d > 0:
        bounds.append(spec.n_d * spec.samples_per_day + half)
    if spec.n_w > 0:
        bounds.append(spec.n_w * spec.samples_per_week + half)
    return max(bounds)


def admissible_anchors(n_steps: int, spec: SegmentSpec) -> np.ndarray:
    """All anchors t with full history and a complete target inside the data."""
    start = first_admissible_anchor(spec)
    stop = n_steps - spec.horizon + 1
    if stop <= start:
        raise DataError(
            f"series of {n_steps} steps is too short for any window "
            f"(first admissible anchor {start}, need target room {spec.horizon})")
    return np.arange(start, stop, dtype=np.int64)


def split_anchors(anchors: np.ndarray,
                  train_fraction: float = 0.7,
                  val_fraction: float = 0.1) -> dict[str, np.ndarray]:
    """Chronologically contiguous train/val/test split of the anchor list."""
    if train_fraction <= 0 or val_fraction < 0 or train_fraction + val_fraction >= 1:
        raise DataError("split fractions must satisfy 0 < train, 0 <= val, train + val < 1")
    n = len(anchors)
    n_train = int(n * train_fraction)
    n_val = int(n * val_fraction)
    splits = {
        "train": anchors[:n_train],
        "val": anchors[n_train:n_train + n_val],
        "test": anchors[n_train + n_val:],
    }
    for name, part in splits.items():
        if len(part) == 0:
            raise DataError(f"{name} split is empty ({n} anchors total)")
    return splits
