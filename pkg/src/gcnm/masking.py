"""Missing-value scenario injection and mask statistics.

Scenarios zero out blocks of (nodes x features x time) until a target missing
rate is reached: short_range blocks span 1 step, long_range spans tau steps,
mix_range draws the extent uniformly from [1, tau].
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .series import TrafficSeries

SCENARIO_KINDS = ("short_range", "long_range", "mix_range")


@dataclass(frozen=True)
class MissingScenario:
    kind: str
    rate: float
    seed: int

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}; expected one of {SCENARIO_KINDS}")
        if not 0.0 < self.rate < 1.0:
            raise ConfigError(f"missing rate must lie strictly in (0, 1), got {self.rate}")


@dataclass(frozen=True)
class InjectedBlock:
    nodes: np.ndarray
    start: int
    length: int


def inject(series: TrafficSeries, scenario: MissingScenario, tau: int,
           return_blocks: bool = False):
    """Zero out random blocks until the missing fraction first reaches the rate.

    Each block covers a uniformly sized node subset (drawn without
    replacement), all features, and a temporal extent set by the scenario
    kind, starting uniformly at random (truncated at the series end).
    Pre-existing missing entries count toward the rate and are never revived.
    Deterministic given the scenario seed.
    """
    n_nodes, _, n_steps = series.values.shape
    total = series.mask.size
    missing = total - int(series.mask.sum())
    target = scenario.rate * total
    if target <= missing:
        raise DataError(
            f"target missing rate {scenario.rate:.4f} does not exceed the existing "
            f"missing fraction {missing / total:.4f}; choose a higher rate or cleaner data")

    out = series.copy()
    rng = np.random.default_rng(scenario.seed)
    blocks: list[InjectedBlock] = []
    while missing < target:
        n = int(rng.integers(1, n_nodes + 1))
        nodes = rng.choice(n_nodes, size=n, replace=False)
        if scenario.kind == "short_range":
            t_len = 1
        elif scenario.kind == "long_range":
            t_len = tau
        else:
            t_len = int(rng.integers(1, tau + 1))
        start = int(rng.integers(0, n_steps))
        end = min(start + t_len, n_steps)
        newly = int(out.mask[nodes, :, start:end].sum())
        if newly:
            out.mask[nodes, :, start:end] = 0.0
            out.values[nodes, :, start:end] = 0.0
            missing += newly
        blocks.append(InjectedBlock(nodes=np.sort(nodes), start=start, length=t_len))
    if return_blocks:
        return out, blocks
    return out


def run_length_histogram(mask: np.ndarray) -> dict[int, int]:
    """Histogram of maximal consecutive missing runs per node/feature row."""
    counts: Counter[int] = Counter()
    flat = mask.reshape(-1, mask.shape[-1])
    for row in flat:
        missing = np.concatenate([[0], (row == 0).astype(np.int8), [0]])
        edges = np.flatnonzero(np.diff(missing))
        starts, ends = edges[::2], edges[1::2]
        for s, e in zip(starts, ends):
            counts[int(e - s)] += 1
    return dict(counts)


def mask_stats(series: TrafficSeries) -> dict:
    return {
        "missing_fraction": series.missing_fraction(),
        "block_length_histogram": run_length_histogram(series.mask),
    }


def inject_per_split(series: TrafficSeries, scenario: MissingScenario, tau: int,
                     train_fraction: float = 0.7,
                     val_fraction: float = 0.1) -> TrafficSeries:
    """Inject each chronological split independently so no block straddles a
    split boundary; per-split seeds are spawned from the scenario seed."""
    t = series.n_steps
    bounds = [0, int(t * train_fraction), int(t * (train_fraction + val_fraction)), t]
    seeds = np.random.SeedSequence(scenario.seed).generate_state(3)
    out = series.copy()
    from dataclasses import replace as dc_replace
    for i in range(3):
        lo, hi = bounds[i], bounds[i + 1]
        if hi <= lo:
            continue
        part = TrafficSeries(values=series.values[:, :, lo:hi].copy(),
                             mask=series.mask[:, :, lo:hi].copy(),
                             node_ids=series.node_ids,
                             timestamps=series.timestamps[lo:hi],
                             step_minutes=series.step_minutes,
                             scale_factor=series.scale_factor)
        injected = inject(part, dc_replace(scenario, seed=int(seeds[i])), tau)
        out.values[:, :, lo:hi] = injected.values
        out.mask[:, :, lo:hi] = injected.mask
    return out
