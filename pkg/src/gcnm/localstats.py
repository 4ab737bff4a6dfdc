"""Local spatio-temporal statistics feeding the enriched embeddings.

Every statistic uses only observed entries (mask-weighted sums), so values
stored at masked positions can never leak into downstream features. Scalar
helpers mirror the vectorized extraction and serve as its oracle in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .series import PredefinedGraph


def temporal_mean(values: np.ndarray, mask: np.ndarray, t: int, lookback: int) -> tuple[float, bool]:
    """Mean of observed entries over [t - lookback, t); (0, True) if none."""
    lo = max(t - lookback, 0)
    m = mask[lo:t]
    total = float(m.sum())
    if total == 0:
        return 0.0, True
    return float((values[lo:t] * m).sum() / total), False


def last_temporal(values: np.ndarray, mask: np.ndarray, t: int, lookback: int) -> tuple[float, float]:
    """Most recent observed value before t within the look-back horizon and its
    step distance; (0, lookback) if none."""
    lo = max(t - lookback, 0)
    for s in range(t - 1, lo - 1, -1):
        if mask[s] > 0:
            return float(values[s]), float(t - s)
    return 0.0, float(lookback)


def spatial_mean(snapshot_values: np.ndarray, snapshot_mask: np.ndarray, node: int,
                 graph: PredefinedGraph, s_neighbors: int) -> tuple[float, bool]:
    """Mean of observed readings among the S road-nearest neighbors; (0, True)
    when none of them (or no neighbors at all) are observed."""
    idx, _ = graph.neighbor_order(node)
    idx = idx[:s_neighbors]
    if len(idx) == 0:
        return 0.0, True
    m = snapshot_mask[idx]
    total = float(m.sum())
    if total == 0:
        return 0.0, True
    return float((snapshot_values[idx] * m).sum() / total), False


def nearest_spatial(snapshot_values: np.ndarray, snapshot_mask: np.ndarray, node: int,
                    graph: PredefinedGraph) -> tuple[float, float]:
    """Reading of the road-closest observed neighbor and its distance;
    (0, max graph distance) when no neighbor is observed."""
    idx, dist = graph.neighbor_order(node)
    for j, d in zip(idx, dist):
        if snapshot_mask[j] > 0:
            return float(snapshot_values[j]), float(d)
    return 0.0, graph.max_distance()


def decay(delta: float, w: float, b: float) -> float:
    """Exponentiated negative rectifier exp(-max(0, w*delta + b)), in (0, 1]."""
    return math.exp(-max(0.0, w * delta + b))


def local_feature(x: float, m: float, last_value: float, nearest_value: float,
                  t_mean: float, s_mean: float, gamma_t: float, gamma_s: float) -> float:
    """Observed passthrough, else the decay-weighted blend of the four estimates."""
    return m * x + (1.0 - m) * (gamma_t * last_value + gamma_s * nearest_value
                                + (1.0 - gamma_t) * t_mean + (1.0 - gamma_s) * s_mean)


@dataclass
class LocalStats:
    """Per-entry statistics for a whole series, each array shaped [N, F, T]."""

    temporal_mean: np.ndarray
    temporal_all_missing: np.ndarray
    last_value: np.ndarray
    last_delta: np.ndarray
    spatial_mean: np.ndarray
    spatial_all_missing: np.ndarray
    nearest_value: np.ndarray
    nearest_delta: np.ndarray

    def window(self, start: int, stop: int) -> dict[str, np.ndarray]:
        return {
            "temporal_mean": self.temporal_mean[:, :, start:stop],
            "last_value": self.last_value[:, :, start:stop],
            "last_delta": self.last_delta[:, :, start:stop],
            "spatial_mean": self.spatial_mean[:, :, start:stop],
            "nearest_value": self.nearest_value[:, :, start:stop],
            "nearest_delta": self.nearest_delta[:, :, start:stop],
        }


def _neighbor_arrays(graph: PredefinedGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = graph.n_nodes
    orders = [graph.neighbor_order(i) for i in range(n)]
    max_deg = max((len(o[0]) for o in orders), default=0)
    max_deg = max(max_deg, 1)
    nb_idx = np.zeros((n, max_deg), dtype=np.int64)
    nb_valid = np.zeros((n, max_deg), dtype=bool)
    nb_dist = np.full((n, max_deg), np.inf)
    for i, (idx, dist) in enumerate(orders):
        k = len(idx)
        nb_idx[i, :k] = idx
        nb_valid[i, :k] = True
        nb_dist[i, :k] = dist
    return nb_idx, nb_valid, nb_dist


def compute_local_stats(values: np.ndarray, mask: np.ndarray, graph: PredefinedGraph,
                        lookback: int, s_neighbors: int,
                        time_chunk: int = 4096) -> LocalStats:
    """Vectorized extraction of all six statistics over a full series."""
    n, f, t = values.shape
    mx = values * mask

    # Trailing-window sums via cumulative sums over time.
    cs_mx = np.concatenate([np.zeros((n, f, 1)), np.cumsum(mx, axis=-1)], axis=-1)
    cs_m = np.concatenate([np.zeros((n, f, 1)), np.cumsum(mask, axis=-1)], axis=-1)
    hi = np.arange(t)
    lo = np.maximum(hi - lookback, 0)
    win_mx = cs_mx[:, :, hi] - cs_mx[:, :, lo]
    win_m = cs_m[:, :, hi] - cs_m[:, :, lo]
    t_all_missing = win_m == 0
    t_mean = np.divide(win_mx, win_m, out=np.zeros_like(win_mx), where=~t_all_missing)

    # Last observation strictly before t, saturated at the look-back horizon.
    obs_idx = np.where(mask > 0, np.arange(t), -1)
    last_obs = np.maximum.accumulate(obs_idx, axis=-1)
    prev = np.concatenate([np.full((n, f, 1), -1, dtype=np.int64), last_obs[:, :, :-1]], axis=-1)
    delta = np.arange(t) - prev
    in_horizon = (prev >= 0) & (delta <= lookback)
    gathered = np.take_along_axis(values, np.maximum(prev, 0), axis=-1)
    last_value = np.where(in_horizon, gathered, 0.0)
    last_delta = np.where(in_horizon, delta, lookback).astype(np.float64)

    nb_idx, nb_valid, nb_dist = _neighbor_arrays(graph)
    delta_max = graph.max_distance()
    s_mean = np.zeros_like(values)
    s_all_missing = np.zeros(values.shape, dtype=bool)
    near_value = np.zeros_like(values)
    near_delta = np.zeros_like(values)
    for start in range(0, t, time_chunk):
        stop = min(start + time_chunk, t)
        vm = values[nb_idx, :, start:stop]                    # [N, D, F, Tc]
        mm = mask[nb_idx, :, start:stop] * nb_valid[:, :, None, None]
        s_cnt = mm[:, :s_neighbors].sum(axis=1)
        s_sum = (vm * mm)[:, :s_neighbors].sum(axis=1)
        empty = s_cnt == 0
        s_mean[:, :, start:stop] = np.divide(s_sum, s_cnt, out=np.zeros_like(s_sum), where=~empty)
        s_all_missing[:, :, start:stop] = empty

        observed = mm > 0
        has_obs = observed.any(axis=1)
        first = np.argmax(observed, axis=1)                   # [N, F, Tc]
        val = np.take_along_axis(vm, first[:, None], axis=1)[:, 0]
        dist = nb_dist[np.arange(n)[:, None, None], first]
        near_value[:, :, start:stop] = np.where(has_obs, val, 0.0)
        near_delta[:, :, start:stop] = np.where(has_obs, dist, delta_max)

    return LocalStats(temporal_mean=t_mean, temporal_all_missing=t_all_missing,
                      last_value=last_value, last_delta=last_delta,
                      spatial_mean=s_mean, spatial_all_missing=s_all_missing,
                      nearest_value=near_value, nearest_delta=near_delta)
