"""Synthetic daily-periodic traffic generators for demos and desk-scale runs."""

from __future__ import annotations

import numpy as np

from .series import PredefinedGraph, TrafficSeries, gaussian_kernel_adjacency


def ring_graph(n_nodes: int, spacing: float = 1.0) -> PredefinedGraph:
    """Ring of sensors with unit spacing, edges in both directions."""
    node_ids = [f"s{i:03d}" for i in range(n_nodes)]
    edges = []
    for i in range(n_nodes):
        j = (i + 1) % n_nodes
        edges.append((node_ids[i], node_ids[j], spacing))
        edges.append((node_ids[j], node_ids[i], spacing))
    adjacency = gaussian_kernel_adjacency(edges, node_ids)
    return PredefinedGraph(adjacency=adjacency, edges=edges, node_ids=node_ids)


def daily_traffic(n_nodes: int, n_steps: int, samples_per_day: int,
                  seed: int = 0, noise: float = 1.0, base: float = 50.0,
                  amplitude: float = 15.0, step_minutes: int = 5,
                  profile: str = "sine") -> tuple[TrafficSeries, PredefinedGraph]:
    """Speed-like series with a daily cycle; neighboring ring nodes share phase.

    ``sine``: base + amplitude * sin(2*pi*(t/T_d + n/N)) plus a slow weekly
    drift. ``rush``: free-flow speed with two sharp congestion dips per day
    whose depth and timing vary stochastically from day to day (shared across
    the network with per-node jitter), so forecasting them requires reading
    the day's actual measurements, not just the clock; linear interpolation
    over multi-step gaps cannot reproduce the bells either. Gaussian noise on
    top, clipped at zero.
    """
    rng = np.random.default_rng(seed)
    graph = ring_graph(n_nodes)
    t = np.arange(n_steps)
    values = np.empty((n_nodes, 1, n_steps))
    week = 7 * samples_per_day
    n_days = n_steps // samples_per_day + 2
    if profile == "rush":
        # network-wide daily congestion severity and rush-hour shift
        day_depth = rng.uniform(0.5, 1.5, size=n_days)
        day_shift = rng.normal(0.0, samples_per_day / 32.0, size=n_days)
        node_depth = rng.normal(0.0, 0.15, size=(n_nodes, n_days))
    for n in range(n_nodes):
        phase = 2 * np.pi * n / n_nodes
        if profile == "rush":
            offset = n * samples_per_day / (2.0 * n_nodes)
            shifted = t + offset
            day = (shifted // samples_per_day).astype(int)
            clock = shifted % samples_per_day
            depth = np.clip(day_depth[day] + node_depth[n, day], 0.3, 1.8)
            center_shift = day_shift[day]
            width = samples_per_day / 16.0
            morning = samples_per_day * 0.33 + center_shift
            evening = samples_per_day * 0.71 + center_shift
            bells = (np.exp(-0.5 * ((clock - morning) / width) ** 2)
                     + 0.8 * np.exp(-0.5 * ((clock - evening) / width) ** 2))
            weekly = 0.15 * amplitude * np.sin(2 * np.pi * t / week + phase / 2)
            daily = -2.0 * amplitude * depth * bells
        else:
            daily = amplitude * np.sin(2 * np.pi * t / samples_per_day + phase)
            weekly = 0.25 * amplitude * np.sin(2 * np.pi * t / week + phase / 2)
        jitter = rng.normal(0.0, noise, size=n_steps)
        values[n, 0] = np.clip(base + daily + weekly + jitter, 0.0, None)
    mask = np.ones_like(values)
    base_ts = np.datetime64("2024-01-01T00:00:00")
    timestamps = [str(base_ts + np.timedelta64(i * step_minutes, "m")) for i in range(n_steps)]
    series = TrafficSeries(values=values, mask=mask, node_ids=graph.node_ids,
                           timestamps=timestamps, step_minutes=step_minutes)
    return series, graph
