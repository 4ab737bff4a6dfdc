import numpy as np
import pytest

from gcnm.series import PredefinedGraph, TrafficSeries, gaussian_kernel_adjacency


def make_series(values: np.ndarray, mask: np.ndarray | None = None,
                step_minutes: int = 5) -> TrafficSeries:
    """Build a TrafficSeries from an [N, F, T] array; NaNs become missing."""
    values = np.asarray(values, dtype=np.float64)
    if mask is None:
        mask = (~np.isnan(values)).astype(np.float64)
    values = np.where(mask > 0, np.nan_to_num(values), 0.0)
    n, _, t = values.shape
    base = np.datetime64("2024-01-01T00:00:00")
    timestamps = [str(base + np.timedelta64(i * step_minutes, "m")) for i in range(t)]
    return TrafficSeries(values=values, mask=np.asarray(mask, dtype=np.float64),
                         node_ids=[f"n{i}" for i in range(n)], timestamps=timestamps,
                         step_minutes=step_minutes)


def chain_graph(n_nodes: int, spacing: float = 1.0) -> PredefinedGraph:
    """Bidirectional chain n0 - n1 - ... with unit spacing distances."""
    node_ids = [f"n{i}" for i in range(n_nodes)]
    edges = []
    for i in range(n_nodes - 1):
        edges.append((node_ids[i], node_ids[i + 1], spacing))
        edges.append((node_ids[i + 1], node_ids[i], spacing))
    adjacency = gaussian_kernel_adjacency(edges, node_ids)
    return PredefinedGraph(adjacency=adjacency, edges=edges, node_ids=node_ids)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
