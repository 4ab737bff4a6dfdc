"""Traffic series and road-graph containers with CSV ingestion.

Storage convention: a missing measurement is stored as value 0 with mask 0;
an observed zero keeps mask 1. CSV files encode missingness as an *empty*
cell so the distinction survives round trips to disk.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import DataError, OrderingError, SchemaError

TIMESTAMP_HEADER = "timestamp"


@dataclass
class TrafficSeries:
    """Dense observation tensor [N, F, T] with an aligned binary mask."""

    values: np.ndarray          # [N, F, T], missing entries stored as 0
    mask: np.ndarray            # [N, F, T], 1 = observed, 0 = missing
    node_ids: list[str]
    timestamps: list[str]       # ISO-8601 strings, kept verbatim for round trips
    step_minutes: int
    scale_factor: float = 1.0

    def __post_init__(self):
        if self.values.shape != self.mask.shape:
            raise SchemaError("values and mask shapes differ")
        if self.values.ndim != 3:
            raise SchemaError(f"expected [N, F, T] tensor, got shape {self.values.shape}")
        if self.values.shape[0] != len(self.node_ids):
            raise SchemaError("node axis does not match node_ids")
        if self.values.shape[2] != len(self.timestamps):
            raise SchemaError("time axis does not match timestamps")
        if self.scale_factor <= 0:
            raise DataError(f"scale_factor must be positive, got {self.scale_factor}")

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def n_steps(self) -> int:
        return self.values.shape[2]

    def missing_fraction(self) -> float:
        return float(1.0 - self.mask.mean())

    def zero_or_missing_ratio(self) -> float:
        """Fraction of entries that are either missing or observed zeros."""
        return float(np.mean((self.mask == 0) | (self.values == 0)))

    def copy(self) -> "TrafficSeries":
        return replace(self, values=self.values.copy(), mask=self.mask.copy(),
                       node_ids=list(self.node_ids), timestamps=list(self.timestamps))


@dataclass
class PredefinedGraph:
    """Directed weighted adjacency over sensor nodes, built from road distances."""

    adjacency: np.ndarray                       # [N, N], entries in [0, 1], diag = 1
    edges: list[tuple[str, str, float]]         # directed (from, to, distance)
    node_ids: list[str]
    _neighbor_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def max_distance(self) -> float:
        """Largest finite edge distance; saturation value for spatial deltas."""
        if not self.edges:
            return 1.0
        return max(d for _, _, d in self.edges)

    def neighbor_order(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbors of ``node`` sorted by road distance (ascending).

        Distances are symmetrised with the minimum over both edge directions;
        ties break on node index so the ordering is deterministic.
        Returns (indices, distances); both empty for isolated nodes.
        """
        if node not in self._neighbor_cache:
            index = {nid: i for i, nid in enumerate(self.node_ids)}
            best: dict[int, float] = {}
            for frm, to, dist in self.edges:
                i, j = index[frm], index[to]
                for a, b in ((i, j), (j, i)):
                    if a == node and b != node:
                        if b not in best or dist < best[b]:
                            best[b] = dist
            order = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
            idx = np.array([k for k, _ in order], dtype=np.int64)
            dst = np.array([v for _, v in order], dtype=np.float64)
            self._neighbor_cache[node] = (idx, dst)
        return self._neighbor_cache[node]


def gaussian_kernel_adjacency(edges: list[tuple[str, str, float]], node_ids: list[str],
                              threshold: float = 0.1) -> np.ndarray:
    """Adjacency with weights exp(-(dist/sigma)^2), sigma = std of distances.

    Weights below ``threshold`` are zeroed; the diagonal is 1 (zero-distance
    self loop). Pairs without a provided edge stay 0.
    """
    index = {nid: i for i, nid in enumerate(node_ids)}
    n = len(node_ids)
    adjacency = np.zeros((n, n), dtype=np.float64)
    if edges:
        sigma = float(np.std([d for _, _, d in edges]))
        if sigma == 0.0:
            sigma = 1.0
        for frm, to, dist in edges:
            w = math.exp(-((dist / sigma) ** 2))
            i, j = index[frm], index[to]
            adjacency[i, j] = max(adjacency[i, j], w)
    adjacency[adjacency < threshold] = 0.0
    np.fill_diagonal(adjacency, 1.0)
    return adjacency


def _parse_timestamp(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text)
    except ValueError as exc:
        raise OrderingError(f"unparseable timestamp {text!r}") from exc


def _format_cell(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def read_series(path: str | Path) -> TrafficSeries:
    """Load a series CSV: header of node ids, first column ISO-8601 timestamp,
    empty cell = missing."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise SchemaError(f"{path}: expected a timestamp column plus node columns")
    header = rows[0]
    node_ids = header[1:]
    if len(set(node_ids)) != len(node_ids):
        raise SchemaError(f"{path}: duplicate node columns")
    n_nodes, n_steps = len(node_ids), len(rows) - 1
    values = np.zeros((n_nodes, 1, n_steps), dtype=np.float64)
    mask = np.zeros((n_nodes, 1, n_steps), dtype=np.float64)
    timestamps = []
    for t, row in enumerate(rows[1:]):
        if len(row) != n_nodes + 1:
            raise SchemaError(f"{path}: row {t + 2} has {len(row)} cells, expected {n_nodes + 1}")
        timestamps.append(row[0])
        for n, cell in enumerate(row[1:]):
            if cell == "":
                continue
            values[n, 0, t] = float(cell)
            mask[n, 0, t] = 1.0
    parsed = [_parse_timestamp(ts) for ts in timestamps]
    for prev, cur in zip(parsed, parsed[1:]):
        if cur <= prev:
            raise OrderingError(f"{path}: timestamps not strictly increasing near {cur}")
    step_minutes = int(round((parsed[1] - parsed[0]).total_seconds() / 60)) if len(parsed) > 1 else 5
    return TrafficSeries(values=values, mask=mask, node_ids=list(node_ids),
                         timestamps=timestamps, step_minutes=step_minutes)


def write_series(series: TrafficSeries, path: str | Path) -> None:
    """Write the series in the ingestion CSV format (missing -> empty cell)."""
    if series.n_features != 1:
        raise SchemaError("CSV export supports a single feature dimension")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([TIMESTAMP_HEADER] + series.node_ids)
        for t, ts in enumerate(series.timestamps):
            row = [ts]
            for n in range(series.n_nodes):
                if series.mask[n, 0, t] == 0:
                    row.append("")
                else:
                    row.append(_format_cell(series.values[n, 0, t]))
            writer.writerow(row)


def read_graph_edges(path: str | Path) -> list[tuple[str, str, float]]:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["from", "to", "distance"]:
        raise SchemaError(f"{path}: expected header 'from,to,distance'")
    edges = []
    for i, row in enumerate(rows[1:]):
        if len(row) != 3:
            raise SchemaError(f"{path}: row {i + 2} has {len(row)} cells, expected 3")
        dist = float(row[2])
        if dist < 0:
            raise SchemaError(f"{path}: negative distance on row {i + 2}")
        edges.append((row[0], row[1], dist))
    return edges


def write_graph_edges(edges: list[tuple[str, str, float]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["from", "to", "distance"])
        for frm, to, dist in edges:
            writer.writerow([frm, to, _format_cell(dist)])


def ingest_series(series_file: str | Path, graph_file: str | Path,
                  kernel_threshold: float = 0.1) -> tuple[TrafficSeries, PredefinedGraph]:
    """Read a series CSV and a directed edge list, building the kernel adjacency.

    Every edge endpoint must be one of the series' node columns.
    """
    series = read_series(series_file)
    edges = read_graph_edges(graph_file)
    known = set(series.node_ids)
    unknown = sorted({n for e in edges for n in e[:2] if n not in known})
    if unknown:
        raise SchemaError(f"graph references nodes absent from the series: {unknown[:5]}")
    adjacency = gaussian_kernel_adjacency(edges, series.node_ids, threshold=kernel_threshold)
    graph = PredefinedGraph(adjacency=adjacency, edges=edges, node_ids=list(series.node_ids))
    return series, graph


def normalize(series: TrafficSeries, train_fraction: float = 0.7) -> TrafficSeries:
    """Divide values by the max observed value of the chronological training split.

    Masked entries stay exactly 0. The scale factor is recorded on the result
    for inverse transforms at metric time.
    """
    if not 0 < train_fraction <= 1:
        raise DataError(f"train_fraction must be in (0, 1], got {train_fraction}")
    t_train = int(series.n_steps * train_fraction)
    train_mask = series.mask[:, :, :t_train]
    if train_mask.sum() == 0:
        raise DataError("training split contains no observed values")
    scale = float((series.values[:, :, :t_train] * train_mask).max())
    if scale <= 0:
        raise DataError("training split max is not positive; cannot scale")
    out = series.copy()
    out.values = out.values / scale
    out.scale_factor = scale
    return out


def denormalize(values: np.ndarray, scale_factor: float) -> np.ndarray:
    return values * scale_factor


def write_scale_sidecar(scale_factor: float, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump({"scale_factor": scale_factor}, fh)
        fh.write("\n")


def read_scale_sidecar(path: str | Path) -> float:
    with open(path) as fh:
        payload = json.load(fh)
    return float(payload["scale_factor"])
