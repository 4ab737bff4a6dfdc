"""Dataset bundles on disk and window/batch materialization in memory.

A bundle directory holds the normalized input series (possibly with injected
missing values), the pre-injection series used for test targets, the graph
edge list, the normalization sidecar, and a manifest. Training and validation
targets come from the input series (missing targets are excluded by the
masked loss); test targets keep the complete pre-injection information.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .localstats import LocalStats, compute_local_stats
from .series import (PredefinedGraph, TrafficSeries, gaussian_kernel_adjacency,
                     read_graph_edges, read_scale_sidecar, read_series,
                     write_graph_edges, write_scale_sidecar, write_series)
from .windows import SegmentSpec, admissible_anchors, segment_index, split_anchors

SERIES_FILE = "series.csv"
CLEAN_FILE = "series_clean.csv"
GRAPH_FILE = "graph.csv"
SCALE_FILE = "scale.json"
MANIFEST_FILE = "manifest.json"


@dataclass
class DataBundle:
    inputs: TrafficSeries      # normalized, possibly injected
    targets: TrafficSeries     # normalized, pre-injection (test-target source)
    graph: PredefinedGraph
    manifest: dict


def write_bundle(out_dir: str | Path, inputs: TrafficSeries, graph: PredefinedGraph,
                 manifest: dict, clean: TrafficSeries | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series(inputs, out / SERIES_FILE)
    files = [SERIES_FILE, GRAPH_FILE, SCALE_FILE]
    if clean is not None:
        write_series(clean, out / CLEAN_FILE)
        files.append(CLEAN_FILE)
    write_graph_edges(graph.edges, out / GRAPH_FILE)
    write_scale_sidecar(inputs.scale_factor, out / SCALE_FILE)
    manifest = dict(manifest, files=sorted(files + [MANIFEST_FILE]))
    with open(out / MANIFEST_FILE, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(bundle_dir: str | Path) -> DataBundle:
    bundle = Path(bundle_dir)
    if not (bundle / SERIES_FILE).exists():
        raise DataError(f"{bundle} is not a dataset bundle (missing {SERIES_FILE})")
    inputs = read_series(bundle / SERIES_FILE)
    scale = read_scale_sidecar(bundle / SCALE_FILE)
    inputs.scale_factor = scale
    clean_path = bundle / CLEAN_FILE
    if clean_path.exists():
        targets = read_series(clean_path)
        targets.scale_factor = scale
    else:
        targets = inputs
    edges = read_graph_edges(bundle / GRAPH_FILE)
    adjacency = gaussian_kernel_adjacency(edges, inputs.node_ids)
    graph = PredefinedGraph(adjacency=adjacency, edges=edges, node_ids=list(inputs.node_ids))
    with open(bundle / MANIFEST_FILE) as fh:
        manifest = json.load(fh)
    return DataBundle(inputs=inputs, targets=targets, graph=graph, manifest=manifest)


class ForecastDataset:
    """Windows over a bundle: inputs + local stats + memory segments + targets."""

    def __init__(self, inputs: TrafficSeries, test_targets: TrafficSeries,
                 graph: PredefinedGraph, spec: SegmentSpec, s_neighbors: int = 5,
                 train_fraction: float = 0.7, val_fraction: float = 0.1,
                 train_targets: TrafficSeries | None = None,
                 impute: str | None = None):
        if inputs.n_steps != test_targets.n_steps:
            raise DataError("input and target series lengths differ")
        if impute not in (None, "mean", "knn"):
            raise DataError(f"unknown imputation kind {impute!r}")
        self.inputs = inputs
        self.test_targets = test_targets
        self.train_targets = train_targets if train_targets is not None else inputs
        self.graph = graph
        self.spec = spec
        self.impute = impute
        anchors = admissible_anchors(inputs.n_steps, spec)
        self.splits = split_anchors(anchors, train_fraction, val_fraction)
        self.stats: LocalStats = compute_local_stats(
            inputs.values, inputs.mask, graph, spec.lookback, s_neighbors)

    @classmethod
    def from_bundle(cls, bundle: DataBundle, spec: SegmentSpec, s_neighbors: int = 5,
                    train_fraction: float = 0.7, val_fraction: float = 0.1,
                    impute: str | None = None) -> "ForecastDataset":
        return cls(inputs=bundle.inputs, test_targets=bundle.targets,
                   graph=bundle.graph, spec=spec, s_neighbors=s_neighbors,
                   train_fraction=train_fraction, val_fraction=val_fraction,
                   impute=impute)

    @property
    def scale_factor(self) -> float:
        return self.inputs.scale_factor

    @property
    def n_nodes(self) -> int:
        return self.inputs.n_nodes

    @property
    def n_features(self) -> int:
        return self.inputs.n_features

    def split_sizes(self) -> dict[str, int]:
        return {name: len(a) for name, a in self.splits.items()}

    def window(self, anchor: int, split: str) -> dict[str, np.ndarray]:
        spec = self.spec
        a0, a1 = anchor - spec.tau, anchor
        item = {"x": self.inputs.values[:, :, a0:a1],
                "mask": self.inputs.mask[:, :, a0:a1]}
        item.update(self.stats.window(a0, a1))
        seg = segment_index(anchor, spec).all
        item["segments"] = self.inputs.values[:, :, seg].transpose(2, 0, 1)
        if self.impute is not None:
            item = self._impute_item(item, seg)
        source = self.test_targets if split == "test" else self.train_targets
        item["target"] = source.values[:, 0, anchor:anchor + spec.horizon]
        item["target_mask"] = source.mask[:, 0, anchor:anchor + spec.horizon]
        item["anchor"] = np.int64(anchor)
        return item

    def _impute_item(self, item: dict[str, np.ndarray], seg: np.ndarray) -> dict:
        """Two-step preprocessing: impute the input window and each contiguous
        memory chunk independently, then mark everything observed."""
        from .baselines import impute_window_values
        item = dict(item)
        item["x"] = impute_window_values(item["x"], item["mask"], self.impute)
        item["mask"] = np.ones_like(item["mask"])
        seg_values = item["segments"].transpose(1, 2, 0)      # [N, F, slots]
        seg_mask = self.inputs.mask[:, :, seg]
        chunks = np.split(np.arange(len(seg)), np.flatnonzero(np.diff(seg) != 1) + 1)
        for chunk in chunks:
            seg_values[:, :, chunk] = impute_window_values(
                seg_values[:, :, chunk], seg_mask[:, :, chunk], self.impute)
        item["segments"] = seg_values.transpose(2, 0, 1)
        return item

    def batches(self, split: str, batch_size: int, shuffle: bool = False,
                rng: np.random.Generator | None = None):
        anchors = self.splits[split]
        if shuffle:
            if rng is None:
                raise DataError("shuffling requires an explicit random generator")
            anchors = rng.permutation(anchors)
        for start in range(0, len(anchors), batch_size):
            chunk = anchors[start:start + batch_size]
            windows = [self.window(int(a), split) for a in chunk]
            yield {key: np.stack([w[key] for w in windows]) for key in windows[0]}
